//! Dirichlet heat semigroup on the disc for radial functions, by expansion in
//! the modes J0(j_k r/R).

use crate::bessel::{j0, j0_zero, j1};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, RadialField, RadialGrid};
use crate::quad::gauss_legendre_unit;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscEigenbasis {
    pub radius: f64,
    pub zeros: Vec<f64>,
    /// λ_k = (j_k/R)².
    pub lambda: Vec<f64>,
    /// n_k = (R²/2) J1(j_k)², the squared weighted norm of mode k.
    pub norms: Vec<f64>,
}

impl DiscEigenbasis {
    pub fn build(radius: f64, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Domain("basis needs at least one mode".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius {radius} must be positive")));
        }
        let zeros: Vec<f64> = (1..=modes).map(j0_zero).collect::<Result<_>>()?;
        let lambda = zeros.iter().map(|z| (z / radius).powi(2)).collect();
        let norms = zeros.iter().map(|&z| 0.5 * radius * radius * j1(z).powi(2)).collect();
        Ok(DiscEigenbasis { radius, zeros, lambda, norms })
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Mode k (0-based) at radius r.
    pub fn mode(&self, k: usize, r: f64) -> f64 {
        j0(self.zeros[k] * r / self.radius)
    }

    pub fn mode_field(&self, grid: RadialGrid, k: usize) -> Result<RadialField> {
        let mut f = RadialField::from_fn(grid, |r| self.mode(k, r))?;
        f.values[0] = 0.0;
        Ok(f)
    }
}

/// Projection and evaluation matrices tying a basis to a grid.
#[derive(Debug, Clone)]
pub struct ModalOps {
    pub basis: DiscEigenbasis,
    pub grid: RadialGrid,
    /// K × (N+1), row-major.
    proj: Vec<f64>,
    /// (N+1) × K, row-major.
    eval: Vec<f64>,
}

/// Nodes of the cubic Lagrange stencil used on cell [i, i+1].
fn stencil(i: usize, n: usize) -> usize {
    i.saturating_sub(1).min(n - 3)
}

fn lagrange4(x: f64, xs: [f64; 4]) -> [f64; 4] {
    let mut l = [1.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                l[a] *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
    }
    l
}

impl ModalOps {
    /// Projection weights integrate the cubic interpolant of u·r² in ρ against
    /// each mode, cell by cell, with a Gauss rule sized to the local phase
    /// change of the mode.
    pub fn new(basis: DiscEigenbasis, grid: RadialGrid) -> Result<Self> {
        if (basis.radius - grid.radius).abs() > 1e-12 * grid.radius {
            return Err(Error::Domain(format!(
                "basis radius {} differs from grid radius {}",
                basis.radius, grid.radius
            )));
        }
        let n = grid.intervals;
        let h = grid.h();
        let rules: Vec<(Vec<f64>, Vec<f64>)> =
            (0..=64).map(|m| if m == 0 { (vec![], vec![]) } else { gauss_legendre_unit(m) }).collect();
        let kk = basis.len();
        let proj: Vec<f64> = (0..kk)
            .into_par_iter()
            .flat_map_iter(|k| {
                let z = basis.zeros[k];
                let mut row = vec![0.0; n + 1];
                for i in 0..n {
                    let phase = z * grid.r(i) / grid.radius * h;
                    let m = (5 + phase.ceil() as usize).min(64);
                    let (xs, ws) = &rules[m];
                    let s = stencil(i, n);
                    let nodes = [s as f64, s as f64 + 1.0, s as f64 + 2.0, s as f64 + 3.0];
                    for (x, w) in xs.iter().zip(ws) {
                        let pos = i as f64 + x;
                        let v = j0(z * (-(pos * h)).exp()) * w * h;
                        let l = lagrange4(pos, nodes);
                        for a in 0..4 {
                            row[s + a] += l[a] * v;
                        }
                    }
                }
                let inv = 1.0 / basis.norms[k];
                for (i, w) in row.iter_mut().enumerate() {
                    *w *= grid.r(i).powi(2) * inv;
                }
                row.into_iter()
            })
            .collect();
        let mut eval = vec![0.0; (n + 1) * kk];
        eval.par_chunks_mut(kk).enumerate().skip(1).for_each(|(i, row)| {
            let r = grid.r(i);
            for (k, e) in row.iter_mut().enumerate() {
                *e = basis.mode(k, r);
            }
        });
        Ok(ModalOps { basis, grid, proj, eval })
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }

    fn check(&self, u: &RadialField) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::Domain("field lives on a different grid".into()));
        }
        Ok(())
    }

    /// c_k = (1/n_k)∫₀^R u J0(j_k r/R) r dr. Below the innermost node the
    /// field contributes its core mass.
    pub fn project(&self, u: &RadialField) -> Result<Vec<f64>> {
        self.check(u)?;
        let n = self.grid.intervals;
        let rm = self.grid.r_min();
        let core = u.core();
        let np = n + 1;
        Ok(self
            .proj
            .par_chunks(np)
            .enumerate()
            .map(|(k, row)| {
                let body: f64 = row.iter().zip(&u.values).map(|(a, b)| a * b).sum();
                body + core * j0(self.basis.zeros[k] * rm / self.grid.radius) / self.basis.norms[k]
            })
            .collect())
    }

    /// Σ c_k J0(j_k r_i/R) at the grid nodes; zero at the wall.
    pub fn evaluate(&self, c: &[f64]) -> Result<RadialField> {
        let kk = self.modes();
        if c.len() != kk {
            return Err(Error::Domain(format!("{} coefficients for {kk} modes", c.len())));
        }
        let vals = self.eval.par_chunks(kk).map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum()).collect();
        RadialField::new(self.grid, vals)
    }

    pub fn decay(&self, c: &[f64], t: f64) -> Vec<f64> {
        c.iter().zip(&self.basis.lambda).map(|(c, l)| c * (-l * t).exp()).collect()
    }

    /// e^{tΔ}u.
    pub fn heat_apply(&self, u: &RadialField, t: f64) -> Result<RadialField> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time {t} must be nonnegative")));
        }
        let c = self.project(u)?;
        self.evaluate(&self.decay(&c, t))
    }

    /// |2πΣc_k²n_k − ‖u‖²_{L²}|.
    pub fn parseval_defect(&self, u: &RadialField) -> Result<f64> {
        let c = self.project(u)?;
        let s: f64 = c.iter().zip(&self.basis.norms).map(|(c, n)| c * c * n).sum();
        Ok((2.0 * PI * s - lp_norm(u, 2.0).powi(2)).abs())
    }
}

/// Product-integration weights (α, β) with
/// ∫₀^τ e^{−λ(τ−σ)}((1 − σ/τ)a + (σ/τ)b) dσ = αa + βb.
pub fn product_weights(lambda: f64, tau: f64) -> (f64, f64) {
    let x = lambda * tau;
    if x < 1e-3 {
        let a = 0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0;
        let b = 0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0;
        return (tau * a, tau * b);
    }
    let e = (-x).exp();
    let phi1 = -(-x).exp_m1() / x;
    (tau * (phi1 - e) / x, tau * (1.0 - phi1) / x)
}

/// Mode-wise ∫₀^{t_j} e^{−λ(t_j−s)} c(s) ds at every time t_j, for c piecewise
/// linear between the samples. `times[0]` is the lower limit.
pub fn duhamel_coeffs(lambda: &[f64], times: &[f64], coeffs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if times.len() != coeffs.len() || times.is_empty() {
        return Err(Error::Domain("source samples and times differ in length".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("source times must increase".into()));
    }
    if coeffs.iter().any(|c| c.len() != lambda.len()) {
        return Err(Error::Domain("source coefficient length differs from the mode count".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut acc = vec![0.0; lambda.len()];
    out.push(acc.clone());
    for j in 1..times.len() {
        let tau = times[j] - times[j - 1];
        for (k, &l) in lambda.iter().enumerate() {
            let (a, b) = product_weights(l, tau);
            acc[k] = (-l * tau).exp() * acc[k] + a * coeffs[j - 1][k] + b * coeffs[j][k];
        }
        out.push(acc.clone());
    }
    Ok(out)
}

/// ∫₀ᵗ e^{(t−s)Δ} source(s) ds with the source sampled at `quad_steps + 1`
/// uniform times.
pub fn duhamel<S>(ops: &ModalOps, mut source: S, t: f64, quad_steps: usize) -> Result<RadialField>
where
    S: FnMut(f64) -> Result<RadialField>,
{
    if !(t > 0.0) || quad_steps == 0 {
        return Err(Error::Domain(format!("need t > 0 and at least one step (t = {t})")));
    }
    let times: Vec<f64> = (0..=quad_steps).map(|j| t * j as f64 / quad_steps as f64).collect();
    let coeffs = times.iter().map(|&s| ops.project(&source(s)?)).collect::<Result<Vec<_>>>()?;
    let d = duhamel_coeffs(&ops.basis.lambda, &times, &coeffs)?;
    ops.evaluate(d.last().expect("nonempty"))
}

/// Σ_{k ≤ k_terms} 2^{−k}‖a − b‖_{L^k}/(1 + ‖a − b‖_{L^k}).
pub fn y_distance(a: &RadialField, b: &RadialField, k_terms: usize) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Domain("fields live on different grids".into()));
    }
    let d = RadialField::new(a.grid, a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect())?;
    Ok((1..=k_terms)
        .map(|k| {
            let n = lp_norm(&d, k as f64);
            0.5f64.powi(k as i32) * n / (1.0 + n)
        })
        .sum())
}

/// Smooth fields vanishing at the wall: (1 − x²)·Σₖ aₖ x²ᵏ with x = r/R,
/// k < 4, aₖ uniform on [0, 2).
pub fn smooth_fields(grid: RadialGrid, count: usize, seed: u64) -> Vec<RadialField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0)).collect();
            RadialField::from_fn(grid, |r| {
                let x2 = (r / grid.radius).powi(2);
                (1.0 - x2) * a.iter().rev().fold(0.0, |acc, c| acc * x2 + c)
            })
            .expect("grid nodes are finite")
        })
        .collect()
}

/// Nonnegative test fields: a few Gaussian bumps in r plus a floor, drawn from
/// a seeded stream.
pub fn random_fields(grid: RadialGrid, count: usize, seed: u64) -> Vec<RadialField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bumps = rng.random_range(1..=6);
            let spec: Vec<(f64, f64, f64)> = (0..bumps)
                .map(|_| {
                    let amp = rng.random_range(0.0..3.0);
                    let centre = rng.random_range(0.0..1.0) * grid.radius;
                    let width = rng.random_range(0.05..0.4) * grid.radius;
                    (amp, centre, width)
                })
                .collect();
            let floor = rng.random_range(0.0..0.5);
            RadialField::from_fn(grid, |r| {
                floor + spec.iter().map(|(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum::<f64>()
            })
            .expect("finite bumps")
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct JensenReport {
    pub t: f64,
    pub modes: usize,
    /// Largest grid-wise e^{tΔ}H(φ) − H(e^{tΔ}φ) over all fields.
    pub max_excess: f64,
    /// Allowance ε_K the excess is tested against (largest over fields).
    pub eps: f64,
    /// log10 of the truncation part of ε_K; it underflows in linear scale
    /// once λ_{K+1}t is a few hundred.
    pub log10_eps_trunc: f64,
    pub pass: bool,
}

/// Truncation allowance: the first omitted mode after time t, in sup norm,
/// returned as (log10 of it, roundoff floor). The coefficient comes from an
/// ops object carrying one extra mode.
pub fn truncation_eps(ops_plus: &ModalOps, data: &RadialField, t: f64) -> Result<(f64, f64)> {
    let c = ops_plus.project(data)?;
    let k = c.len() - 1;
    let log10_lead = (c[k].abs().ln() - ops_plus.basis.lambda[k] * t) / std::f64::consts::LN_10;
    let scale = data.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok((log10_lead, 1e-10 * (1.0 + scale)))
}

/// Checks e^{tΔ}H(φ) ≤ H(e^{tΔ}φ) + ε_K grid-wise for every field.
/// `ops_plus` must have one more mode than `ops`.
pub fn jensen_check<H: Fn(f64) -> f64 + Sync>(
    ops: &ModalOps,
    ops_plus: &ModalOps,
    fields: &[RadialField],
    h: H,
    t: f64,
) -> Result<JensenReport> {
    if ops_plus.modes() != ops.modes() + 1 {
        return Err(Error::Domain("ops_plus must carry exactly one extra mode".into()));
    }
    let per: Vec<(f64, f64, f64)> = fields
        .par_iter()
        .map(|phi| -> Result<(f64, f64, f64)> {
            let hphi = phi.map(&h)?;
            let lhs = ops.heat_apply(&hphi, t)?;
            let inner = ops.heat_apply(phi, t)?;
            let (la, fa) = truncation_eps(ops_plus, &hphi, t)?;
            let (lb, fb) = truncation_eps(ops_plus, phi, t)?;
            let log_lead = la.max(lb);
            let eps = 10f64.powf(log_lead) + fa.max(fb);
            // the wall node carries no mode content
            let excess =
                (1..lhs.values.len()).map(|i| lhs.values[i] - h(inner.values[i])).fold(f64::NEG_INFINITY, f64::max);
            Ok((excess, eps, log_lead))
        })
        .collect::<Result<_>>()?;
    let max_excess = per.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let eps = per.iter().map(|p| p.1).fold(0.0, f64::max);
    let log10_eps_trunc = per.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let pass = per.iter().all(|(e, k, _)| e <= k);
    Ok(JensenReport { t, modes: ops.modes(), max_excess, eps, log10_eps_trunc, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(k: usize, n: usize) -> ModalOps {
        let grid = RadialGrid::new(1.0, n, 14.0).unwrap();
        ModalOps::new(DiscEigenbasis::build(1.0, k).unwrap(), grid).unwrap()
    }

    #[test]
    fn basis_values_and_scaling() {
        let b = DiscEigenbasis::build(1.0, 32).unwrap();
        assert!((b.zeros[0] - 2.404826).abs() < 1e-6);
        assert!((b.zeros[1] - 5.520078).abs() < 1e-6);
        assert!((b.lambda[0] - 5.783186).abs() < 1e-6);
        let b16 = DiscEigenbasis::build(1.0, 16).unwrap();
        assert_eq!(&b.zeros[..16], &b16.zeros[..]);
        let b2 = DiscEigenbasis::build(2.0, 32).unwrap();
        for k in 0..32 {
            assert!((b2.lambda[k] - b.lambda[k] / 4.0).abs() < 1e-12 * b.lambda[k]);
            assert!(b.norms[k] > 0.0);
        }
    }

    #[test]
    fn mode_projects_to_unit_vector() {
        let o = ops(64, 2048);
        let m = o.basis.mode_field(o.grid, 0).unwrap();
        let c = o.project(&m).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-8, "{}", c[0]);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-8));
        let z = o.project(&RadialField::constant(o.grid, 0.0)).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
        let u = o.heat_apply(&m, 0.05).unwrap();
        let e = (-o.basis.lambda[0] * 0.05).exp();
        for i in 1..u.values.len() {
            assert!((u.values[i] - e * m.values[i]).abs() < 1e-8 * e);
        }
    }

    #[test]
    fn semigroup_property() {
        let o = ops(128, 2048);
        let u = RadialField::from_fn(o.grid, |r| (1.0 - r * r) * (1.0 + r)).unwrap();
        let a = o.heat_apply(&o.heat_apply(&u, 0.01).unwrap(), 0.02).unwrap();
        let b = o.heat_apply(&u, 0.03).unwrap();
        let d = a.values.iter().zip(&b.values).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn parseval_for_smooth_field() {
        let o = ops(256, 2048);
        let u = RadialField::from_fn(o.grid, |r| (1.0 - r * r).powi(2)).unwrap();
        assert!(o.parseval_defect(&u).unwrap() < 1e-8);
    }

    #[test]
    fn product_weights_match_quadrature() {
        for (l, tau) in [(1e-6, 0.1), (0.5, 0.01), (5.0, 0.2), (3e4, 0.01), (0.02, 0.04)] {
            let (a, b) = product_weights(l, tau);
            let qa =
                crate::quad::integrate_scalar(|s| (-l * (tau - s)).exp() * (1.0 - s / tau), 0.0, tau, 1e-13, 1e-300)
                    .unwrap();
            let qb =
                crate::quad::integrate_scalar(|s| (-l * (tau - s)).exp() * s / tau, 0.0, tau, 1e-13, 1e-300).unwrap();
            assert!((a - qa).abs() < 1e-12 * qa.abs().max(1e-300) + 1e-300, "λ={l}");
            assert!((b - qb).abs() < 1e-12 * qb.abs().max(1e-300), "λ={l}");
        }
    }

    #[test]
    fn duhamel_of_constant_mode_source() {
        let o = ops(32, 1024);
        let m = o.basis.mode_field(o.grid, 0).unwrap();
        let src = m.map(|v| 3.0 * v).unwrap();
        let t = 0.07;
        let d = duhamel(&o, |_| Ok(src.clone()), t, 4).unwrap();
        let l = o.basis.lambda[0];
        let f = 3.0 * (1.0 - (-l * t).exp()) / l;
        for i in 1..d.values.len() {
            assert!((d.values[i] - f * m.values[i]).abs() < 1e-7 * f);
        }
        let zero = duhamel(&o, |_| Ok(RadialField::constant(o.grid, 0.0)), t, 4).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duhamel_second_order_in_time() {
        let o = ops(32, 1024);
        let m = o.basis.mode_field(o.grid, 1).unwrap();
        // source (1 + sin 20s) · mode 2, exact integral by quadrature
        let t = 0.3;
        let l = o.basis.lambda[1];
        let exact =
            crate::quad::integrate_scalar(|s| (-l * (t - s)).exp() * (1.0 + (20.0 * s).sin()), 0.0, t, 1e-13, 1e-15)
                .unwrap();
        let err = |q: usize| {
            let d = duhamel(&o, |s| m.map(|v| v * (1.0 + (20.0 * s).sin())), t, q).unwrap();
            let c = o.project(&d).unwrap();
            (c[1] - exact).abs()
        };
        let ratio = err(32) / err(64);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn y_distance_bounds() {
        let g = RadialGrid::new(1.0, 256, 10.0).unwrap();
        let a = RadialField::from_fn(g, |r| 1.0 - r).unwrap();
        let b = RadialField::from_fn(g, |r| 5.0 * (1.0 - r * r)).unwrap();
        assert_eq!(y_distance(&a, &a, 20).unwrap(), 0.0);
        let d = y_distance(&a, &b, 20).unwrap();
        assert!(d > 0.0 && d < 1.0 - 0.5f64.powi(20));
    }

    #[test]
    fn kernel_mass_and_contraction() {
        let o = ops(256, 2048);
        let one = RadialField::constant(o.grid, 1.0);
        for t in [0.01, 0.1] {
            let u = o.heat_apply(&one, t).unwrap();
            assert!(u.min() >= -1e-10 && u.max() <= 1.0 + 1e-10, "t={t}");
        }
        for phi in random_fields(o.grid, 10, 7) {
            let u = o.heat_apply(&phi, 0.01).unwrap();
            for p in [1.0, 2.0, f64::INFINITY] {
                assert!(lp_norm(&u, p) <= lp_norm(&phi, p) + 1e-8);
            }
            assert!(u.min() >= -1e-10);
        }
    }
}
