//! Singular steady state U of −Δu = f(u) by radial shooting from a seed
//! near the origin, and the elliptic certificates on the result.
//!
//! With t = −log r the radial equation is u_tt = −e^{−2t} f(u). The
//! integration runs in the hodograph variables (t, p = 1/u_t) as functions of
//! u, from the seed value down to u = 0:
//!
//!   dt/du = p,   dp/du = e^{−2t} f(u) p³.
//!
//! This system stays smooth up to the wall even when u_t is unbounded there
//! (the pure model with B = 2 has p = u, t = u²/2), and the wall radius
//! R = e^{−t(0)} falls out as the end point.

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlinearity::NonlinearitySpec;
use crate::ode;
use crate::transform::{eval_tilde_u, tilde_u_dt};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingOptions {
    pub r_seed: f64,
    pub ode_tol: f64,
    /// Largest admissible wall radius.
    pub r_max: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { r_seed: 1e-6, ode_tol: 1e-9, r_max: 1e3 }
    }
}

/// Shooting solution with dense output.
#[derive(Debug, Clone)]
pub struct SingularProfile {
    pub spec: NonlinearitySpec,
    pub radius: f64,
    pub r_seed: f64,
    pub u_seed: f64,
    /// Value of u where the integration stopped; the last stretch to the wall
    /// is closed linearly in u.
    pub u_end: f64,
    t_wall: f64,
    sol: ode::Solution<2>,
}

impl SingularProfile {
    pub fn steps(&self) -> usize {
        self.sol.steps.len()
    }

    /// (u, u_t) at t = −log r, for r in [r_seed, R].
    fn state_at_t(&self, t: f64) -> Result<(f64, f64)> {
        let t_seed = -self.r_seed.ln();
        if t > t_seed + 1e-12 {
            return Err(Error::Domain(format!("t = {t} beyond the seed")));
        }
        let end = self.sol.y_end;
        if t <= end[0] {
            // between the last ODE point and the wall: dt/du = p
            let u = ((t - self.t_wall) / end[1]).max(0.0);
            return Ok((u, 1.0 / end[1]));
        }
        // t(σ) decreases along the steps
        let steps = &self.sol.steps;
        let k = steps.partition_point(|s| s.y0()[0] > t).saturating_sub(1);
        let st = &steps[k];
        let (mut lo, mut hi) = (st.x0, st.x0 + st.h);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let y = st.eval(x);
            let g = y[0] - t;
            if g.abs() < 1e-15 * t.abs().max(1.0) {
                break;
            }
            if g > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            // dt/dσ = −p
            let xn = x + g / y[1];
            x = if xn > lo && xn < hi { xn } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 * self.u_seed {
                break;
            }
        }
        let y = st.eval(x);
        Ok((self.u_seed - x, 1.0 / y[1]))
    }

    /// U(r) and dU/dr.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0 && r <= self.radius * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("r = {r} outside (0, R = {}]", self.radius)));
        }
        if r < self.r_seed {
            let u = eval_tilde_u(&self.spec, r)?;
            let ut = tilde_u_dt(&self.spec, r, u)?;
            return Ok((u, -ut / r));
        }
        let (u, ut) = self.state_at_t(-r.ln())?;
        Ok((u, -ut / r))
    }

    /// Samples the profile on a grid with the wall at R. Nodes inside the seed
    /// radius take the seed values ũ.
    pub fn to_field(&self, intervals: usize, rho_max: f64) -> Result<RadialField> {
        let grid = RadialGrid::new(self.radius, intervals, rho_max)?;
        let mut vals = Vec::with_capacity(grid.len());
        let mut der = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (u, du) = if i == 0 { (0.0, self.eval(self.radius)?.1) } else { self.eval(grid.r(i))? };
            vals.push(u);
            der.push(du);
        }
        let mut field = RadialField::new(grid, vals)?;
        field.deriv = Some(der);
        Ok(field)
    }

    /// ∫₀ʳ f(U) s ds = −rU′(r), from the radial equation.
    pub fn source_core_mass(&self, r: f64) -> Result<f64> {
        Ok(-r * self.eval(r)?.1)
    }
}

/// Integrates the radial equation outward from the seed ũ(r_seed).
pub fn build_singular_profile(spec: &NonlinearitySpec, opts: &ShootingOptions) -> Result<SingularProfile> {
    let r_seed = opts.r_seed;
    if !(r_seed > 0.0 && r_seed < 0.5) {
        return Err(Error::Domain(format!("seed radius {r_seed} out of range")));
    }
    let t_seed = -r_seed.ln();
    let u_seed = eval_tilde_u(spec, r_seed)?;
    let ut_seed = tilde_u_dt(spec, r_seed, u_seed)?;
    if !(ut_seed > 0.0) {
        return Err(Error::Construction(format!("seed slope {ut_seed} is not positive")));
    }
    let u_end = 1e-13 * u_seed;
    let rhs = |sigma: f64, y: &[f64; 2]| -> [f64; 2] {
        let u = u_seed - sigma;
        let (t, p) = (y[0], y[1]);
        if !(p > 0.0) || !(u > 0.0) {
            return [f64::NAN, f64::NAN];
        }
        let lf = match spec.log_f(u) {
            Ok(v) => v,
            Err(_) => return [f64::NAN, f64::NAN],
        };
        let src = (lf + 3.0 * p.ln() - 2.0 * t).exp();
        [-p, -src]
    };
    let o = ode::Options { rtol: opts.ode_tol, atol: opts.ode_tol * 1e-3, h_init: 1e-4 * u_seed, ..Default::default() };
    let sol = ode::integrate(rhs, 0.0, [t_seed, 1.0 / ut_seed], u_seed - u_end, &o)
        .map_err(|e| Error::Construction(format!("shooting failed: {e}")))?;
    let end = sol.y_end;
    let t_wall = end[0] - end[1] * u_end;
    let radius = (-t_wall).exp();
    if !(radius.is_finite() && radius <= opts.r_max) {
        return Err(Error::Construction(format!("no zero crossing below r_max = {} (R = {radius})", opts.r_max)));
    }
    Ok(SingularProfile { spec: spec.clone(), radius, r_seed, u_seed, u_end, t_wall, sol })
}

/// Profile plus its grid samples. The seed radius is pushed below the
/// innermost node when the grid reaches further in than the requested seed.
pub fn build_singular_field(
    spec: &NonlinearitySpec,
    opts: &ShootingOptions,
    intervals: usize,
    rho_max: f64,
) -> Result<(SingularProfile, RadialField)> {
    let mut prof = build_singular_profile(spec, opts)?;
    let r_min = prof.radius * (-rho_max).exp();
    if r_min < prof.r_seed {
        let o = ShootingOptions { r_seed: 0.5 * r_min, ..*opts };
        prof = build_singular_profile(spec, &o)?;
    }
    let field = prof.to_field(intervals, rho_max)?;
    Ok((prof, field))
}

/// −(δ²_ρU)_i/r_i² − f(U_i) with norms restricted to r ≥ r_cut.
#[derive(Debug, Clone, Serialize)]
pub struct EllipticResidual {
    pub residual: Vec<f64>,
    pub r_cut: f64,
    pub l1: f64,
    pub linf: f64,
    /// max |residual|·r² over r ≥ r_cut, a scale-free companion to `linf`.
    pub linf_scaled: f64,
}

pub fn fd_elliptic_residual(spec: &NonlinearitySpec, u: &RadialField, r_cut: Option<f64>) -> Result<EllipticResidual> {
    let g = u.grid;
    let h = g.h();
    let r_cut = r_cut.unwrap_or(1e-3 * g.radius);
    let n = g.intervals;
    let mut res = vec![0.0; g.len()];
    for (i, slot) in res.iter_mut().enumerate().take(n).skip(1) {
        let r = g.r(i);
        let lap = (u.values[i + 1] - 2.0 * u.values[i] + u.values[i - 1]) / (h * h * r * r);
        *slot = -lap - spec.evaluate(u.values[i], 0)?;
    }
    let w = g.weights();
    let mut l1 = 0.0;
    let mut linf = 0.0_f64;
    let mut linf_scaled = 0.0_f64;
    for i in 1..n {
        let r = g.r(i);
        if r >= r_cut {
            l1 += w[i] * res[i].abs();
            linf = linf.max(res[i].abs());
            linf_scaled = linf_scaled.max(res[i].abs() * r * r);
        }
    }
    Ok(EllipticResidual { residual: res, r_cut, l1: 2.0 * PI * l1, linf, linf_scaled })
}

/// Radial C² test functions with compact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// (1 − (r/ρ₀)²)³ on r < ρ₀.
    CenteredBump {
        rho0: f64,
    },
    /// ((r − a)(b − r))⁶ on a < r < b, scaled to peak 1. The sixth power keeps
    /// Δφ smooth at the support ends, so grid quadrature converges at full order.
    AnnularBump {
        a: f64,
        b: f64,
    },
    Zero,
}

impl TestFunction {
    pub fn support_end(&self) -> f64 {
        match *self {
            TestFunction::CenteredBump { rho0 } => rho0,
            TestFunction::AnnularBump { b, .. } => b,
            TestFunction::Zero => 0.0,
        }
    }

    /// (φ, Δφ) at r.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match *self {
            TestFunction::CenteredBump { rho0 } => {
                if r >= rho0 {
                    return (0.0, 0.0);
                }
                let s = 1.0 - (r / rho0).powi(2);
                // φ = s³, φ′ = −6r s²/ρ₀², φ″ = −6s²/ρ₀² + 24 r² s/ρ₀⁴
                let a = rho0 * rho0;
                let d1 = -6.0 * r * s * s / a;
                let d2 = -6.0 * s * s / a + 24.0 * r * r * s / (a * a);
                let lap = d2 + if r > 0.0 { d1 / r } else { d2 };
                (s * s * s, lap)
            }
            TestFunction::AnnularBump { a, b } => {
                if r <= a || r >= b {
                    return (0.0, 0.0);
                }
                let c = (0.5 * (b - a)).powi(2);
                let q = (r - a) * (b - r) / c;
                let dq = (a + b - 2.0 * r) / c;
                let d1 = 6.0 * q.powi(5) * dq;
                let d2 = 30.0 * q.powi(4) * dq * dq - 12.0 * q.powi(5) / c;
                (q.powi(6), d2 + d1 / r)
            }
            TestFunction::Zero => (0.0, 0.0),
        }
    }
}

/// 2π∫_{r_min}^R (UΔφ + f(U)φ) r dr on the grid.
pub fn distributional_pairing(spec: &NonlinearitySpec, u: &RadialField, phi: TestFunction) -> Result<f64> {
    if phi.support_end() > u.grid.radius {
        return Err(Error::Domain("test function not supported in the disc".into()));
    }
    if phi == TestFunction::Zero {
        return Ok(0.0);
    }
    let w = u.grid.weights();
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let r = u.grid.r(i);
        let (p, lp) = phi.eval(r);
        if p == 0.0 && lp == 0.0 {
            continue;
        }
        acc += wi * (u.values[i] * lp + spec.evaluate(u.values[i], 0)? * p);
    }
    Ok(2.0 * PI * acc)
}

/// Partial integrals of f(U)^p and U^q over r ≥ r_min at decades of r_min.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub r_mins: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub j2: Vec<f64>,
    pub j4: Vec<f64>,
    pub i1_cauchy: bool,
    pub j2_cauchy: bool,
    pub j4_cauchy: bool,
    pub i2_divergent: bool,
}

impl IntegrabilityReport {
    /// Index of the sample at r_min (closest decade).
    pub fn at(&self, r_min: f64) -> Option<usize> {
        self.r_mins.iter().position(|r| (r / r_min).ln().abs() < 0.5)
    }
}

pub fn integrability_report(spec: &NonlinearitySpec, u: &RadialField) -> Result<IntegrabilityReport> {
    let g = u.grid;
    let f: Vec<f64> = u.values.iter().map(|&v| spec.evaluate(v, 0)).collect::<Result<_>>()?;
    let pw = |v: &[f64], p: i32| -> Vec<f64> { v.iter().map(|x| x.powi(p)).collect() };
    let c_i1 = g.cumulative_integral(&f);
    let c_i2 = g.cumulative_integral(&pw(&f, 2));
    let c_j2 = g.cumulative_integral(&pw(&u.values, 2));
    let c_j4 = g.cumulative_integral(&pw(&u.values, 4));
    let mut rep = IntegrabilityReport {
        r_mins: Vec::new(),
        i1: Vec::new(),
        i2: Vec::new(),
        j2: Vec::new(),
        j4: Vec::new(),
        i1_cauchy: false,
        j2_cauchy: false,
        j4_cauchy: false,
        i2_divergent: false,
    };
    let mut k = (g.radius.log10()).floor() as i32 - 1;
    loop {
        let rm = 10f64.powi(k);
        if rm < g.r_min() * (1.0 - 1e-9) {
            break;
        }
        let i = (((g.radius / rm).ln() / g.h()).round() as usize).min(g.intervals);
        rep.r_mins.push(g.r(i));
        rep.i1.push(2.0 * PI * c_i1[i]);
        rep.i2.push(2.0 * PI * c_i2[i]);
        rep.j2.push(2.0 * PI * c_j2[i]);
        rep.j4.push(2.0 * PI * c_j4[i]);
        k -= 1;
    }
    let cauchy = |v: &[f64]| {
        let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        d.len() >= 2 && d.windows(2).all(|w| w[1] <= w[0])
    };
    rep.i1_cauchy = cauchy(&rep.i1);
    rep.j2_cauchy = cauchy(&rep.j2);
    rep.j4_cauchy = cauchy(&rep.j4);
    rep.i2_divergent = rep.i2.len() >= 3 && rep.i2.windows(2).skip(1).all(|w| w[1] >= 3.0 * w[0]);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::eval_v;

    #[test]
    fn pure_model_reproduces_v() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        let p = build_singular_profile(&g, &ShootingOptions::default()).unwrap();
        assert!((p.radius - 1.0).abs() < 1e-6, "R = {}", p.radius);
        let mut worst = 0.0_f64;
        for k in 0..=400 {
            let r = 1e-4 * (0.99f64 / 1e-4).powf(k as f64 / 400.0);
            let (u, _) = p.eval(r).unwrap();
            let v = eval_v(2.0, r).unwrap();
            worst = worst.max((u / v - 1.0).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn constant_field_residual() {
        let spec = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        let grid = RadialGrid::new(1.0, 64, 6.0).unwrap();
        let c = RadialField::constant(grid, 2.0);
        let res = fd_elliptic_residual(&spec, &c, None).unwrap();
        let f2 = spec.evaluate(2.0, 0).unwrap();
        for v in &res.residual[1..64] {
            assert!((v + f2).abs() < 1e-12 * f2);
        }
    }

    #[test]
    fn test_functions_have_consistent_laplacian() {
        for phi in [TestFunction::CenteredBump { rho0: 0.7 }, TestFunction::AnnularBump { a: 0.2, b: 0.8 }] {
            for r in [0.25, 0.4, 0.55] {
                let h = 1e-4;
                let f = |x: f64| phi.eval(x).0;
                let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
                let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
                assert!((d2 + d1 / r - phi.eval(r).1).abs() < 1e-5 * (1.0 + phi.eval(r).1.abs()));
            }
        }
    }

    #[test]
    fn seed_stability_on_smoothed_model() {
        let spec = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        let o = ShootingOptions::default();
        let a = build_singular_profile(&spec, &o).unwrap();
        let b = build_singular_profile(&spec, &ShootingOptions { r_seed: 0.5 * o.r_seed, ..o }).unwrap();
        let top = a.radius.min(b.radius);
        let mut d = 0.0_f64;
        for k in 0..=200 {
            let r = 1e-3 * (top / 1e-3).powf(k as f64 / 200.0);
            d = d.max((a.eval(r).unwrap().0 - b.eval(r).unwrap().0).abs());
        }
        assert!(d < 10.0 * o.ode_tol, "{d}");
    }

    #[test]
    fn fd_residual_is_second_order_on_v() {
        let spec = NonlinearitySpec::parse("model:B=2").unwrap();
        let norm = |n: usize| {
            let grid = RadialGrid::new(1.0, n, 10.0).unwrap();
            let f = RadialField::from_fn(grid, |r| if r >= 1.0 { 0.0 } else { eval_v(2.0, r).unwrap() }).unwrap();
            let res = fd_elliptic_residual(&spec, &f, Some(1e-3)).unwrap();
            // stay away from the wall, where v has an unbounded derivative
            (1..n).filter(|&i| grid.r(i) < 0.5).map(|i| res.residual[i].abs() * grid.r(i).powi(2)).fold(0.0, f64::max)
        };
        let ratio = norm(512) / norm(1024);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn annular_pairing_vanishes_on_shooting_profile() {
        let spec = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        let (_, u) = build_singular_field(&spec, &ShootingOptions::default(), 4096, 14.0).unwrap();
        assert!(u.values.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(u.values[0], 0.0);
        let r = u.grid.radius;
        let phi = TestFunction::AnnularBump { a: 0.2 * r, b: 0.8 * r };
        let p = distributional_pairing(&spec, &u, phi).unwrap();
        assert!(p.abs() < 1e-6, "{p}");
        assert_eq!(distributional_pairing(&spec, &u, TestFunction::Zero).unwrap(), 0.0);
    }
}
