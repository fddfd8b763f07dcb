//! Model solutions v, the closed form G(v), the transform ũ = F⁻¹(G(v)),
//! the remainders R₁, R₂ and the transformed-equation residual.

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::nonlinearity::{dual_exponent, model_tail, NonlinearitySpec, Tail, Variant};
use serde::Serialize;

/// Classification exponent B with its dual B′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelPair {
    pub b: f64,
    pub b_dual: f64,
}

impl ModelPair {
    pub fn new(b: f64) -> Result<Self> {
        if !(b >= 1.0) || !b.is_finite() {
            return Err(Error::Domain(format!("model exponent B = {b} must be ≥ 1")));
        }
        Ok(ModelPair { b, b_dual: dual_exponent(b) })
    }

    /// Upper end of the admissible radii.
    pub fn r_max(&self) -> f64 {
        if self.b == 1.0 {
            (-0.5f64).exp() * 0.99
        } else {
            1.0
        }
    }

    fn check(&self, r: f64) -> Result<()> {
        if !(r > 0.0 && r < self.r_max()) {
            return Err(Error::Domain(format!("radius {r} outside (0, {}) for B = {}", self.r_max(), self.b)));
        }
        Ok(())
    }

    /// v as a function of t = −log r.
    pub fn v_of_t(&self, t: f64) -> f64 {
        if self.b == 1.0 {
            (2.0 * t).ln()
        } else {
            (2.0 * t).powf(1.0 / self.b_dual)
        }
    }

    /// dv/dt with t = −log r.
    pub fn dv_dt(&self, t: f64) -> f64 {
        if self.b == 1.0 {
            1.0 / t
        } else {
            let q = self.b_dual;
            (2.0 / q) * (2.0 * t).powf(1.0 / q - 1.0)
        }
    }

    pub fn v(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.v_of_t(-r.ln()))
    }

    /// (B/4)·r²·(1 − 2 log r).
    pub fn g_closed(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain(format!("radius {r} outside (0, 1)")));
        }
        Ok(self.b / 4.0 * r * r * (1.0 - 2.0 * r.ln()))
    }

    pub fn model_spec(&self) -> NonlinearitySpec {
        let key = if self.b == 1.0 { "model_b1".to_string() } else { format!("model:B={}", self.b) };
        NonlinearitySpec::new(&key, Variant::Model { b: self.b })
    }

    /// Closed-form tail quantities of g at v.
    pub fn tail_at(&self, v: f64) -> Tail {
        model_tail(self.b, v)
    }
}

pub fn eval_v(b: f64, r: f64) -> Result<f64> {
    ModelPair::new(b)?.v(r)
}

pub fn eval_g_closed(b: f64, r: f64) -> Result<f64> {
    ModelPair::new(b)?.g_closed(r)
}

/// Model exponent a catalog entry is paired with.
pub fn pair_for(spec: &NonlinearitySpec) -> Result<ModelPair> {
    ModelPair::new(spec.nominal_b())
}

/// True when F coincides with G at the argument v, so ũ = v exactly.
fn exact_branch(spec: &NonlinearitySpec, pair: &ModelPair, v: f64) -> bool {
    match spec.variant {
        Variant::Model { b } => b == pair.b,
        Variant::Smoothed { b, knot, .. } => b == pair.b && v >= knot,
        _ => false,
    }
}

/// ũ(r) = F⁻¹(G(v(r))).
pub fn eval_tilde_u(spec: &NonlinearitySpec, r: f64) -> Result<f64> {
    let pair = pair_for(spec)?;
    let v = pair.v(r)?;
    if exact_branch(spec, &pair, v) {
        return Ok(v);
    }
    spec.eval_big_f_inv(pair.g_closed(r)?)
}

/// d ũ / dt with t = −log r, from F(ũ) = G(v): ũ_t = f(ũ)·v_t / g(v).
pub fn tilde_u_dt(spec: &NonlinearitySpec, r: f64, u: f64) -> Result<f64> {
    let pair = pair_for(spec)?;
    let t = -r.ln();
    let v = pair.v_of_t(t);
    let g = pair.model_spec();
    Ok((spec.log_f(u)? - g.log_f(v)?).exp() * pair.dv_dt(t))
}

/// (R₁, R₂) at r.
pub fn eval_r1_r2(spec: &NonlinearitySpec, r: f64) -> Result<(f64, f64)> {
    let pair = pair_for(spec)?;
    let v = pair.v(r)?;
    if exact_branch(spec, &pair, v) {
        return Ok((0.0, 0.0));
    }
    let u = eval_tilde_u(spec, r)?;
    let (f1, f2) = spec.inv_b1_b2(u)?;
    let tg = pair.tail_at(v);
    if tg.log_big_f >= 0.0 {
        return Err(Error::Domain(format!("G(v) ≥ 1 at r = {r}")));
    }
    Ok(((f1 - tg.inv_b1()).abs(), (f2 - tg.inv_b2()).abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformDiagnostics {
    pub key: String,
    pub radii: Vec<f64>,
    pub tilde_u: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub f3_indicator: Vec<f64>,
    /// r²·(LHS − RHS) of the transformed equation at step 10⁻³ in log r.
    pub eq_residual: Vec<f64>,
    pub threshold: f64,
    pub decreasing: bool,
    pub pass: bool,
}

pub const F3_THRESHOLD: f64 = 1e-2;

/// Default sample radii 10⁻², …, 10⁻⁶.
pub fn f3_radii() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}

/// (−log r)^{1/2}(R₁ + R₂) along decreasing radii; passes when the last
/// three decades are non-increasing and the final value is below the
/// threshold.
pub fn check_f3(spec: &NonlinearitySpec, radii: &[f64], threshold: f64) -> Result<TransformDiagnostics> {
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("radii must be strictly decreasing".into()));
    }
    let mut d = TransformDiagnostics {
        key: spec.key.clone(),
        radii: radii.to_vec(),
        tilde_u: Vec::new(),
        r1: Vec::new(),
        r2: Vec::new(),
        f3_indicator: Vec::new(),
        eq_residual: Vec::new(),
        threshold,
        decreasing: false,
        pass: false,
    };
    for &r in radii {
        let u = eval_tilde_u(spec, r)?;
        let (a, b) = eval_r1_r2(spec, r)?;
        d.tilde_u.push(u);
        d.r1.push(a);
        d.r2.push(b);
        d.f3_indicator.push((-r.ln()).sqrt() * (a + b));
        d.eq_residual.push(r * r * transformed_residual(spec, r, 1e-3)?);
    }
    let n = d.f3_indicator.len();
    let tail = &d.f3_indicator[n.saturating_sub(4)..];
    d.decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    d.pass = d.decreasing && d.f3_indicator.last().is_some_and(|v| *v <= threshold);
    Ok(d)
}

/// Residual of −Δũ = f(ũ) + (|∇ũ|²/(f(ũ)F(ũ)))[g′(v)G(v) − f′(ũ)F(ũ)] with the
/// second derivative taken by centered differences of ũ_t in t = −log r.
pub fn transformed_residual(spec: &NonlinearitySpec, r: f64, h: f64) -> Result<f64> {
    let pair = pair_for(spec)?;
    let t = -r.ln();
    let ut = |tt: f64| -> Result<f64> {
        let rr = (-tt).exp();
        let u = eval_tilde_u(spec, rr)?;
        tilde_u_dt(spec, rr, u)
    };
    let u_tt = (ut(t + h)? - ut(t - h)?) / (2.0 * h);
    let u = eval_tilde_u(spec, r)?;
    let u_t = tilde_u_dt(spec, r, u)?;
    let v = pair.v_of_t(t);
    let tf = spec.tail(u)?;
    let tg = pair.tail_at(v);
    let lhs = -u_tt / (r * r);
    let grad2 = u_t * u_t / (r * r);
    let rhs = spec.evaluate(u, 0)? + grad2 / tf.i * (tf.d - tg.d);
    Ok(lhs - rhs)
}

/// Outcome of the profile estimates on a computed profile.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub sigma: f64,
    pub b: f64,
    /// Largest sampled radius below which every estimate holds.
    pub r_sigma: Option<f64>,
    /// Fitted constant for the two-sided bound on f(U).
    pub c_fit: Option<f64>,
    pub violations: Vec<String>,
    /// (r, F(U(r)) / G_closed(r)) at decades.
    pub ratio_samples: Vec<(f64, f64)>,
    pub ratio_converging: bool,
}

pub fn check_asymptotics(spec: &NonlinearitySpec, u: &RadialField, sigma: f64) -> Result<AsymptoticsReport> {
    let pair = pair_for(spec)?;
    let b = pair.b;
    let grid = u.grid;
    let r_cap = 0.5 * grid.radius.min(pair.r_max());
    let deriv = u.deriv.as_ref();
    // innermost node first
    let idx: Vec<usize> = (0..grid.len()).rev().filter(|&i| grid.r(i) <= r_cap).collect();
    let mut lo_max = f64::NEG_INFINITY;
    let mut hi_min = f64::INFINITY;
    let mut r_sigma = None;
    let mut c_fit = None;
    let mut violations = Vec::new();
    for &i in &idx {
        let r = grid.r(i);
        let l2 = -2.0 * r.ln();
        let val = u.values[i];
        let lf = spec.log_f(val)? + 2.0 * r.ln() + (1.0 + 1.0 / b) * (1.0 + l2).ln();
        lo_max = lo_max.max(lf - sigma * (1.0 + l2).ln());
        hi_min = hi_min.min(lf + sigma * (1.0 + l2).ln());
        let mut ok = lo_max <= hi_min;
        if !ok && violations.len() < 8 {
            violations.push(format!("f(U) two-sided bound fails at r = {r:.3e}"));
        }
        if val > l2.powf(1.0 - 1.0 / b + sigma) {
            ok = false;
            if violations.len() < 8 {
                violations.push(format!("U bound fails at r = {r:.3e}"));
            }
        }
        if let Some(d) = deriv {
            if d[i].abs() > 1.0 / (r * l2.powf(1.0 / b - sigma)) {
                ok = false;
                if violations.len() < 8 {
                    violations.push(format!("gradient bound fails at r = {r:.3e}"));
                }
            }
        }
        if !ok {
            break;
        }
        r_sigma = Some(r);
        c_fit = Some((0.5 * (lo_max + hi_min)).exp());
    }
    let mut ratio_samples = Vec::new();
    let mut decade = 10f64.powf((r_cap.log10()).floor());
    while decade >= grid.r_min() {
        let i = ((grid.radius / decade).ln() / grid.h()).round() as usize;
        if i < grid.len() {
            let r = grid.r(i);
            let fu = spec.eval_big_f(u.values[i])?;
            ratio_samples.push((r, fu / pair.g_closed(r)?));
        }
        decade /= 10.0;
    }
    let gaps: Vec<f64> = ratio_samples.iter().map(|p| (p.1 - 1.0).abs()).collect();
    let ratio_converging = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    Ok(AsymptoticsReport { sigma, b, r_sigma, c_fit, violations, ratio_samples, ratio_converging })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_examples() {
        assert!((eval_v(2.0, (-0.5f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval_v(1.0, (-std::f64::consts::E / 2.0).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!(eval_v(2.0, 1.0 - 1e-12).unwrap() < 1e-5);
        assert!(eval_v(1.0, 0.7).is_err());
    }

    #[test]
    fn g_closed_examples() {
        assert!((eval_g_closed(2.0, (-0.5f64).exp()).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((eval_g_closed(1.0, 0.1).unwrap() - 0.014013).abs() < 1e-6);
        for b in [1.0, 1.5, 2.0, 3.0] {
            let r = 0.2;
            let scaled = eval_g_closed(b, r).unwrap() * 4.0 / b;
            assert!((scaled - r * r * (1.0 - 2.0 * r.ln())).abs() < 1e-15);
        }
    }

    #[test]
    fn model_transform_is_identity() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        for r in [0.5, 1e-2, 1e-5] {
            assert_eq!(eval_tilde_u(&g, r).unwrap(), eval_v(2.0, r).unwrap());
            assert_eq!(eval_r1_r2(&g, r).unwrap(), (0.0, 0.0));
        }
        let sm = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        assert_eq!(eval_tilde_u(&sm, 1e-3).unwrap(), eval_v(2.0, 1e-3).unwrap());
    }

    #[test]
    fn tilde_u_inverts_g() {
        let spec = NonlinearitySpec::parse("power_exp:q=2,r=0").unwrap();
        for r in [1e-1, 1e-2, 1e-3] {
            let u = eval_tilde_u(&spec, r).unwrap();
            let g = eval_g_closed(2.0, r).unwrap();
            assert!((spec.eval_big_f(u).unwrap() / g - 1.0).abs() < 1e-9);
        }
        let us: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&r| eval_tilde_u(&spec, r).unwrap()).collect();
        assert!(us[2] > us[1] && us[1] > us[0]);
    }

    #[test]
    fn model_residual_is_second_order() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        let r = 0.05;
        let a = transformed_residual(&g, r, 0.02).unwrap();
        let b = transformed_residual(&g, r, 0.01).unwrap();
        let ratio = b / a;
        assert!((ratio - 0.25).abs() < 0.02, "{ratio}");
    }
}
