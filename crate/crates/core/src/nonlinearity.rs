//! Catalog of exponential-type nonlinearities f, the tail functional
//! F(s) = ∫_s^∞ dτ/f(τ), its inverse, and the classification quantities
//! B₁, B₂ and β.
//!
//! Every variant is handled through Λ = log f. Quadrature is done on the
//! scaled integrand exp(Λ(s) − Λ(s+x)), so f·F, 1 − f′F and the B₂
//! combination come out without cancellation even where f overflows.

use crate::error::{Error, Result};
use crate::quad;
use serde::Serialize;

/// Catalog variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Variant {
    /// Model nonlinearity g for exponent B. B = 1 is the double-exponential model
    /// 4e^{e^s}/e^{2s}; B > 1 is (4/(BB′))s^{1−2B′}e^{s^{B′}}.
    Model { b: f64 },
    /// Model for s ≥ knot, a·s² below, C¹ at the knot.
    Smoothed { b: f64, knot: f64, a: f64 },
    /// s^r e^{s^q}.
    PowerExp { q: f64, r: f64 },
    /// e^{s^q + s^r}.
    SumExp { q: f64, r: f64 },
    /// e^{e^s}.
    DoubleExp,
}

/// A catalog entry together with its numerical tolerances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearitySpec {
    pub key: String,
    pub variant: Variant,
    /// Relative quadrature tolerance.
    pub quad_tol: f64,
    /// Depth (in e-folds of 1/f) at which the integral for F is closed off
    /// with the asymptotic tail 1/f′.
    pub tail_switch: f64,
}

pub const DEFAULT_QUAD_TOL: f64 = 1e-11;
pub const DEFAULT_TAIL_SWITCH: f64 = 60.0;

/// Keys of the shipped catalog.
pub const CATALOG: [&str; 5] = ["model:B=2", "smoothed:B=2", "power_exp:q=2,r=0", "double_exp", "sum_exp:q=2,r=0.5"];

/// Dual exponent B′ = B/(B − 1); infinite at B = 1.
pub fn dual_exponent(b: f64) -> f64 {
    if b == 1.0 {
        f64::INFINITY
    } else {
        b / (b - 1.0)
    }
}

/// log f for the exponential families, with derivatives and an accurate
/// increment Λ(s+x) − Λ(s).
#[derive(Debug, Clone, Copy)]
#[allow(clippy::enum_variant_names)]
pub(crate) enum Profile {
    /// ln c + r ln s + s^q
    PowerExp { ln_c: f64, r: f64, q: f64 },
    /// ln c + e^s + m s
    ExpExp { ln_c: f64, m: f64 },
    /// s^q + s^r
    SumExp { q: f64, r: f64 },
}

impl Profile {
    pub(crate) fn lam(&self, s: f64) -> f64 {
        match *self {
            Profile::PowerExp { ln_c, r, q } => {
                let lr = if r == 0.0 { 0.0 } else { r * s.ln() };
                ln_c + lr + s.powf(q)
            }
            Profile::ExpExp { ln_c, m } => ln_c + s.exp() + m * s,
            Profile::SumExp { q, r } => s.powf(q) + s.powf(r),
        }
    }

    /// (Λ′, Λ″, Λ‴) at s.
    pub(crate) fn derivs(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            Profile::PowerExp { r, q, .. } => {
                let sq = s.powf(q);
                (
                    (r + q * sq) / s,
                    (q * (q - 1.0) * sq - r) / (s * s),
                    (2.0 * r + q * (q - 1.0) * (q - 2.0) * sq) / (s * s * s),
                )
            }
            Profile::ExpExp { m, .. } => {
                let e = s.exp();
                (e + m, e, e)
            }
            Profile::SumExp { q, r } => {
                let (a, b) = (s.powf(q), s.powf(r));
                (
                    (q * a + r * b) / s,
                    (q * (q - 1.0) * a + r * (r - 1.0) * b) / (s * s),
                    (q * (q - 1.0) * (q - 2.0) * a + r * (r - 1.0) * (r - 2.0) * b) / (s * s * s),
                )
            }
        }
    }

    /// Λ(s+x) − Λ(s) without cancellation.
    pub(crate) fn delta(&self, s: f64, x: f64) -> f64 {
        match *self {
            Profile::PowerExp { r, q, .. } => {
                let l = (x / s).ln_1p();
                let lr = if r == 0.0 { 0.0 } else { r * l };
                lr + s.powf(q) * (q * l).exp_m1()
            }
            Profile::ExpExp { m, .. } => s.exp() * x.exp_m1() + m * x,
            Profile::SumExp { q, r } => {
                let l = (x / s).ln_1p();
                s.powf(q) * (q * l).exp_m1() + s.powf(r) * (r * l).exp_m1()
            }
        }
    }

    fn psi(&self, s: f64) -> f64 {
        let (d1, d2, _) = self.derivs(s);
        d2 / (d1 * d1)
    }

    fn dpsi(&self, s: f64) -> f64 {
        let (d1, d2, d3) = self.derivs(s);
        d3 / (d1 * d1) - 2.0 * d2 * d2 / (d1 * d1 * d1)
    }

    /// Length over which ψ = Λ″/Λ′² varies by O(1).
    fn scale(&self, s: f64) -> f64 {
        match self {
            Profile::ExpExp { .. } => 1.0,
            _ => s,
        }
    }

    /// ψ(s) − ψ(s+x), integrating ψ′ for short steps.
    fn psi_drop(&self, s: f64, x: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
        if x < 0.1 * self.scale(s) {
            let (nodes, weights) = gl;
            -x * nodes.iter().zip(weights).map(|(t, w)| w * self.dpsi(s + t * x)).sum::<f64>()
        } else {
            self.psi(s) - self.psi(s + x)
        }
    }
}

/// Scaled tail integrals at a point s.
///
/// `i` = f·F, `d` = 1 − f′F, `k` = Λ″·f·F − Λ′·(1 − f′F); log_f_big = log F.
#[derive(Debug, Clone, Copy)]
pub struct Tail {
    pub log_big_f: f64,
    pub i: f64,
    pub d: f64,
    pub k: f64,
}

impl Tail {
    pub fn fprime_f(&self) -> f64 {
        1.0 - self.d
    }
    pub fn inv_b1(&self) -> f64 {
        -self.log_big_f * self.d
    }
    pub fn inv_b2(&self) -> f64 {
        self.i * self.log_big_f * self.log_big_f * self.k
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::UnknownSpec(format!("malformed parameter `{p}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::UnknownSpec(format!("bad number in `{p}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn param(ps: &[(String, f64)], name: &str, key: &str) -> Result<f64> {
    ps.iter()
        .find(|(k, _)| k == name)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::UnknownSpec(format!("{key}: missing parameter {name}")))
}

/// Knot of the smoothed model: solution of b·g′(b) = 2·g(b).
pub fn smoothed_knot(b_exp: f64) -> f64 {
    if b_exp == 1.0 {
        // b(e^b − 2) = 2
        let mut x = 1.0_f64;
        for _ in 0..60 {
            let h = x * (x.exp() - 2.0) - 2.0;
            let dh = x.exp() - 2.0 + x * x.exp();
            x -= h / dh;
        }
        x
    } else {
        let bp = dual_exponent(b_exp);
        ((1.0 + 2.0 * bp) / bp).powf(1.0 / bp)
    }
}

impl NonlinearitySpec {
    pub fn new(key: &str, variant: Variant) -> Self {
        NonlinearitySpec { key: key.to_string(), variant, quad_tol: DEFAULT_QUAD_TOL, tail_switch: DEFAULT_TAIL_SWITCH }
    }

    pub fn model(b: f64) -> Result<Self> {
        Self::parse(&format!("model:B={b}"))
    }

    /// Parses a catalog key such as `power_exp:q=2,r=0`.
    pub fn parse(key: &str) -> Result<Self> {
        let key = key.trim();
        let (name, body) = key.split_once(':').unwrap_or((key, ""));
        let ps = parse_params(body)?;
        let variant = match name {
            "model" => {
                let b = param(&ps, "B", key)?;
                if !(b >= 1.0) || !b.is_finite() {
                    return Err(Error::Domain(format!("{key}: need B ≥ 1")));
                }
                Variant::Model { b }
            }
            "model_b1" => Variant::Model { b: 1.0 },
            "smoothed" => {
                let b = param(&ps, "B", key)?;
                if !(b >= 1.0) || !b.is_finite() {
                    return Err(Error::Domain(format!("{key}: need B ≥ 1")));
                }
                let knot = smoothed_knot(b);
                let g = Variant::Model { b };
                let a = (log_f_model(g, knot) - 2.0 * knot.ln()).exp();
                Variant::Smoothed { b, knot, a }
            }
            "power_exp" => {
                let q = param(&ps, "q", key)?;
                let r = param(&ps, "r", key)?;
                if !(q > 1.0) {
                    return Err(Error::Domain(format!("{key}: need q > 1")));
                }
                if r < 0.0 {
                    return Err(Error::Domain(format!("{key}: need r ≥ 0")));
                }
                Variant::PowerExp { q, r }
            }
            "sum_exp" => {
                let q = param(&ps, "q", key)?;
                let r = param(&ps, "r", key)?;
                if !(q > 1.0) || !(r > 0.0 && r < q) {
                    return Err(Error::Domain(format!("{key}: need q > 1 and 0 < r < q")));
                }
                Variant::SumExp { q, r }
            }
            "double_exp" => Variant::DoubleExp,
            _ => return Err(Error::UnknownSpec(key.to_string())),
        };
        Ok(Self::new(key, variant))
    }

    /// Classification exponent the variant is paired with.
    pub fn nominal_b(&self) -> f64 {
        match self.variant {
            Variant::Model { b } | Variant::Smoothed { b, .. } => b,
            Variant::PowerExp { q, .. } | Variant::SumExp { q, .. } => q / (q - 1.0),
            Variant::DoubleExp => 1.0,
        }
    }

    pub(crate) fn profile(&self) -> Profile {
        match self.variant {
            Variant::Model { b } | Variant::Smoothed { b, .. } => model_profile(b),
            Variant::PowerExp { q, r } => Profile::PowerExp { ln_c: 0.0, r, q },
            Variant::SumExp { q, r } => Profile::SumExp { q, r },
            Variant::DoubleExp => Profile::ExpExp { ln_c: 0.0, m: 0.0 },
        }
    }

    fn check_arg(&self, s: f64) -> Result<()> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("{}: argument {s} must be finite and ≥ 0", self.key)));
        }
        if s == 0.0 {
            let singular = match self.variant {
                Variant::Model { b } => b > 1.0,
                _ => false,
            };
            if singular {
                return Err(Error::Domain(format!("{}: f is unbounded at s = 0", self.key)));
            }
        }
        Ok(())
    }

    /// log f(s).
    pub fn log_f(&self, s: f64) -> Result<f64> {
        self.check_arg(s)?;
        Ok(match self.variant {
            Variant::Smoothed { knot, a, .. } if s < knot => a.ln() + 2.0 * s.ln(),
            _ => self.profile().lam(s),
        })
    }

    /// d/ds log f(s).
    pub fn dlog_f(&self, s: f64) -> Result<f64> {
        self.check_arg(s)?;
        Ok(match self.variant {
            Variant::Smoothed { knot, .. } if s < knot => 2.0 / s,
            _ => self.profile().derivs(s).0,
        })
    }

    /// f(s), f′(s) or f″(s) from the analytic expressions.
    pub fn evaluate(&self, s: f64, order: u8) -> Result<f64> {
        self.check_arg(s)?;
        if let Variant::Smoothed { knot, a, .. } = self.variant {
            if s < knot {
                return match order {
                    0 => Ok(a * s * s),
                    1 => Ok(2.0 * a * s),
                    2 => Ok(2.0 * a),
                    _ => Err(Error::Domain(format!("derivative order {order} not supported"))),
                };
            }
        }
        if s == 0.0 {
            return self.evaluate_at_zero(order);
        }
        let p = self.profile();
        let f = p.lam(s).exp();
        let (d1, d2, _) = p.derivs(s);
        match order {
            0 => Ok(f),
            1 => Ok(d1 * f),
            2 => Ok((d2 + d1 * d1) * f),
            _ => Err(Error::Domain(format!("derivative order {order} not supported"))),
        }
    }

    fn evaluate_at_zero(&self, order: u8) -> Result<f64> {
        let v = match (self.variant, order) {
            (Variant::PowerExp { r, .. }, 0) => power_terms_at_zero(&[(1.0, r)]),
            (Variant::PowerExp { q, r }, 1) => power_terms_at_zero(&[(r, r - 1.0), (q, r + q - 1.0)]),
            (Variant::PowerExp { q, r }, 2) => power_terms_at_zero(&[
                (r * (r - 1.0), r - 2.0),
                (2.0 * r * q + q * (q - 1.0), r + q - 2.0),
                (q * q, r + 2.0 * q - 2.0),
            ]),
            (Variant::SumExp { .. }, 0) => 1.0,
            (Variant::SumExp { q, r }, 1) => power_terms_at_zero(&[(q, q - 1.0), (r, r - 1.0)]),
            (Variant::SumExp { q, r }, 2) => power_terms_at_zero(&[
                (q * (q - 1.0), q - 2.0),
                (r * (r - 1.0), r - 2.0),
                (q * q, 2.0 * q - 2.0),
                (r * r, 2.0 * r - 2.0),
                (2.0 * q * r, q + r - 2.0),
            ]),
            (_, 0..=2) => {
                let p = self.profile();
                let f = p.lam(0.0).exp();
                let (d1, d2, _) = p.derivs(0.0);
                [f, d1 * f, (d2 + d1 * d1) * f][order as usize]
            }
            _ => return Err(Error::Domain(format!("derivative order {order} not supported"))),
        };
        Ok(v)
    }

    /// Whether F has a closed form at s.
    fn closed_form(&self, s: f64) -> Option<Tail> {
        match self.variant {
            Variant::Model { b } => Some(model_tail(b, s)),
            Variant::Smoothed { b, knot, a } => {
                if s >= knot {
                    Some(model_tail(b, s))
                } else {
                    let gb = model_tail(b, knot).log_big_f.exp();
                    let big_f = (1.0 / s - 1.0 / knot) / a + gb;
                    let i = a * s * s * big_f;
                    let d = 1.0 - 2.0 * a * s * big_f;
                    let k = -2.0 * i / (s * s) - 2.0 * d / s;
                    Some(Tail { log_big_f: big_f.ln(), i, d, k })
                }
            }
            _ => None,
        }
    }

    /// f·F, 1 − f′F, the B₂ kernel and log F at s.
    pub fn tail(&self, s: f64) -> Result<Tail> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("{}: F needs s > 0 (got {s})", self.key)));
        }
        if let Some(t) = self.closed_form(s) {
            return Ok(t);
        }
        self.tail_quadrature(s)
    }

    /// Tail integrals by quadrature, ignoring any closed form.
    pub fn tail_quadrature(&self, s: f64) -> Result<Tail> {
        if let Variant::Smoothed { knot, .. } = self.variant {
            if s < knot {
                return Err(Error::Domain(format!("{}: quadrature path only covers s ≥ {knot}", self.key)));
            }
        }
        let p = self.profile();
        let lam_s = p.lam(s);
        if !lam_s.is_finite() {
            return Err(Error::Domain(format!("{}: log f overflows at s = {s}", self.key)));
        }
        let (d1, d2, _) = p.derivs(s);
        let by_parts = d1 > 0.0;
        let psi_s = if by_parts { p.psi(s) } else { 0.0 };
        let gl = quad::gauss_legendre_unit(6);
        // first panel: where 1/f has dropped by about one e-fold
        let mut l0 = if by_parts { 1.0 / d1 } else { 0.5 * p.scale(s).min(1.0) };
        for _ in 0..200 {
            let dl = p.delta(s, l0);
            if dl > 2.0 {
                l0 *= 0.5;
            } else if dl < 0.5 {
                l0 *= 2.0;
            } else {
                break;
            }
        }
        let tol = self.quad_tol;
        let abs_psi = tol * 1e-3 * (psi_s.abs() + 1e-300) * l0;
        let depth = self.tail_switch;

        let integrand = |x: f64| -> [f64; 3] {
            let e = (-p.delta(s, x)).exp();
            if by_parts {
                [e, p.psi(s + x) * e, p.psi_drop(s, x, &gl) * e]
            } else {
                [e, 0.0, 0.0]
            }
        };

        let mut acc = [0.0_f64; 3];
        let mut a = 0.0;
        let mut b = l0;
        let mut panels = 0;
        loop {
            let (v, _) = quad::integrate(integrand, a, b, tol * 0.1, [1e-300, abs_psi, abs_psi], 400)?;
            for m in 0..3 {
                acc[m] += v[m];
            }
            panels += 1;
            let dl = p.delta(s, b);
            if dl >= depth {
                break;
            }
            if panels > 400 {
                return Err(Error::Accuracy(format!("{}: F quadrature did not reach the tail at s = {s}", self.key)));
            }
            a = b;
            b *= 2.0;
        }
        // asymptotic tail F ≈ 1/f′ beyond the last panel
        let e_end = (-p.delta(s, b)).exp();
        let (d1_end, _, _) = p.derivs(s + b);
        if d1_end > 0.0 {
            acc[0] += e_end / d1_end;
            if by_parts {
                acc[1] += p.psi(s + b) * e_end / d1_end;
                acc[2] += (psi_s - p.psi(s + b)) * e_end / d1_end;
            }
        }
        let i = acc[0];
        let (d, k) = if by_parts {
            (d1 * acc[1], d1 * d1 * acc[2])
        } else {
            let d = 1.0 - d1 * i;
            (d, d2 * i - d1 * d)
        };
        Ok(Tail { log_big_f: -lam_s + i.ln(), i, d, k })
    }

    /// log F(s).
    pub fn log_big_f(&self, s: f64) -> Result<f64> {
        Ok(self.tail(s)?.log_big_f)
    }

    /// F(s) = ∫_s^∞ dτ/f(τ).
    pub fn eval_big_f(&self, s: f64) -> Result<f64> {
        Ok(self.log_big_f(s)?.exp())
    }

    /// F(0+), infinite when 1/f is not integrable at the origin.
    pub fn big_f_at_zero(&self) -> Result<f64> {
        match self.variant {
            Variant::Smoothed { .. } => Ok(f64::INFINITY),
            Variant::PowerExp { r, .. } if r >= 1.0 => Ok(f64::INFINITY),
            Variant::Model { b } if b > 1.0 => Ok(b / 4.0),
            Variant::Model { .. } => Ok(0.25 * 2.0 * (-1.0_f64).exp()),
            _ => {
                // integrate 1/f over (0, 1], then add F(1)
                let head = quad::integrate_scalar(|x| (-self.profile().lam(x)).exp(), 0.0, 1.0, self.quad_tol, 1e-300)?;
                Ok(head + self.eval_big_f(1.0)?)
            }
        }
    }

    /// F⁻¹(y) by bracketing and safeguarded Newton on log F.
    pub fn eval_big_f_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("{}: F⁻¹ needs y > 0 (got {y})", self.key)));
        }
        let sup = self.big_f_at_zero()?;
        if y >= sup {
            return Err(Error::Domain(format!("{}: y = {y} outside the range (0, {sup}) of F", self.key)));
        }
        let target = y.ln();
        // bracket [lo, hi] with log F(lo) > target > log F(hi)
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut lf_hi = self.log_big_f(hi)?;
        while lf_hi > target {
            lo = hi;
            hi *= 2.0;
            lf_hi = self.log_big_f(hi)?;
            if hi > 1e8 {
                return Err(Error::Domain(format!("{}: y = {y} too small", self.key)));
            }
        }
        if lo == 0.0 {
            let mut probe = 0.5;
            loop {
                let lf = self.log_big_f(probe)?;
                if lf > target {
                    lo = probe;
                    break;
                }
                hi = probe;
                probe *= 0.5;
                if probe < 1e-300 {
                    return Err(Error::Domain(format!("{}: y = {y} too large", self.key)));
                }
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let t = self.tail(s)?;
            let g = t.log_big_f - target;
            if g.abs() <= self.quad_tol * 0.1 {
                return Ok(s);
            }
            if g > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            // d log F / ds = −1/(f F)
            let newton = s + g * t.i;
            s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(s);
            }
        }
        Err(Error::Accuracy(format!("{}: F⁻¹({y}) did not converge", self.key)))
    }

    fn tail_for_b(&self, s: f64) -> Result<Tail> {
        let t = self.tail(s)?;
        if t.log_big_f >= 0.0 {
            return Err(Error::Domain(format!("{}: F({s}) ≥ 1, log F has the wrong sign", self.key)));
        }
        Ok(t)
    }

    /// B₁[f](s) with 1/B₁ = (−log F)(1 − f′F).
    pub fn eval_b1(&self, s: f64) -> Result<f64> {
        Ok(1.0 / self.tail_for_b(s)?.inv_b1())
    }

    /// B₂[f](s) with 1/B₂ = fF(log F)²(f″F − f′/f).
    pub fn eval_b2(&self, s: f64) -> Result<f64> {
        Ok(1.0 / self.tail_for_b(s)?.inv_b2())
    }

    /// 1/B₁ and 1/B₂ at s.
    pub fn inv_b1_b2(&self, s: f64) -> Result<(f64, f64)> {
        let t = self.tail_for_b(s)?;
        Ok((t.inv_b1(), t.inv_b2()))
    }
}

/// lim_{s→0⁺} of Σ c·s^α.
fn power_terms_at_zero(terms: &[(f64, f64)]) -> f64 {
    let mut v = 0.0;
    for &(c, alpha) in terms {
        if c == 0.0 {
            continue;
        }
        if alpha == 0.0 {
            v += c;
        } else if alpha < 0.0 {
            return c.signum() * f64::INFINITY;
        }
    }
    v
}

pub(crate) fn model_profile(b: f64) -> Profile {
    if b == 1.0 {
        Profile::ExpExp { ln_c: 4f64.ln(), m: -2.0 }
    } else {
        let bp = dual_exponent(b);
        Profile::PowerExp { ln_c: (4.0 / (b * bp)).ln(), r: 1.0 - 2.0 * bp, q: bp }
    }
}

fn log_f_model(v: Variant, s: f64) -> f64 {
    match v {
        Variant::Model { b } => model_profile(b).lam(s),
        _ => unreachable!(),
    }
}

/// Closed-form tail quantities of the model g.
pub(crate) fn model_tail(b: f64, s: f64) -> Tail {
    if b == 1.0 {
        let x = s.exp();
        let x2 = x * x;
        Tail { log_big_f: -(4f64.ln()) + x.ln_1p() - x, i: (x + 1.0) / x2, d: (x + 2.0) / x2, k: (x + 4.0) / x2 }
    } else {
        let q = dual_exponent(b);
        let x = s.powf(q);
        let x2 = x * x;
        Tail {
            log_big_f: (b / 4.0).ln() + x.ln_1p() - x,
            i: (x + 1.0) * s.powf(1.0 - 2.0 * q) / q,
            d: (x / b + 2.0 - 1.0 / q) / x2,
            k: ((q - 1.0) * x + 4.0 * q - 2.0) / (s * x2),
        }
    }
}

/// Outcome of the (f1)/(f2) checks and the β search.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub key: String,
    pub f1_finite: bool,
    pub f1_probe: (f64, f64),
    pub fprime_f_samples: Vec<(f64, f64)>,
    pub b2_samples: Vec<(f64, f64)>,
    pub b1_samples: Vec<(f64, f64)>,
    pub b_estimate: f64,
    pub b_confidence: f64,
    pub f2_ok: bool,
    pub beta: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Ladder used by [`estimate_b`]: s_j = 4·2^j, j = 0..5.
pub const B_LADDER: [f64; 6] = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];

/// Largest argument at which log f stays finite.
fn overflow_cap(spec: &NonlinearitySpec) -> f64 {
    match spec.profile() {
        Profile::ExpExp { .. } => 700.0,
        _ => f64::INFINITY,
    }
}

/// Aitken Δ² on the last three entries; falls back to the last entry.
pub fn aitken_last(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let last = xs[n - 1];
    if n < 3 {
        return (last, f64::INFINITY);
    }
    let (x0, x1, x2) = (xs[n - 3], xs[n - 2], xs[n - 1]);
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let den = d2 - d1;
    if den.abs() < 1e-300 || (d2 / d1) <= 0.0 || (d2 / d1).abs() >= 1.0 {
        return (last, d2.abs());
    }
    let acc = x2 - d2 * d2 / den;
    (acc, (acc - last).abs())
}

/// Samples f′F and B₂ on a geometric ladder and extrapolates B.
pub fn estimate_b(spec: &NonlinearitySpec) -> HypothesisReport {
    let mut diagnostics = Vec::new();
    let probe_s = 1.0;
    let f1 = spec.eval_big_f(probe_s);
    let f1_finite = matches!(f1, Ok(v) if v.is_finite());
    let f1_probe = (probe_s, f1.unwrap_or(f64::NAN));

    let ladder = B_LADDER;
    let mut fpf = Vec::new();
    let mut b1s = Vec::new();
    let mut b2s = Vec::new();
    for &s in &ladder {
        match spec.tail_for_b(s) {
            Ok(t) => {
                fpf.push((s, t.fprime_f()));
                b1s.push((s, 1.0 / t.inv_b1()));
                b2s.push((s, 1.0 / t.inv_b2()));
            }
            Err(e) => diagnostics.push(format!("ladder point s = {s}: {e}")),
        }
    }
    let b2v: Vec<f64> = b2s.iter().map(|p| p.1).collect();
    let (b_estimate, b_confidence) = if b2v.is_empty() { (f64::NAN, f64::INFINITY) } else { aitken_last(&b2v) };
    let gaps: Vec<f64> = fpf.iter().map(|p| (p.1 - 1.0).abs()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] <= w[0]);
    if !decreasing {
        diagnostics.push("|f′F − 1| is not decreasing along the ladder".into());
    }
    let tol = 0.02;
    let f2_ok = decreasing && !gaps.is_empty() && b_estimate.is_finite() && b_estimate >= 1.0 - tol;
    HypothesisReport {
        key: spec.key.clone(),
        f1_finite,
        f1_probe,
        fprime_f_samples: fpf,
        b2_samples: b2s,
        b1_samples: b1s,
        b_estimate,
        b_confidence,
        f2_ok,
        beta: None,
        diagnostics,
    }
}

/// Number of scan points and range used by [`find_beta`].
pub const BETA_SCAN: (usize, f64, f64) = (10_000, 1e-3, 1e3);

/// Smallest β with f′F ≤ 1 on [β, ∞) (sampled) and β − 2f(β)F(β) ≥ 0.
pub fn find_beta(spec: &NonlinearitySpec) -> Result<f64> {
    let (n, lo, hi) = BETA_SCAN;
    let cap = overflow_cap(spec);
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let pts: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).filter(|&s| s <= cap).collect();
    let samples: Vec<Option<(f64, f64)>> =
        pts.iter().map(|&s| spec.tail(s).ok().map(|t| (t.d, s - 2.0 * t.i))).collect();
    // suffix condition on f′F ≤ 1, i.e. d ≥ 0
    let m = pts.len();
    let mut suffix_ok = vec![false; m + 1];
    suffix_ok[m] = true;
    for i in (0..m).rev() {
        suffix_ok[i] = suffix_ok[i + 1] && matches!(samples[i], Some((d, _)) if d >= 0.0);
    }
    let idx = (0..m)
        .find(|&i| suffix_ok[i] && matches!(samples[i], Some((_, c)) if c >= 0.0))
        .ok_or_else(|| Error::SearchFailure(format!("{}: no admissible β on [{lo}, {hi}]", spec.key)))?;
    if idx == 0 {
        return Ok(pts[0]);
    }
    let (a, b) = (pts[idx - 1], pts[idx]);
    let mut beta = a;
    let prev = samples[idx - 1];
    let c1_active = !matches!(prev, Some((d, _)) if d >= 0.0);
    let c2_active = !matches!(prev, Some((_, c)) if c >= 0.0);
    if c1_active {
        beta = beta.max(bisect(|s| spec.tail(s).map(|t| t.d), a, b, 1e-9)?);
    }
    if c2_active {
        beta = beta.max(bisect(|s| spec.tail(s).map(|t| s - 2.0 * t.i), a, b, 1e-9)?);
    }
    Ok(beta)
}

/// Bisection for the sign change of g on [a, b], g(a) < 0 ≤ g(b); returns
/// the right end of the final bracket so that g ≥ 0 there.
pub(crate) fn bisect<G: FnMut(f64) -> Result<f64>>(mut g: G, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    if g(hi)? < 0.0 {
        return Err(Error::SearchFailure(format!("no sign change on [{a}, {b}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// β plus the hypothesis report.
pub fn classify(spec: &NonlinearitySpec) -> HypothesisReport {
    let mut rep = estimate_b(spec);
    match find_beta(spec) {
        Ok(b) => rep.beta = Some(b),
        Err(e) => rep.diagnostics.push(e.to_string()),
    }
    rep
}

/// sup over s ≥ β of F(s)f(s), sampled.
pub fn lemma42_constant(spec: &NonlinearitySpec, beta: f64) -> Result<f64> {
    let mut sup = 0.0_f64;
    for j in 0..400 {
        let s = beta * (1.0 + j as f64 * 0.05);
        match spec.tail(s) {
            Ok(t) => sup = sup.max(t.i),
            Err(_) => break,
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn evaluate_examples() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        assert!(close(g.evaluate(1.0, 0).unwrap(), std::f64::consts::E, 1e-14));
        let ratio = g.evaluate(10.0, 1).unwrap() / g.evaluate(10.0, 0).unwrap();
        assert!(close(ratio, 19.7, 1e-13));
        assert!(g.evaluate(0.0, 0).is_err());
        let sm = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        assert_eq!(sm.evaluate(0.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn smoothed_constants() {
        let sm = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        let Variant::Smoothed { knot, a, .. } = sm.variant else { panic!() };
        assert!(close(knot, 2.5f64.sqrt(), 1e-14));
        assert!(close(a, 2.5f64.exp() / 2.5f64.powf(2.5), 1e-13));
        assert!((a - 1.2327817119).abs() < 1e-9);
        // C¹ matching
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        for order in [0, 1] {
            let left = 2.0 * a * knot * if order == 0 { knot / 2.0 } else { 1.0 };
            assert!(close(left, g.evaluate(knot, order).unwrap(), 1e-12));
        }
        // B = 1 knot solves b(e^b − 2) = 2
        let k1 = smoothed_knot(1.0);
        assert!((k1 * (k1.exp() - 2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn big_f_examples() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        assert!(close(g.eval_big_f(1.0).unwrap(), (-1.0f64).exp(), 1e-14));
        let sm = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        assert!(close(sm.eval_big_f(2.5f64.sqrt()).unwrap(), 1.75 * (-2.5f64).exp(), 1e-14));
        assert!(close(g.eval_big_f_inv(0.367879).unwrap(), 1.0, 1e-5));
    }

    #[test]
    fn quadrature_matches_closed_form_on_models() {
        for b in [1.0, 1.5, 2.0, 3.0] {
            let g = NonlinearitySpec::model(b).unwrap();
            for s in [1.5, 2.0, 3.0, 6.0] {
                let c = g.tail(s).unwrap();
                let q = g.tail_quadrature(s).unwrap();
                assert!(close(q.log_big_f.exp(), c.log_big_f.exp(), 1e-10), "B={b} s={s}");
                assert!(close(q.d, c.d, 1e-8), "B={b} s={s} d {} vs {}", q.d, c.d);
                assert!(close(q.k, c.k, 1e-7), "B={b} s={s} k {} vs {}", q.k, c.k);
            }
        }
    }

    #[test]
    fn fprime_f_closed_form_at_ten() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        let v = g.tail(10.0).unwrap().fprime_f();
        let expect = (2.0 * 100.0 - 3.0) * (100.0 + 1.0) / (2.0 * 1e4);
        assert!(close(v, expect, 1e-14));
        assert!((v - 0.99485).abs() < 1e-12);
    }

    #[test]
    fn beta_pure_model() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        let beta = find_beta(&g).unwrap();
        let exact = ((1.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((beta - exact).abs() < 1e-8, "{beta}");
    }

    #[test]
    fn beta_conditions_hold_above_beta() {
        for key in CATALOG {
            let spec = NonlinearitySpec::parse(key).unwrap();
            let beta = find_beta(&spec).unwrap();
            let t = spec.tail(beta).unwrap();
            assert!(beta - 2.0 * t.i >= -1e-8, "{key}");
            for j in 0..1000 {
                let s = beta * (1.0 + 0.01 * j as f64);
                if let Ok(t) = spec.tail(s) {
                    assert!(t.d >= 0.0, "{key} s={s}");
                }
            }
        }
    }

    #[test]
    fn lemma42_model_tends_to_zero() {
        let g = NonlinearitySpec::parse("model:B=2").unwrap();
        // t f(F⁻¹(t)) = fF(s) ≈ 1/(2s)
        for s in [5.0, 10.0, 20.0] {
            let i = g.tail(s).unwrap().i;
            assert!(close(i, (s * s + 1.0) / (2.0 * s * s * s), 1e-13));
        }
        assert!(lemma42_constant(&g, 1.272).unwrap().is_finite());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(NonlinearitySpec::parse("cubic").is_err());
        assert!(NonlinearitySpec::parse("power_exp:q=0.5,r=0").is_err());
    }
}
