//! Dormand-Prince 5(4) with the 4th-order continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { rtol: 1e-9, atol: 1e-12, h_init: 0.0, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn y0(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn eval(&self, x: f64) -> [f64; N] {
        let th = (x - self.x0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
    pub x_end: f64,
    pub y_end: [f64; N],
    pub rejected: usize,
}

impl<const N: usize> Solution<N> {
    /// Dense evaluation anywhere in the integrated range.
    pub fn eval(&self, x: f64) -> [f64; N] {
        if x >= self.x_end {
            return self.y_end;
        }
        let idx = self.steps.partition_point(|s| s.x0 + s.h <= x);
        self.steps[idx.min(self.steps.len() - 1)].eval(x)
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates y′ = f(x, y) from x0 to x1 > x0.
pub fn integrate<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    opts: &Options,
) -> Result<Solution<N>> {
    if !(x1 > x0) {
        return Err(Error::Domain(format!("integration range [{x0}, {x1}] is empty")));
    }
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = if opts.h_init > 0.0 { opts.h_init } else { 1e-3 * (x1 - x0) };
    h = h.min(opts.h_max);
    let mut steps = Vec::new();
    let mut rejected = 0;
    let mut last_err = 1e-4_f64;
    for _ in 0..opts.max_steps {
        if x >= x1 {
            return Ok(Solution { steps, x_end: x, y_end: y, rejected });
        }
        let last = x + h >= x1;
        if last {
            h = x1 - x;
        }
        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(x + h, &y1);
        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            rejected += 1;
            h *= 0.25;
            if h < 1e-14 * (x1 - x0).abs().max(x.abs()) {
                return Err(Error::StepFailure { t: x, msg: "non-finite state".into() });
            }
            continue;
        }
        if err <= 1.0 {
            let mut rc = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rc[0][i] = y[i];
                rc[1][i] = ydiff;
                rc[2][i] = bspl;
                rc[3][i] = ydiff - h * k7[i] - bspl;
                rc[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(DenseStep { x0: x, h, rcont: rc });
            x = if last { x1 } else { x + h };
            y = y1;
            k1 = k7;
            // PI step-size control
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            last_err = err.max(1e-4);
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * x.abs().max(1e-300) {
            return Err(Error::StepFailure { t: x, msg: "step size underflow".into() });
        }
    }
    Err(Error::StepFailure { t: x, msg: format!("more than {} steps", opts.max_steps) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_dense_output() {
        let opts = Options { rtol: 1e-10, atol: 1e-14, ..Default::default() };
        let sol = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 3.0, &opts).unwrap();
        assert!((sol.y_end[0] - 3f64.exp()).abs() < 1e-8 * 3f64.exp());
        for j in 0..300 {
            let x = 0.01 * j as f64;
            assert!((sol.eval(x)[0] - x.exp()).abs() < 1e-8 * x.exp(), "x={x}");
        }
    }

    #[test]
    fn harmonic_oscillator_order() {
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let run = |tol: f64| {
            let opts = Options { rtol: tol, atol: tol, ..Default::default() };
            let s = integrate(f, 0.0, [0.0, 1.0], 10.0, &opts).unwrap();
            ((s.y_end[0] - 10f64.sin()).abs(), s.steps.len())
        };
        let (e1, n1) = run(1e-6);
        let (e2, n2) = run(1e-10);
        assert!(e1 < 1e-4 && e2 < 1e-8);
        assert!(n2 > n1);
    }
}
