//! Order 0 and 1 cylinder functions and the zeros of J0.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn j1(x: f64) -> f64 {
    libm::j1(x)
}

/// J0 or J1 at x ≥ 0.
pub fn cylinder_eval(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("cylinder function argument {x} must be nonnegative")));
    }
    match order {
        0 => Ok(j0(x)),
        1 => Ok(j1(x)),
        _ => Err(Error::Domain(format!("order {order} not supported"))),
    }
}

/// McMahon's expansion for the k-th zero of J0 (k ≥ 1).
fn mcmahon(k: usize) -> f64 {
    let b = (k as f64 - 0.25) * PI;
    let b2 = 1.0 / (b * b);
    b + (1.0 / 8.0) / b * (1.0 - b2 * (124.0 / 48.0) * (1.0 - b2 * (120928.0 / 15872.0)))
}

/// k-th positive zero of J0, refined by Newton (J0′ = −J1).
pub fn j0_zero(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("zeros are numbered from 1".into()));
    }
    let mut x = mcmahon(k);
    for _ in 0..50 {
        let dx = j0(x) / j1(x);
        x += dx;
        if dx.abs() < 1e-15 * x {
            // one more step to settle the last bit
            x += j0(x) / j1(x);
            let lo = (k as f64 - 0.5) * PI;
            let hi = (k as f64) * PI;
            if !(x > lo && x < hi) {
                return Err(Error::Construction(format!("zero {k} refined to {x}, outside its bracket")));
            }
            return Ok(x);
        }
    }
    Err(Error::Construction(format!("Newton refinement of zero {k} did not converge")))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series of J_n, summed in order of decreasing size for x ≤ 12.
    fn series(n: u32, x: f64) -> f64 {
        let h = 0.5 * x;
        let mut term = h.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -h * h / (m as f64 * (m as f64 + n as f64));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && m > 2 * x as usize {
                break;
            }
        }
        sum
    }

    /// Miller's backward recurrence normalised by J0 + 2ΣJ_2m = 1.
    fn miller(x: f64) -> (f64, f64) {
        let start = 2 * ((x + 60.0 + 20.0 * x.cbrt()) as usize / 2);
        // j = J_n, jp = J_{n+1}, both unnormalised
        let (mut jp, mut j) = (0.0_f64, 1e-30_f64);
        let mut sum = 0.0;
        let mut out = (0.0, 0.0);
        for n in (1..=start).rev() {
            let jm = 2.0 * n as f64 / x * j - jp;
            jp = j;
            j = jm;
            if (n - 1) % 2 == 0 && n > 1 {
                sum += 2.0 * j;
            }
            if n == 1 {
                out = (j, jp);
            }
            if j.abs() > 1e250 {
                j *= 1e-250;
                jp *= 1e-250;
                sum *= 1e-250;
            }
        }
        let norm = sum + out.0;
        (out.0 / norm, out.1 / norm)
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(cylinder_eval(0, 0.0).unwrap(), 1.0);
        assert_eq!(cylinder_eval(1, 0.0).unwrap(), 0.0);
        assert!(cylinder_eval(0, -1.0).is_err());
        assert!(cylinder_eval(2, 1.0).is_err());
    }

    #[test]
    fn agrees_with_series_and_recurrence() {
        for i in 0..=120 {
            let x = 0.1 * i as f64;
            assert!((j0(x) - series(0, x)).abs() < 1e-12, "J0 series x={x}");
            assert!((j1(x) - series(1, x)).abs() < 1e-12, "J1 series x={x}");
        }
        for x in [0.5, 3.0, 17.3, 95.0, 400.0, 999.5] {
            let (a, b) = miller(x);
            assert!((j0(x) - a).abs() < 1e-12, "J0 miller x={x}");
            assert!((j1(x) - b).abs() < 1e-12, "J1 miller x={x}");
        }
    }

    #[test]
    fn zeros() {
        let z1 = j0_zero(1).unwrap();
        assert!((z1 - 2.404825557695773).abs() < 1e-13);
        assert!(series(0, z1).abs() < 1e-12);
        assert!((j0_zero(2).unwrap() - 5.520078110286311).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 1..=600 {
            let z = j0_zero(k).unwrap();
            assert!(z > prev);
            assert!(j0(z).abs() < 1e-12, "k={k}");
            prev = z;
        }
    }
}
