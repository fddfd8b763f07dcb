//! Quadrature rules: adaptive Gauss-Kronrod (7/15) for vector integrands and
//! Gauss-Legendre nodes of arbitrary order.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Clone, Copy)]
struct Segment<const M: usize> {
    a: f64,
    b: f64,
    val: [f64; M],
    err: [f64; M],
}

fn gk15<const M: usize, F: FnMut(f64) -> [f64; M]>(f: &mut F, a: f64, b: f64) -> Segment<M> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; M];
    let mut g = [0.0; M];
    for m in 0..M {
        k[m] = WGK[7] * fc[m];
        g[m] = WG[3] * fc[m];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for m in 0..M {
            let s = f1[m] + f2[m];
            k[m] += WGK[j] * s;
            if j % 2 == 1 {
                g[m] += WG[j / 2] * s;
            }
        }
    }
    let mut val = [0.0; M];
    let mut err = [0.0; M];
    for m in 0..M {
        val[m] = k[m] * h;
        err[m] = ((k[m] - g[m]) * h).abs();
    }
    Segment { a, b, val, err }
}

/// Adaptive integration of a vector-valued integrand over `[a, b]`.
///
/// Component `m` is accepted once its summed error estimate is below
/// `max(abs_tol[m], rel_tol * |value[m]|)`.
pub fn integrate<const M: usize, F: FnMut(f64) -> [f64; M]>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: [f64; M],
    max_segments: usize,
) -> Result<([f64; M], [f64; M])> {
    let mut segs = vec![gk15(&mut f, a, b)];
    loop {
        let mut val = [0.0; M];
        let mut err = [0.0; M];
        for s in &segs {
            for m in 0..M {
                val[m] += s.val[m];
                err[m] += s.err[m];
            }
        }
        let worst = (0..M).map(|m| err[m] / abs_tol[m].max(rel_tol * val[m].abs())).fold(0.0_f64, f64::max);
        if worst <= 1.0 {
            return Ok((val, err));
        }
        if !worst.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite integrand on [{a:e}, {b:e}]")));
        }
        if segs.len() >= max_segments {
            return Err(Error::Accuracy(format!(
                "quadrature on [{a:e}, {b:e}] stalled at {} segments (error ratio {worst:.2e})",
                segs.len()
            )));
        }
        // split the segment with the largest scaled error
        let scale: Vec<f64> = (0..M).map(|m| abs_tol[m].max(rel_tol * val[m].abs())).collect();
        let (idx, _) = segs
            .iter()
            .enumerate()
            .map(|(i, s)| (i, (0..M).map(|m| s.err[m] / scale[m]).fold(0.0_f64, f64::max)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let s = segs.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        segs.push(gk15(&mut f, s.a, mid));
        segs.push(gk15(&mut f, mid, s.b));
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    integrate(|x| [f(x)], a, b, rel_tol, [abs_tol], 2000).map(|(v, _)| v[0])
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    if n == 1 {
        x[0] = 0.5;
        w[0] = 1.0;
    }
    (x, w)
}
