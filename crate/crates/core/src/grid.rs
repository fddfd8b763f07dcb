//! Log-radial grid on a disc and scalar fields on it.
//!
//! Nodes are r_i = R·e^{−ρ_i} with ρ_i = i·h uniform on [0, rho_max]; node 0
//! is the wall. In ρ the radial Laplacian is exactly u_ρρ / r².

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    /// Disc radius.
    pub radius: f64,
    /// Number of intervals; the grid has `intervals + 1` nodes.
    pub intervals: usize,
    pub rho_max: f64,
}

impl RadialGrid {
    pub fn new(radius: f64, intervals: usize, rho_max: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("grid radius {radius} must be positive")));
        }
        if intervals < 4 {
            return Err(Error::Domain("grid needs at least 4 intervals".into()));
        }
        if !(rho_max > 0.0) {
            return Err(Error::Domain(format!("rho_max {rho_max} must be positive")));
        }
        Ok(RadialGrid { radius, intervals, rho_max })
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Step in ρ.
    pub fn h(&self) -> f64 {
        self.rho_max / self.intervals as f64
    }

    pub fn rho(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn r(&self, i: usize) -> f64 {
        self.radius * (-self.rho(i)).exp()
    }

    pub fn r_min(&self) -> f64 {
        self.r(self.intervals)
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.r(i)).collect()
    }

    /// Same disc with a different resolution.
    pub fn with_intervals(&self, intervals: usize) -> RadialGrid {
        RadialGrid { intervals, ..*self }
    }

    /// Weights w_i with Σ w_i g_i ≈ ∫_{r_min}^R g r dr (composite Simpson in ρ,
    /// with a 3/8 panel at the inner end for odd interval counts).
    pub fn weights(&self) -> Vec<f64> {
        let n = self.intervals;
        let h = self.h();
        let mut w = vec![0.0; n + 1];
        let simpson_end = if n.is_multiple_of(2) { n } else { n - 3 };
        let mut i = 0;
        while i < simpson_end {
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
            i += 2;
        }
        if simpson_end < n {
            let c = 3.0 * h / 8.0;
            w[n - 3] += c;
            w[n - 2] += 3.0 * c;
            w[n - 1] += 3.0 * c;
            w[n] += c;
        }
        for (i, wi) in w.iter_mut().enumerate() {
            let r = self.r(i);
            *wi *= r * r;
        }
        w
    }

    /// Cumulative ∫_{r_j}^R g r dr for every node j (trapezoid in ρ).
    pub fn cumulative_integral(&self, g: &[f64]) -> Vec<f64> {
        let h = self.h();
        let mut out = vec![0.0; self.len()];
        for j in 1..self.len() {
            let a = g[j - 1] * self.r(j - 1).powi(2);
            let b = g[j] * self.r(j).powi(2);
            out[j] = out[j - 1] + 0.5 * h * (a + b);
        }
        out
    }
}

/// Scalar field on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    /// du/dr at the nodes, when known.
    pub deriv: Option<Vec<f64>>,
    /// ∫_0^{r_min} u r dr when it is known better than the flat-core estimate
    /// (sources built from singular profiles).
    pub core_mass: Option<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("field has {} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite field value at node {i}")));
        }
        Ok(RadialField { grid, values, deriv: None, core_mass: None })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: RadialGrid, mut f: F) -> Result<Self> {
        Self::new(grid, grid.radii().into_iter().map(&mut f).collect())
    }

    pub fn constant(grid: RadialGrid, c: f64) -> Self {
        RadialField { grid, values: vec![c; grid.len()], deriv: None, core_mass: None }
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Result<RadialField> {
        RadialField::new(self.grid, self.values.iter().copied().map(f).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// ∫_0^{r_min} u r dr, from `core_mass` or a flat core.
    pub fn core(&self) -> f64 {
        let rm = self.grid.r_min();
        self.core_mass.unwrap_or(self.values[self.grid.intervals] * rm * rm / 2.0)
    }

    /// ∫_0^R u r dr.
    pub fn integral(&self) -> f64 {
        let w = self.grid.weights();
        let body: f64 = w.iter().zip(&self.values).map(|(a, b)| a * b).sum();
        body + self.core()
    }
}

/// (2π∫|u|^p r dr)^{1/p}; `p = ∞` gives the max norm over the nodes.
pub fn lp_norm(u: &RadialField, p: f64) -> f64 {
    if p.is_infinite() {
        return u.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    let a = u.map(|v| v.abs().powf(p)).expect("finite powers");
    (2.0 * std::f64::consts::PI * a.integral()).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn node_layout() {
        let g = RadialGrid::new(2.0, 100, 5.0).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.r(0), 2.0);
        assert!((g.r_min() - 2.0 * (-5.0f64).exp()).abs() < 1e-15);
        assert!(g.radii().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn weights_integrate_polynomials() {
        for n in [1024, 1025, 2000] {
            let g = RadialGrid::new(1.0, n, 14.0).unwrap();
            // ∫_0^1 r^2 · r dr = 1/4 with the flat core negligible at r_min ≈ 8e-7
            let f = RadialField::from_fn(g, |r| r * r).unwrap();
            assert!((f.integral() - 0.25).abs() < 1e-7, "n={n} {}", f.integral());
            let one = RadialField::constant(g, 1.0);
            assert!((one.integral() - 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn l2_of_log_profile() {
        // ‖(−2 log r)^{1/2}‖²_{L²(B1)} = 2π∫(−2 log r) r dr = π
        let g = RadialGrid::new(1.0, 4096, 16.0).unwrap();
        let v = RadialField::from_fn(g, |r| (-2.0 * r.ln()).sqrt()).unwrap();
        assert!((lp_norm(&v, 2.0) - PI.sqrt()).abs() < 1e-6);
    }
}
