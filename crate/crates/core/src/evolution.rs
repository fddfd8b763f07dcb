//! Time stepping on the log-radial grid, the Cole-Hopf supersolution and the
//! Perron iteration.

use crate::error::{Error, Result};
use crate::grid::{lp_norm, RadialField, RadialGrid};
use crate::nonlinearity::NonlinearitySpec;
use crate::semigroup::{duhamel_coeffs, ModalOps};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SourceMode {
    Explicit,
    /// Source linearised about the previous step.
    SemiImplicit,
    /// Source solved with Newton iterations.
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionConfig {
    /// Largest time step.
    pub dt: f64,
    /// Horizon T.
    pub t_end: f64,
    pub theta: f64,
    pub source_mode: SourceMode,
    pub max_perron_iters: usize,
    pub perron_tol: f64,
    pub blowup_cap: f64,
    /// A step is redone with half the step when some node moves by more than
    /// this fraction of its value.
    pub increment_tol: f64,
    /// Uniform Perron time samples on [0, T].
    pub quad_steps: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 1e-3,
            t_end: 0.1,
            theta: 1.0,
            source_mode: SourceMode::SemiImplicit,
            max_perron_iters: 60,
            perron_tol: 1e-8,
            blowup_cap: 1e6,
            increment_tol: 0.1,
            quad_steps: 64,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt < self.t_end) {
            return Err(Error::Config(format!("need 0 < dt < T (dt = {}, T = {})", self.dt, self.t_end)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta {} outside [1/2, 1]", self.theta)));
        }
        if !(self.perron_tol > 0.0 && self.blowup_cap > 0.0 && self.increment_tol > 0.0) {
            return Err(Error::Config("tolerances and caps must be positive".into()));
        }
        if self.max_perron_iters == 0 || self.quad_steps == 0 {
            return Err(Error::Config("iteration and step counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub sup: f64,
    pub l1: f64,
    pub l2: f64,
    pub l5: f64,
    /// t^{3/10}‖u(t)‖_{L⁵}.
    pub l5_weighted: f64,
}

impl Snapshot {
    pub fn of(t: f64, u: &RadialField) -> Self {
        let l5 = lp_norm(u, 5.0);
        Snapshot {
            t,
            sup: lp_norm(u, f64::INFINITY),
            l1: lp_norm(u, 1.0),
            l2: lp_norm(u, 2.0),
            l5,
            l5_weighted: t.powf(0.3) * l5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<RadialField>,
    pub diagnostics: Vec<Snapshot>,
    /// Time at which the blow-up ceiling was crossed; the trajectory stops at
    /// the last accepted record before it.
    pub blowup_time: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory { times: vec![], fields: vec![], diagnostics: vec![], blowup_time: None, steps: 0, rejected: 0 }
    }

    pub fn push(&mut self, t: f64, u: RadialField) {
        self.diagnostics.push(Snapshot::of(t, &u));
        self.times.push(t);
        self.fields.push(u);
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1e-300))
    }

    pub fn at(&self, t: f64) -> Result<&RadialField> {
        self.index_of(t)
            .map(|i| &self.fields[i])
            .ok_or_else(|| Error::Domain(format!("time {t} is not a recorded time")))
    }

    pub fn grid(&self) -> Option<RadialGrid> {
        self.fields.first().map(|f| f.grid)
    }

    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}

/// Merges time lists into one strictly increasing list on (0, T].
pub fn merge_times(t_end: f64, lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> =
        lists.iter().flat_map(|l| l.iter().copied()).filter(|&t| t > 0.0 && t <= t_end * (1.0 + 1e-12)).collect();
    all.push(t_end);
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        if out.last().is_none_or(|&p| t - p > 1e-12 * t) {
            out.push(t);
        }
    }
    out
}

/// Uniform samples plus the probe times used by the pipeline.
pub fn perron_times(t_end: f64, quad_steps: usize, extra: &[f64]) -> Vec<f64> {
    let uniform: Vec<f64> = (1..=quad_steps).map(|j| t_end * j as f64 / quad_steps as f64).collect();
    let mut t = vec![0.0];
    t.extend(merge_times(t_end, &[&uniform, extra]));
    t
}

/// Reaction term s(u) with derivative, for the stepper.
pub trait Reaction: Sync {
    fn eval(&self, u: f64) -> (f64, f64);
}

/// w³/2.
pub struct Cubic;

impl Reaction for Cubic {
    fn eval(&self, w: f64) -> (f64, f64) {
        (0.5 * w * w * w, 1.5 * w * w)
    }
}

/// f(u) from the catalog; negative round-off near the wall is clipped.
pub struct CatalogSource<'a>(pub &'a NonlinearitySpec);

impl Reaction for CatalogSource<'_> {
    fn eval(&self, u: f64) -> (f64, f64) {
        let u = u.max(0.0);
        match (self.0.evaluate(u, 0), self.0.evaluate(u, 1)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => (f64::NAN, f64::NAN),
        }
    }
}

/// No source.
pub struct NoSource;

impl Reaction for NoSource {
    fn eval(&self, _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// θ-scheme for u_t = Δu + s(u) with u = wall at r = R. The innermost node is
/// a finite-volume cell for the disc of radius r_{N−1/2}.
pub struct Stepper<'a, S: Reaction> {
    pub grid: RadialGrid,
    pub wall: f64,
    pub source: &'a S,
    pub cfg: EvolutionConfig,
    /// Diffusion switched off (only for the zero-diffusion oracle).
    pub diffusion: bool,
    /// Fields above this value stop the run with a blow-up flag.
    pub ceiling: f64,
    /// Fields below this value are a hard failure.
    pub floor: Option<f64>,
}

fn thomas(a: &[f64], b: &mut [f64], c: &[f64], d: &mut [f64]) {
    let n = b.len();
    for i in 1..n {
        let m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for i in (0..n - 1).rev() {
        d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
    }
}

impl<S: Reaction> Stepper<'_, S> {
    /// Diffusion coefficients (lower, upper) per unknown node i = 1..=N.
    fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid;
        let n = g.intervals;
        let h = g.h();
        let mut lo = vec![0.0; n + 1];
        let mut up = vec![0.0; n + 1];
        if !self.diffusion {
            return (lo, up);
        }
        for i in 1..n {
            let c = 1.0 / (h * h * g.r(i).powi(2));
            lo[i] = c;
            up[i] = c;
        }
        let r_half = g.radius * (-(n as f64 - 0.5) * h).exp();
        lo[n] = 2.0 / (h * r_half * r_half);
        (lo, up)
    }

    fn apply_l(&self, u: &[f64], lo: &[f64], up: &[f64], i: usize) -> f64 {
        let n = self.grid.intervals;
        if i == n {
            lo[n] * (u[n - 1] - u[n])
        } else {
            lo[i] * u[i - 1] - (lo[i] + up[i]) * u[i] + up[i] * u[i + 1]
        }
    }

    /// One step of size dt from u; None when the step must be retried.
    fn step(&self, u: &[f64], dt: f64, lo: &[f64], up: &[f64]) -> Option<Vec<f64>> {
        let n = self.grid.intervals;
        let th = self.cfg.theta;
        let mut iterate = u.to_vec();
        let newton_iters = match self.cfg.source_mode {
            SourceMode::Implicit => 30,
            _ => 1,
        };
        for _ in 0..newton_iters {
            let m = n;
            let mut a = vec![0.0; m];
            let mut b = vec![0.0; m];
            let mut c = vec![0.0; m];
            let mut d = vec![0.0; m];
            for i in 1..=n {
                let k = i - 1;
                let explicit = (1.0 - th) * self.apply_l(u, lo, up, i);
                let (s_old, _) = self.source.eval(u[i]);
                let (s_it, ds_it) = self.source.eval(iterate[i]);
                let (src, diag_src) = match self.cfg.source_mode {
                    SourceMode::Explicit => (s_old, 0.0),
                    _ => (s_it - ds_it * iterate[i], ds_it),
                };
                b[k] = 1.0 / dt + th * (lo[i] + if i < n { up[i] } else { 0.0 }) - diag_src;
                d[k] = u[i] / dt + explicit + src;
                if i > 1 {
                    a[k] = -th * lo[i];
                } else {
                    d[k] += th * lo[i] * self.wall;
                }
                if i < n {
                    c[k] = -th * up[i];
                }
            }
            thomas(&a, &mut b, &c, &mut d);
            let mut next = Vec::with_capacity(n + 1);
            next.push(self.wall);
            next.extend_from_slice(&d);
            if next.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let change =
                next.iter().zip(&iterate).map(|(x, y)| (x - y).abs() / x.abs().max(1e-300)).fold(0.0, f64::max);
            iterate = next;
            if change < 1e-13 {
                break;
            }
        }
        Some(iterate)
    }

    /// Runs to the last record time, storing the field at every record time.
    pub fn run(&self, u0: &RadialField, record: &[f64]) -> Result<Trajectory> {
        self.cfg.validate()?;
        if u0.grid != self.grid {
            return Err(Error::Domain("initial field lives on a different grid".into()));
        }
        let (lo, up) = self.coefficients();
        let mut traj = Trajectory::new();
        let mut u = u0.values.clone();
        u[0] = self.wall;
        traj.push(0.0, RadialField::new(self.grid, u.clone())?);
        let mut t = 0.0;
        let mut dt = self.cfg.dt;
        let dt_min = 1e-20 * self.cfg.t_end;
        for &target in record {
            while t < target * (1.0 - 1e-14) {
                let h = dt.min(target - t);
                let Some(next) = self.step(&u, h, &lo, &up) else {
                    traj.rejected += 1;
                    dt = 0.5 * h;
                    if dt < dt_min {
                        return Err(Error::StepFailure { t, msg: "step size underflow".into() });
                    }
                    continue;
                };
                let sup = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let inc = next
                    .iter()
                    .zip(&u)
                    .map(|(x, y)| (x - y).abs() / y.abs().max(1e-3 * sup).max(1e-300))
                    .fold(0.0, f64::max);
                if inc > self.cfg.increment_tol {
                    traj.rejected += 1;
                    dt = 0.5 * h;
                    if dt < dt_min {
                        return Err(Error::StepFailure { t, msg: "step size underflow".into() });
                    }
                    continue;
                }
                if let Some(fl) = self.floor {
                    if let Some(i) = next.iter().position(|&v| v < fl) {
                        return Err(Error::NumericalFailure(format!(
                            "field fell to {} below {fl} at node {i}, t = {}",
                            next[i],
                            t + h
                        )));
                    }
                }
                if next.iter().any(|&v| v > self.ceiling) {
                    if traj.times.len() == 1 {
                        return Err(Error::NumericalFailure(format!("blow-up before any record (t = {})", t + h)));
                    }
                    traj.blowup_time = Some(t + h);
                    return Ok(traj);
                }
                traj.steps += 1;
                t = if h == target - t { target } else { t + h };
                u = next;
                if inc < 0.25 * self.cfg.increment_tol && h == dt {
                    dt = (2.0 * dt).min(self.cfg.dt);
                }
            }
            traj.push(target, RadialField::new(self.grid, u.clone())?);
        }
        Ok(traj)
    }
}

/// w₀ = F(max(U, β))^{−1/2}.
pub fn initial_w(spec: &NonlinearitySpec, u: &RadialField, beta: f64) -> Result<RadialField> {
    let wb = spec.eval_big_f(beta)?.powf(-0.5);
    let vals = u
        .values
        .iter()
        .map(|&x| if x > beta { spec.log_big_f(x).map(|l| (-0.5 * l).exp()) } else { Ok(wb) })
        .collect::<Result<Vec<_>>>()?;
    RadialField::new(u.grid, vals)
}

/// ∂_t w − Δw = w³/2 with w = wall_value on the boundary.
pub fn solve_cubic_auxiliary(
    w0: &RadialField,
    wall_value: f64,
    cfg: &EvolutionConfig,
    record: &[f64],
) -> Result<Trajectory> {
    if let Some(i) = w0.values.iter().position(|&v| v < wall_value * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!("w0 = {} below the wall value {wall_value} at node {i}", w0.values[i])));
    }
    let ceiling = cfg.blowup_cap.max(2.0 * w0.max());
    let st = Stepper {
        grid: w0.grid,
        wall: wall_value,
        source: &Cubic,
        cfg: *cfg,
        diffusion: true,
        ceiling,
        floor: Some(wall_value * (1.0 - 1e-9)),
    };
    st.run(w0, record)
}

/// ∂_t u − Δu = f(u), u = 0 on the wall.
pub fn solve_direct(
    spec: &NonlinearitySpec,
    u0: &RadialField,
    cfg: &EvolutionConfig,
    record: &[f64],
) -> Result<Trajectory> {
    let src = CatalogSource(spec);
    let st = Stepper {
        grid: u0.grid,
        wall: 0.0,
        source: &src,
        cfg: *cfg,
        diffusion: true,
        ceiling: cfg.blowup_cap.max(2.0 * u0.max()),
        floor: None,
    };
    st.run(u0, record)
}

/// Heat flow without source, for the eigen-decay oracle.
pub fn solve_heat(u0: &RadialField, cfg: &EvolutionConfig, record: &[f64]) -> Result<Trajectory> {
    let st = Stepper {
        grid: u0.grid,
        wall: 0.0,
        source: &NoSource,
        cfg: *cfg,
        diffusion: true,
        ceiling: f64::INFINITY,
        floor: None,
    };
    st.run(u0, record)
}

/// Concave extension of t ↦ F⁻¹(t⁻²) below w_b = F(β)^{−1/2} by its tangent.
#[derive(Debug, Clone)]
pub struct ConcaveExtension {
    pub spec: NonlinearitySpec,
    pub beta: f64,
    pub w_b: f64,
    pub slope: f64,
}

impl ConcaveExtension {
    pub fn new(spec: &NonlinearitySpec, beta: f64) -> Result<Self> {
        let big_f = spec.eval_big_f(beta)?;
        let f = spec.evaluate(beta, 0)?;
        Ok(ConcaveExtension { spec: spec.clone(), beta, w_b: big_f.powf(-0.5), slope: 2.0 * big_f.powf(1.5) * f })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t > self.w_b {
            self.spec.eval_big_f_inv(t.powi(-2))
        } else {
            Ok(self.slope * (t - self.w_b) + self.beta)
        }
    }

    /// H(0) = β − 2f(β)F(β).
    pub fn at_zero(&self) -> f64 {
        self.beta - self.slope * self.w_b
    }
}

/// ū = F⁻¹(w⁻²) at every recorded time; exactly β where w is at the wall value.
pub fn build_supersolution(h: &ConcaveExtension, w: &Trajectory) -> Result<Trajectory> {
    let mut out = Trajectory::new();
    for (t, f) in w.times.iter().zip(&w.fields) {
        let vals = f
            .values
            .iter()
            .map(|&x| {
                if x < h.w_b * (1.0 - 1e-9) {
                    Err(Error::Domain(format!("w = {x} below the wall value {}", h.w_b)))
                } else if x <= h.w_b {
                    Ok(h.beta)
                } else {
                    h.eval(x)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(*t, RadialField::new(f.grid, vals)?);
    }
    out.blowup_time = w.blowup_time;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionDefect {
    pub t: f64,
    /// 4f(ū)w⁻⁴|∇w|²(3/2 − f′(ū)F(ū)) at interior nodes.
    pub algebraic: Vec<f64>,
    /// r²(∂_tū − Δū − f(ū)) at interior nodes, backward difference in time.
    pub raw_scaled: Vec<f64>,
    pub min_algebraic: f64,
    pub min_raw_scaled: f64,
}

/// Defects of ū at record index j (j ≥ 1), using the record before it for ∂_t.
pub fn supersolution_defect(
    spec: &NonlinearitySpec,
    w: &Trajectory,
    ubar: &Trajectory,
    j: usize,
) -> Result<SupersolutionDefect> {
    if j == 0 || j >= w.times.len() || ubar.times.len() != w.times.len() {
        return Err(Error::Domain(format!("record {j} has no predecessor")));
    }
    let g = w.fields[j].grid;
    let n = g.intervals;
    let h = g.h();
    let dt = w.times[j] - w.times[j - 1];
    let (wv, uv, up) = (&w.fields[j].values, &ubar.fields[j].values, &ubar.fields[j - 1].values);
    let mut alg = vec![0.0; n + 1];
    let mut raw = vec![0.0; n + 1];
    for i in 1..n {
        let r = g.r(i);
        let dw = (wv[i + 1] - wv[i - 1]) / (2.0 * h * r);
        let tail = spec.tail(uv[i])?;
        let f = spec.evaluate(uv[i], 0)?;
        alg[i] = 4.0 * f * wv[i].powi(-4) * dw * dw * (1.5 - tail.fprime_f());
        let lap = uv[i + 1] - 2.0 * uv[i] + uv[i - 1];
        raw[i] = r * r * ((uv[i] - up[i]) / dt - f) - lap / (h * h);
    }
    let min = |v: &[f64]| v[1..n].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SupersolutionDefect {
        t: w.times[j],
        min_algebraic: min(&alg),
        min_raw_scaled: min(&raw),
        algebraic: alg,
        raw_scaled: raw,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PerronReport {
    pub iterations: usize,
    /// sup over (t, x) of |U⁽ⁿ⁾ − U⁽ⁿ⁻¹⁾| for n = 1, 2, …
    pub increments: Vec<f64>,
    /// Most negative U⁽ⁿ⁾ − U⁽ⁿ⁻¹⁾ over all iterates.
    pub min_step: f64,
    /// Largest U⁽ⁿ⁾ − ū over all iterates (when ū is supplied).
    pub max_over_ubar: f64,
    pub monotone: bool,
    pub dominated: bool,
    /// Increments shrink by at least 2× per iteration from n = 3 on.
    pub contracting: bool,
    pub converged: bool,
}

pub struct PerronResult {
    pub trajectory: Trajectory,
    pub report: PerronReport,
    /// Modal coefficients of U⁽ⁿ⁾ at each time (heat part plus Duhamel part).
    pub coeffs: Vec<Vec<f64>>,
}

/// U⁽⁰⁾ = e^{tΔ}u₀, U⁽ⁿ⁾ = e^{tΔ}u₀ + ∫₀ᵗe^{(t−s)Δ}f(U⁽ⁿ⁻¹⁾(s))ds on the
/// given times (times[0] = 0). On the first interval the source is held at
/// its value at times[1], so f is never evaluated on singular data.
pub fn perron_iterate<S: Reaction>(
    source: &S,
    u0: &RadialField,
    ubar: Option<&Trajectory>,
    ops: &ModalOps,
    times: &[f64],
    cfg: &EvolutionConfig,
) -> Result<PerronResult> {
    if times.first() != Some(&0.0) {
        return Err(Error::Domain("Perron times must start at 0".into()));
    }
    let ubar_fields: Option<Vec<&RadialField>> = match ubar {
        Some(tr) => Some(times.iter().map(|&t| tr.at(t)).collect::<Result<_>>()?),
        None => None,
    };
    let c0 = ops.project(u0)?;
    let heat: Vec<Vec<f64>> = times.iter().map(|&t| ops.decay(&c0, t)).collect();
    let mut coeffs = heat.clone();
    let fields_of = |coeffs: &[Vec<f64>]| -> Result<Vec<RadialField>> {
        let mut v = vec![u0.clone()];
        for c in &coeffs[1..] {
            v.push(ops.evaluate(c)?);
        }
        Ok(v)
    };
    let mut fields = fields_of(&coeffs)?;
    let mut rep = PerronReport {
        iterations: 0,
        increments: vec![],
        min_step: f64::INFINITY,
        max_over_ubar: f64::NEG_INFINITY,
        monotone: true,
        dominated: true,
        contracting: true,
        converged: false,
    };
    let check_ubar = |fields: &[RadialField], rep: &mut PerronReport| {
        if let Some(ub) = &ubar_fields {
            for (f, b) in fields.iter().zip(ub).skip(1) {
                let m = f.values.iter().zip(&b.values).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
                rep.max_over_ubar = rep.max_over_ubar.max(m);
            }
            rep.dominated = rep.max_over_ubar <= 1e-6;
        }
    };
    check_ubar(&fields, &mut rep);
    let mut prev_d = vec![vec![0.0; ops.modes()]; times.len()];
    for n in 1..=cfg.max_perron_iters {
        let mut src = Vec::with_capacity(times.len());
        for f in &fields[1..] {
            let s = RadialField::new(f.grid, f.values.iter().map(|&x| source.eval(x).0).collect())?;
            src.push(ops.project(&s)?);
        }
        src.insert(0, src[0].clone());
        let d = duhamel_coeffs(&ops.basis.lambda, times, &src)?;
        let next_coeffs: Vec<Vec<f64>> =
            heat.iter().zip(&d).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        let next = fields_of(&next_coeffs)?;
        // the heat part cancels in U⁽ⁿ⁾ − U⁽ⁿ⁻¹⁾; differencing the Duhamel
        // coefficients first keeps the step free of cancellation
        let mut inc = 0.0_f64;
        for (a, b) in d.iter().zip(&prev_d).skip(1) {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            for x in ops.evaluate(&diff)?.values {
                inc = inc.max(x.abs());
                rep.min_step = rep.min_step.min(x);
            }
        }
        prev_d = d;
        rep.monotone = rep.min_step >= -1e-12;
        rep.increments.push(inc);
        rep.iterations = n;
        check_ubar(&next, &mut rep);
        fields = next;
        coeffs = next_coeffs;
        if n > 3 {
            let k = rep.increments.len();
            if rep.increments[k - 1] > 0.5 * rep.increments[k - 2] {
                rep.contracting = false;
            }
        }
        if inc < cfg.perron_tol {
            rep.converged = true;
            break;
        }
    }
    let mut traj = Trajectory::new();
    for (t, f) in times.iter().zip(fields) {
        traj.push(*t, f);
    }
    Ok(PerronResult { trajectory: traj, report: rep, coeffs })
}

/// f(u(t)) at every record, with record 0 copying record 1 as in
/// [`perron_iterate`].
pub fn source_fields<S: Reaction>(source: &S, traj: &Trajectory) -> Result<Vec<RadialField>> {
    if traj.times.len() < 2 {
        return Err(Error::Domain("trajectory needs a record after t = 0".into()));
    }
    let mut out = Vec::with_capacity(traj.times.len());
    for f in &traj.fields[1..] {
        out.push(RadialField::new(f.grid, f.values.iter().map(|&x| source.eval(x).0).collect())?);
    }
    out.insert(0, out[0].clone());
    Ok(out)
}

/// ‖u(t_j) − e^{t_jΔ}u(0) − ∫₀^{t_j} e^{(t_j−s)Δ}f(u(s))ds‖_{L^p}, with every
/// term in projected (modal) form and the Duhamel integral taken on the
/// trajectory's own times. `sources[i]` is f(u(t_i)).
pub fn mild_residual(traj: &Trajectory, sources: &[RadialField], ops: &ModalOps, j: usize, p: f64) -> Result<f64> {
    if j == 0 || j >= traj.times.len() || sources.len() < j + 1 {
        return Err(Error::Domain(format!("record {j} out of range")));
    }
    let times = &traj.times[..=j];
    let src = sources[..=j].iter().map(|s| ops.project(s)).collect::<Result<Vec<_>>>()?;
    let d = duhamel_coeffs(&ops.basis.lambda, times, &src)?;
    let c0 = ops.decay(&ops.project(&traj.fields[0])?, times[j]);
    let cj = ops.project(&traj.fields[j])?;
    let res: Vec<f64> = (0..cj.len()).map(|k| cj[k] - c0[k] - d[j][k]).collect();
    Ok(lp_norm(&ops.evaluate(&res)?, p))
}

/// min over interior nodes of (u(t) − c) − e^{tΔ}(u(0) − c): the comparison
/// with the semigroup after lifting off the constant wall value c.
pub fn lifted_comparison(traj: &Trajectory, wall: f64, ops: &ModalOps, t: f64) -> Result<f64> {
    let u0 = traj.fields[0].map(|x| x - wall)?;
    let heat = ops.heat_apply(&u0, t)?;
    let ut = traj.at(t)?;
    Ok((1..ut.values.len()).map(|i| ut.values[i] - wall - heat.values[i]).fold(f64::INFINITY, f64::min))
}

/// ‖∫₀ᵗ e^{(t−s)Δ}f(ū(s))ds‖_∞ at each of the given times, from the records of
/// ū up to that time (same first-interval rule as the Perron iteration).
pub fn duhamel_sup_sequence<S: Reaction>(
    source: &S,
    ubar: &Trajectory,
    ops: &ModalOps,
    at: &[f64],
) -> Result<Vec<f64>> {
    let sources = source_fields(source, ubar)?;
    let coeffs = sources.iter().map(|s| ops.project(s)).collect::<Result<Vec<_>>>()?;
    let d = duhamel_coeffs(&ops.basis.lambda, &ubar.times, &coeffs)?;
    at.iter()
        .map(|&t| {
            let j = ubar.index_of(t).ok_or_else(|| Error::Domain(format!("time {t} is not a recorded time")))?;
            Ok(lp_norm(&ops.evaluate(&d[j])?, f64::INFINITY))
        })
        .collect()
}

/// Largest second difference of H on `samples` equally spaced points of
/// [0, t_max]; ≤ 0 up to roundoff for a concave H.
pub fn concavity_defect(h: &ConcaveExtension, t_max: f64, samples: usize) -> Result<f64> {
    let dt = t_max / (samples - 1) as f64;
    let v = (0..samples).map(|i| h.eval(i as f64 * dt)).collect::<Result<Vec<_>>>()?;
    Ok(v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::NEG_INFINITY, f64::max))
}

/// Stationary trajectory u ≡ U on the given times.
pub fn stationary(u: &RadialField, times: &[f64]) -> Trajectory {
    let mut tr = Trajectory::new();
    for &t in times {
        tr.push(t, u.clone());
    }
    tr
}
