//! The two-solution pipeline: singular profile, cubic auxiliary problem,
//! supersolution, Perron iteration and the mild residuals of both candidates.

use crate::elliptic::{build_singular_field, ShootingOptions, SingularProfile};
use crate::error::{Error, Result};
use crate::evolution::{
    build_supersolution, initial_w, merge_times, mild_residual, perron_iterate, perron_times, solve_cubic_auxiliary,
    solve_direct, source_fields, stationary, CatalogSource, ConcaveExtension, EvolutionConfig, PerronReport,
    Trajectory,
};
use crate::grid::{lp_norm, RadialField};
use crate::nonlinearity::{find_beta, NonlinearitySpec};
use crate::semigroup::{DiscEigenbasis, ModalOps};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoConfig {
    pub spec: String,
    pub shooting: ShootingOptions,
    pub intervals: usize,
    pub rho_max: f64,
    pub modes: usize,
    /// `t_end` is the largest horizon tried.
    pub evolution: EvolutionConfig,
    /// Probe times as fractions of T.
    pub probe: Vec<f64>,
    /// Dyadic sample times T·2^{−j} for j up to this level; they resolve the
    /// early transient out of the singular data. Capped so that λ_K·t ≥ 25 at
    /// the smallest sample.
    pub dyadic_levels: u32,
    /// Control run: start from min(U, M) and compare Perron with the direct
    /// solver instead of with U.
    pub u0_truncate: Option<f64>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            spec: "smoothed:B=2".into(),
            shooting: ShootingOptions::default(),
            intervals: 2048,
            rho_max: 12.0,
            modes: 256,
            evolution: EvolutionConfig::default(),
            probe: vec![0.1, 0.5, 0.9],
            dyadic_levels: 10,
            u0_truncate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResidual {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedIndicator {
    pub t0: f64,
    /// sup over recorded t ∈ [t₀, T] of ‖u_r(t)‖_∞.
    pub sup_regular: f64,
    pub max_grid_u: f64,
    pub finite_with_margin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossValidation {
    pub t: f64,
    /// ‖u_direct(t) − u_r(t)‖_{L²}.
    pub l2_difference: f64,
    /// ‖u_direct(t) − u_direct,dt/2(t)‖_{L²}.
    pub scheme_estimate: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonUniquenessReport {
    pub spec: String,
    pub horizon: f64,
    pub beta: f64,
    pub radius: f64,
    pub r_min: f64,
    pub residual_stationary: Vec<ProbeResidual>,
    pub residual_regular: Vec<ProbeResidual>,
    pub separation: f64,
    pub bounded_indicator: BoundedIndicator,
    pub cross_validation: CrossValidation,
    pub perron: PerronReport,
    pub verdict: bool,
    pub stages: Vec<String>,
}

pub struct DemoRun {
    pub report: NonUniquenessReport,
    pub profile: SingularProfile,
    /// Grid sampling of U.
    pub u: RadialField,
    /// f(U) with the core mass −r_min U′(r_min).
    pub f_u: RadialField,
    pub spec: NonlinearitySpec,
    pub extension: ConcaveExtension,
    pub w: Trajectory,
    pub ubar: Trajectory,
    pub regular: Trajectory,
    pub direct: Trajectory,
    pub ops: ModalOps,
    /// Times of the Perron samples, starting at 0.
    pub times: Vec<f64>,
}

/// Largest T ≤ t_max, halving from t_max, on which the cubic problem
/// stays under the blow-up ceiling.
pub fn find_horizon(w0: &RadialField, wall: f64, cfg: &EvolutionConfig) -> Result<f64> {
    let mut t = cfg.t_end;
    for _ in 0..30 {
        let c = EvolutionConfig { t_end: t, dt: cfg.dt.min(0.25 * t), ..*cfg };
        let tr = solve_cubic_auxiliary(w0, wall, &c, &[t])?;
        if tr.blowup_time.is_none() {
            return Ok(t);
        }
        t *= 0.5;
    }
    Err(Error::NumericalFailure("no blow-up-free horizon found".into()))
}

/// f(U) on the grid with the exact core mass.
pub fn source_of_profile(spec: &NonlinearitySpec, prof: &SingularProfile, u: &RadialField) -> Result<RadialField> {
    let vals = u.values.iter().map(|&x| spec.evaluate(x.max(0.0), 0)).collect::<Result<Vec<_>>>()?;
    let mut f = RadialField::new(u.grid, vals)?;
    f.core_mass = Some(prof.source_core_mass(u.grid.r_min())?);
    Ok(f)
}

fn l2_diff(a: &RadialField, b: &RadialField) -> Result<f64> {
    let d = RadialField::new(a.grid, a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect())?;
    Ok(lp_norm(&d, 2.0))
}

/// Dyadic times T·2^{−j}, j = 1..=levels.
pub fn dyadic_times(t: f64, levels: u32) -> Vec<f64> {
    (1..=levels).map(|j| t * 0.5f64.powi(j as i32)).collect()
}

pub fn run_demo(cfg: &DemoConfig) -> Result<DemoRun> {
    cfg.evolution.validate().map_err(|e| e.at_stage("config"))?;
    if cfg.probe.is_empty() || cfg.probe.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::Config("probe fractions must lie in (0, 1]".into()).at_stage("config"));
    }
    let mut stages = vec![];
    let spec = NonlinearitySpec::parse(&cfg.spec).map_err(|e| e.at_stage("spec"))?;

    let (profile, u) =
        build_singular_field(&spec, &cfg.shooting, cfg.intervals, cfg.rho_max).map_err(|e| e.at_stage("singular"))?;
    let f_u = source_of_profile(&spec, &profile, &u).map_err(|e| e.at_stage("singular"))?;
    stages.push("singular".to_string());

    let beta = find_beta(&spec).map_err(|e| e.at_stage("beta"))?;
    let extension = ConcaveExtension::new(&spec, beta).map_err(|e| e.at_stage("beta"))?;
    stages.push("beta".to_string());

    let w0 = initial_w(&spec, &u, beta).map_err(|e| e.at_stage("cubic"))?;
    let t_end = find_horizon(&w0, extension.w_b, &cfg.evolution).map_err(|e| e.at_stage("horizon"))?;
    let evo = EvolutionConfig { t_end, dt: cfg.evolution.dt.min(0.25 * t_end), ..cfg.evolution };
    stages.push("horizon".to_string());

    // the K-mode semigroup resolves singular data only once λ_K t is large
    let lambda_k = (crate::bessel::j0_zero(cfg.modes).map_err(|e| e.at_stage("basis"))? / profile.radius).powi(2);
    let levels = cfg.dyadic_levels.min((t_end * lambda_k / 25.0).log2().floor().max(1.0) as u32);
    let probes: Vec<f64> = cfg.probe.iter().map(|p| p * t_end).collect();
    let mut extra = probes.clone();
    extra.push(0.01 * t_end);
    extra.push(0.5 * t_end);
    extra.extend(dyadic_times(t_end, levels));
    let times = perron_times(t_end, evo.quad_steps, &extra);
    let half = 0.5 * t_end;
    let cubic_record = merge_times(t_end, &[&times[1..], &[half * (1.0 - 1e-3)]]);
    let w = solve_cubic_auxiliary(&w0, extension.w_b, &evo, &cubic_record).map_err(|e| e.at_stage("cubic"))?;
    if w.blowup_time.is_some() {
        return Err(
            Error::NumericalFailure("cubic problem hit the ceiling inside the horizon".into()).at_stage("cubic")
        );
    }
    stages.push("cubic".to_string());

    let ubar = build_supersolution(&extension, &w).map_err(|e| e.at_stage("supersolution"))?;
    stages.push("supersolution".to_string());

    let ops = DiscEigenbasis::build(profile.radius, cfg.modes)
        .and_then(|b| ModalOps::new(b, u.grid))
        .map_err(|e| e.at_stage("basis"))?;
    stages.push("basis".to_string());

    let u0 = match cfg.u0_truncate {
        Some(m) => u.map(|x| x.min(m)).map_err(|e| e.at_stage("perron"))?,
        None => u.clone(),
    };
    let src = CatalogSource(&spec);
    let perron = perron_iterate(&src, &u0, Some(&ubar), &ops, &times, &evo).map_err(|e| e.at_stage("perron"))?;
    stages.push("perron".to_string());

    let direct = solve_direct(&spec, &u0, &evo, &times[1..]).map_err(|e| e.at_stage("direct"))?;
    if direct.blowup_time.is_some() {
        return Err(Error::NumericalFailure("direct solver hit the ceiling".into()).at_stage("direct"));
    }
    let fine = EvolutionConfig { dt: 0.5 * evo.dt, ..evo };
    let direct_fine = solve_direct(&spec, &u0, &fine, &[half]).map_err(|e| e.at_stage("direct"))?;
    stages.push("direct".to_string());

    let regular = perron.trajectory;
    let cross = (|| -> Result<CrossValidation> {
        let a = direct.at(half)?;
        let l2_difference = l2_diff(a, regular.at(half)?)?;
        let scheme_estimate = l2_diff(a, direct_fine.at(half)?)?;
        let threshold = 1e-2_f64.max(10.0 * scheme_estimate);
        Ok(CrossValidation { t: half, l2_difference, scheme_estimate, threshold, pass: l2_difference <= threshold })
    })()
    .map_err(|e| e.at_stage("cross_validation"))?;
    stages.push("cross_validation".to_string());

    // second candidate: U itself, or the direct solution in the control run
    let (second, second_sources) = match cfg.u0_truncate {
        None => {
            let tr = stationary(&u, &times);
            let s = vec![f_u.clone(); times.len()];
            (tr, s)
        }
        Some(_) => {
            let mut tr = Trajectory::new();
            tr.push(0.0, u0.clone());
            for (t, f) in direct.times[1..].iter().zip(&direct.fields[1..]) {
                tr.push(*t, f.clone());
            }
            let s = source_fields(&src, &tr).map_err(|e| e.at_stage("residual"))?;
            (tr, s)
        }
    };
    let regular_sources = source_fields(&src, &regular).map_err(|e| e.at_stage("residual"))?;
    let probe_residuals = |tr: &Trajectory, s: &[RadialField]| -> Result<Vec<ProbeResidual>> {
        probes
            .iter()
            .map(|&t| {
                let j = tr.index_of(t).ok_or_else(|| Error::Domain(format!("probe {t} not recorded")))?;
                Ok(ProbeResidual {
                    t,
                    l1: mild_residual(tr, s, &ops, j, 1.0)?,
                    l2: mild_residual(tr, s, &ops, j, 2.0)?,
                })
            })
            .collect()
    };
    let residual_stationary = probe_residuals(&second, &second_sources).map_err(|e| e.at_stage("residual"))?;
    let residual_regular = probe_residuals(&regular, &regular_sources).map_err(|e| e.at_stage("residual"))?;
    let mut separation = 0.0_f64;
    for &t in &probes {
        separation = separation.max(l2_diff(regular.at(t)?, second.at(t)?)?);
    }
    stages.push("residual".to_string());

    let t0 = 0.01 * t_end;
    let sup_regular = regular
        .times
        .iter()
        .zip(&regular.diagnostics)
        .filter(|(t, _)| **t >= t0 * (1.0 - 1e-12))
        .map(|(_, d)| d.sup)
        .fold(0.0, f64::max);
    let max_grid_u = u.max();
    let bounded_indicator = BoundedIndicator {
        t0,
        sup_regular,
        max_grid_u,
        finite_with_margin: sup_regular.is_finite() && sup_regular < 0.9 * max_grid_u,
    };
    let worst = residual_stationary.iter().chain(&residual_regular).map(|r| r.l1.max(r.l2)).fold(0.0, f64::max);
    let verdict = separation > 10.0 * worst && bounded_indicator.finite_with_margin;

    let report = NonUniquenessReport {
        spec: spec.key.clone(),
        horizon: t_end,
        beta,
        radius: profile.radius,
        r_min: u.grid.r_min(),
        residual_stationary,
        residual_regular,
        separation,
        bounded_indicator,
        cross_validation: cross,
        perron: perron.report,
        verdict,
        stages,
    };
    Ok(DemoRun { report, profile, u, f_u, spec, extension, w, ubar, regular, direct, ops, times })
}
