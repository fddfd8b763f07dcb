//! The four CLI commands. Each writes its artifacts under the configured
//! output directory and returns the process exit code.

use crate::config::RunConfig;
use crate::demo::run_demo;
use crate::elliptic::{
    build_singular_field, distributional_pairing, fd_elliptic_residual, integrability_report, IntegrabilityReport,
    TestFunction,
};
use crate::error::{Error, Result};
use crate::io::{write_csv, write_json, write_summary, write_trajectory};
use crate::nonlinearity::{classify, NonlinearitySpec};
use crate::transform::{check_f3, f3_radii, TransformDiagnostics, F3_THRESHOLD};
use crate::verify::run_verify;
use serde::Serialize;
use std::fs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_CONSTRUCTION: i32 = 3;
/// Demo stage failure, failed verdict or failed property check.
pub const EXIT_DEMO: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Grids shallower than this many e-folds get a warning from `singular`.
pub const SHALLOW_RHO: f64 = 8.0;
/// Bound on the r²-scaled FD residual over 10⁻³ ≤ r ≤ R/2. The band stops
/// short of the wall because for f unbounded at 0 the truncation error of
/// the stencil grows without bound there.
pub const RESIDUAL_BOUND: f64 = 1e-3;
/// Bound on the annular pairing.
pub const PAIRING_BOUND: f64 = 1e-6;

fn spec_of(cfg: &RunConfig) -> Result<NonlinearitySpec> {
    NonlinearitySpec::parse(&cfg.demo.spec).map_err(|_| Error::UnknownSpec(cfg.demo.spec.clone()))
}

/// Exit code for an error escaping a command.
pub fn exit_code_for(e: &Error, command: &str) -> i32 {
    match e.root() {
        Error::UnknownSpec(_) | Error::Config(_) => EXIT_USAGE,
        _ => match command {
            "classify" => EXIT_HYPOTHESIS,
            "singular" => EXIT_CONSTRUCTION,
            _ => EXIT_DEMO,
        },
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    hypothesis: crate::nonlinearity::HypothesisReport,
    transform: Option<TransformDiagnostics>,
    transform_error: Option<String>,
    pass: bool,
}

/// Writes classify.json plus the sample CSVs; exit 2 unless (f1), (f2) and
/// the β conditions hold. The (f3) indicator is reported, not enforced.
pub fn cmd_classify(cfg: &RunConfig) -> Result<i32> {
    let spec = spec_of(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let hash = cfg.hash();
    let hypothesis = classify(&spec);
    let (transform, transform_error) = match check_f3(&spec, &f3_radii(), F3_THRESHOLD) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pass = hypothesis.f1_finite && hypothesis.f2_ok && hypothesis.beta.is_some();
    write_csv(
        &cfg.out.join("fprime_F.csv"),
        &hash,
        &["s", "fprime_F"],
        hypothesis.fprime_f_samples.iter().map(|&(s, v)| vec![s, v]),
    )?;
    write_csv(&cfg.out.join("B2.csv"), &hash, &["s", "B2"], hypothesis.b2_samples.iter().map(|&(s, v)| vec![s, v]))?;
    if let Some(t) = &transform {
        let rows = (0..t.radii.len()).map(|i| vec![t.radii[i], t.tilde_u[i], t.r1[i], t.r2[i], t.f3_indicator[i]]);
        write_csv(&cfg.out.join("f3.csv"), &hash, &["r", "tilde_u", "R1", "R2", "indicator"], rows)?;
    }
    let out = ClassifyOutput { hypothesis, transform, transform_error, pass };
    write_json(&cfg.out.join("classify.json"), &out)?;
    Ok(if pass { EXIT_OK } else { EXIT_HYPOTHESIS })
}

#[derive(Serialize)]
struct SingularOutput {
    spec: String,
    radius: f64,
    r_min: f64,
    shooting_steps: usize,
    residual_r_cut: f64,
    residual_linf_scaled: f64,
    residual_l1: f64,
    /// Same, restricted to r ≤ R/2.
    residual_band_scaled: f64,
    pairing_annular: f64,
    pairing_centered: f64,
    integrability: Option<IntegrabilityReport>,
    warnings: Vec<String>,
    pass: bool,
}

/// Writes singular.csv (r, U, dU/dr) and singular.json; exit 0 iff the
/// residual and annular pairing bounds hold, 3 when shooting fails.
pub fn cmd_singular(cfg: &RunConfig) -> Result<i32> {
    let spec = spec_of(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let d = &cfg.demo;
    let (prof, u) = match build_singular_field(&spec, &d.shooting, d.intervals, d.rho_max) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("shooting failed: {e}");
            return Ok(EXIT_CONSTRUCTION);
        }
    };
    let hash = cfg.hash();
    let deriv = u.deriv.clone().unwrap_or_default();
    let rows = (0..u.values.len()).map(|i| vec![u.grid.r(i), u.values[i], deriv.get(i).copied().unwrap_or(f64::NAN)]);
    write_csv(&cfg.out.join("singular.csv"), &hash, &["r", "U", "dU_dr"], rows)?;
    let res = fd_elliptic_residual(&spec, &u, Some(1e-3))?;
    let r = prof.radius;
    let band = (1..u.grid.intervals)
        .filter(|&i| (res.r_cut..=0.5 * r).contains(&u.grid.r(i)))
        .map(|i| res.residual[i].abs() * u.grid.r(i).powi(2))
        .fold(0.0, f64::max);
    let annular = distributional_pairing(&spec, &u, TestFunction::AnnularBump { a: 0.2 * r, b: 0.8 * r })?;
    let centered = distributional_pairing(&spec, &u, TestFunction::CenteredBump { rho0: 0.5 * r })?;
    let mut warnings = vec![];
    let integrability = match spec.evaluate(0.0, 0) {
        Ok(f0) if f0.is_finite() => Some(integrability_report(&spec, &u)?),
        _ => {
            warnings.push(
                "f is unbounded at 0, so f(U) is not integrable at the wall; integrability profile skipped".into(),
            );
            None
        }
    };
    if d.rho_max < SHALLOW_RHO {
        warnings.push(format!("grid is shallow: rho_max = {} < {SHALLOW_RHO}", d.rho_max));
    }
    let pass = band <= RESIDUAL_BOUND && annular.abs() <= PAIRING_BOUND;
    let out = SingularOutput {
        spec: spec.key.clone(),
        radius: r,
        r_min: u.grid.r_min(),
        shooting_steps: prof.steps(),
        residual_r_cut: res.r_cut,
        residual_linf_scaled: res.linf_scaled,
        residual_l1: res.l1,
        residual_band_scaled: band,
        pairing_annular: annular,
        pairing_centered: centered,
        integrability,
        warnings,
        pass,
    };
    write_json(&cfg.out.join("singular.json"), &out)?;
    Ok(if pass { EXIT_OK } else { EXIT_CONSTRUCTION })
}

/// Runs the pipeline, writes demo.json and trajectory CSVs. Exit 0 iff the
/// verdict is the expected one (two solutions, or none in a control run)
/// and the cross-validation and Perron checks pass.
pub fn cmd_demo(cfg: &RunConfig) -> Result<i32> {
    spec_of(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let run = match run_demo(&cfg.demo) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_DEMO);
        }
    };
    let hash = cfg.hash();
    write_json(&cfg.out.join("demo.json"), &run.report)?;
    write_trajectory(&cfg.out.join("regular.csv"), &hash, &run.regular)?;
    write_summary(&cfg.out.join("regular_summary.csv"), &hash, &run.regular)?;
    write_summary(&cfg.out.join("w_summary.csv"), &hash, &run.w)?;
    write_summary(&cfg.out.join("ubar_summary.csv"), &hash, &run.ubar)?;
    write_summary(&cfg.out.join("direct_summary.csv"), &hash, &run.direct)?;
    let r = &run.report;
    let expected = cfg.demo.u0_truncate.is_none();
    let ok = r.verdict == expected && r.cross_validation.pass && r.perron.monotone && r.perron.dominated;
    Ok(if ok { EXIT_OK } else { EXIT_DEMO })
}

/// Runs the property suite and writes verify.json.
pub fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    fs::create_dir_all(&cfg.out)?;
    let rep = run_verify(cfg);
    write_json(&cfg.out.join("verify.json"), &rep)?;
    for c in rep.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {}", c.name, c.detail);
    }
    Ok(if rep.pass { EXIT_OK } else { EXIT_DEMO })
}
