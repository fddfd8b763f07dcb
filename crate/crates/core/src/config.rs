//! Run configuration: a flat `key = value` file with `[section]` headers.

use crate::demo::DemoConfig;
use crate::error::{Error, Result};
use crate::evolution::SourceMode;
use crate::nonlinearity::NonlinearitySpec;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Every accepted key, with its meaning. Printed by `--help`.
pub const KEYS: &str = "\
top level:
  spec            catalog key, e.g. smoothed:B=2            [smoothed:B=2]
  out             output directory                           [out]
  seed            seed for the random-field harnesses       [42]
[shooting]
  r_seed          seed radius                                [1e-6]
  ode_tol         ODE tolerance                              [1e-9]
  r_hint          largest admissible wall radius             [1000]
[grid]
  intervals       grid intervals N                           [2048]
  rho_max         depth log(R/r_min)                         [12]
[evolution]
  dt              largest time step                          [1e-3]
  T               largest horizon tried                      [0.1]
  theta           implicitness in [1/2, 1]                   [1]
  source_mode     explicit | semi_implicit | implicit        [semi_implicit]
  perron_tol      sup-norm increment stop                    [1e-8]
  max_perron_iters                                           [60]
  blowup_cap      field ceiling                              [1e6]
  increment_tol   relative increment forcing a halved step   [0.1]
  quad_steps      uniform Perron samples                     [64]
[demo]
  modes           eigenmodes K                               [256]
  probe           probe times as fractions of T              [0.1,0.5,0.9]
  dyadic_levels   samples T/2^j, j up to this                [10]
  u0_truncate     control run from min(U, M)                 [off]
[verify]
  fields          random fields in the Jensen harness        [100]
  modes           eigenmodes K in the Jensen harness         [128]
  intervals       grid intervals for the harness             [2048]";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub fields: usize,
    pub modes: usize,
    pub intervals: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { fields: 100, modes: 128, intervals: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Not part of the hash: the same run in another directory hashes alike.
    #[serde(skip)]
    pub out: PathBuf,
    pub seed: u64,
    pub demo: DemoConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { out: PathBuf::from("out"), seed: 42, demo: DemoConfig::default(), verify: VerifyConfig::default() }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be positive (got {v})")))
    }
}

fn count(key: &str, v: &str) -> Result<usize> {
    let n: usize = num(key, v)?;
    if n == 0 {
        return Err(Error::Config(format!("{key} must be positive")));
    }
    Ok(n)
}

/// Splits the text into `section.key → value` (top-level keys keep no prefix).
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", ln + 1)))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", ln + 1)))?;
        let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key}", ln + 1)));
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (k, v) in parse_entries(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let d = &mut self.demo;
        let e = &mut d.evolution;
        match key {
            "spec" => d.spec = v.to_string(),
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = num(key, v)?,
            "shooting.r_seed" => d.shooting.r_seed = positive(key, num(key, v)?)?,
            "shooting.ode_tol" => d.shooting.ode_tol = positive(key, num(key, v)?)?,
            "shooting.r_hint" => d.shooting.r_max = positive(key, num(key, v)?)?,
            "grid.intervals" => d.intervals = count(key, v)?,
            "grid.rho_max" => d.rho_max = positive(key, num(key, v)?)?,
            "evolution.dt" => e.dt = positive(key, num(key, v)?)?,
            "evolution.T" => e.t_end = positive(key, num(key, v)?)?,
            "evolution.theta" => e.theta = num(key, v)?,
            "evolution.source_mode" => {
                e.source_mode = match v {
                    "explicit" => SourceMode::Explicit,
                    "semi_implicit" => SourceMode::SemiImplicit,
                    "implicit" => SourceMode::Implicit,
                    _ => return Err(Error::Config(format!("{key}: unknown mode '{v}'"))),
                }
            }
            "evolution.perron_tol" => e.perron_tol = positive(key, num(key, v)?)?,
            "evolution.max_perron_iters" => e.max_perron_iters = count(key, v)?,
            "evolution.blowup_cap" => e.blowup_cap = positive(key, num(key, v)?)?,
            "evolution.increment_tol" => e.increment_tol = positive(key, num(key, v)?)?,
            "evolution.quad_steps" => e.quad_steps = count(key, v)?,
            "demo.modes" => d.modes = count(key, v)?,
            "demo.probe" => d.probe = parse_list(key, v)?,
            "demo.dyadic_levels" => d.dyadic_levels = num(key, v)?,
            "demo.u0_truncate" => d.u0_truncate = Some(positive(key, num(key, v)?)?),
            "verify.fields" => self.verify.fields = count(key, v)?,
            "verify.modes" => self.verify.modes = count(key, v)?,
            "verify.intervals" => self.verify.intervals = count(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        NonlinearitySpec::parse(&self.demo.spec).map_err(|_| Error::UnknownSpec(self.demo.spec.clone()))?;
        self.demo.evolution.validate()?;
        if self.demo.probe.is_empty() || self.demo.probe.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Config("probe fractions must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| num::<f64>(key, x.trim())).collect()
}
