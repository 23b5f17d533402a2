//! Plain-text experiment configuration: one `key = value` per line, `#`
//! starts a comment. Unknown or repeated keys are errors.
//!
//! ```text
//! experiment = replicate   # replicate | null | power
//! theta = -2
//! rho = -1
//! horizon = 200
//! step = 0.01
//! replications = 2000
//! seed = 7
//! alpha = 0.05
//! ```

use std::collections::HashMap;
use std::str::FromStr;

use oudw_core::asymptotics::{WMethod, WSamplerConfig, DEFAULT_KL_TERMS, DEFAULT_PATH_STEPS};
use oudw_core::harness::{ExperimentSpec, TestLevel};
use oudw_core::ModelParams;

use crate::error::{Error, Result};

pub const KEYS: [&str; 14] = [
    "experiment",
    "theta",
    "rho",
    "horizon",
    "step",
    "replications",
    "seed",
    "alpha",
    "z_alpha",
    "rho_grid",
    "w_draws",
    "w_method",
    "kl_terms",
    "path_steps",
];

pub const DEFAULT_W_DRAWS: usize = 100_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Estimator moments at one parameter point.
    Replicate,
    /// `T rho_hat` under `rho = 0` against draws of `W`.
    Null,
    /// Rejection rates over a grid of `rho`.
    Power,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub theta: f64,
    pub rho: f64,
    pub horizon: f64,
    pub step: f64,
    pub replications: usize,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub z_alpha: Option<f64>,
    pub rho_grid: Vec<f64>,
    pub w_draws: usize,
    pub w_method: WMethod,
    pub kl_terms: usize,
    pub path_steps: usize,
}

pub fn parse_method(s: &str) -> Option<WMethod> {
    match s {
        "karhunen_loeve" | "kl" => Some(WMethod::KarhunenLoeve),
        "brownian_path" | "path" => Some(WMethod::BrownianPath),
        _ => None,
    }
}

struct Entries(HashMap<&'static str, (usize, String)>);

impl Entries {
    fn parse<T: FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::config(*line, key, format!("cannot parse {raw:?}"))),
        }
    }

    fn require<T: FromStr>(&self, key: &'static str) -> Result<T> {
        self.parse(key)?.ok_or_else(|| Error::config(0, key, "required key is missing"))
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.0)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
            let key = key.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::config(line, key, "unknown key"))?;
            if entries.insert(*known, (line, value.trim().to_string())).is_some() {
                return Err(Error::config(line, key, "repeated key"));
            }
        }
        let e = Entries(entries);

        let kind = match e.0.get("experiment").map(|(_, v)| v.as_str()) {
            None | Some("replicate") => ExperimentKind::Replicate,
            Some("null") => ExperimentKind::Null,
            Some("power") => ExperimentKind::Power,
            Some(other) => {
                return Err(Error::config(e.line("experiment"), "experiment", format!("unknown kind {other:?}")))
            }
        };
        let rho = match kind {
            ExperimentKind::Replicate => e.require("rho")?,
            ExperimentKind::Null => {
                let rho = e.parse::<f64>("rho")?.unwrap_or(0.0);
                if rho != 0.0 {
                    return Err(Error::config(e.line("rho"), "rho", "null experiments run at rho = 0"));
                }
                rho
            }
            ExperimentKind::Power => {
                if e.0.contains_key("rho") {
                    return Err(Error::config(e.line("rho"), "rho", "power experiments take rho_grid"));
                }
                0.0
            }
        };
        let rho_grid = match e.0.get("rho_grid") {
            None if kind == ExperimentKind::Power => {
                return Err(Error::config(0, "rho_grid", "required key is missing"))
            }
            None => Vec::new(),
            Some((line, raw)) => {
                if kind != ExperimentKind::Power {
                    return Err(Error::config(*line, "rho_grid", "only used by power experiments"));
                }
                raw.split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| Error::config(*line, "rho_grid", format!("cannot parse {s:?}"))))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let w_method = match e.0.get("w_method") {
            None => WMethod::KarhunenLoeve,
            Some((line, raw)) => {
                parse_method(raw).ok_or_else(|| Error::config(*line, "w_method", format!("unknown method {raw:?}")))?
            }
        };
        let cfg = ExperimentConfig {
            kind,
            theta: e.require("theta")?,
            rho,
            horizon: e.require("horizon")?,
            step: e.require("step")?,
            replications: e.require("replications")?,
            seed: e.parse("seed")?,
            alpha: e.parse("alpha")?,
            z_alpha: e.parse("z_alpha")?,
            rho_grid,
            w_draws: e.parse("w_draws")?.unwrap_or(DEFAULT_W_DRAWS),
            w_method,
            kl_terms: e.parse("kl_terms")?.unwrap_or(DEFAULT_KL_TERMS),
            path_steps: e.parse("path_steps")?.unwrap_or(DEFAULT_PATH_STEPS),
        };
        cfg.validate(&e)?;
        Ok(cfg)
    }

    fn validate(&self, e: &Entries) -> Result<()> {
        ModelParams::new(self.theta, self.rho)?;
        for &r in &self.rho_grid {
            ModelParams::new(self.theta, r).map_err(|_| Error::config(e.line("rho_grid"), "rho_grid", "values must be finite and <= 0"))?;
        }
        if self.kind == ExperimentKind::Power && self.rho_grid.is_empty() {
            return Err(Error::config(e.line("rho_grid"), "rho_grid", "empty grid"));
        }
        if self.z_alpha.is_some() && self.alpha.is_none() {
            return Err(Error::config(e.line("z_alpha"), "z_alpha", "given without alpha"));
        }
        let level = self.alpha().map(|alpha| TestLevel { alpha, z_alpha: self.z_alpha.unwrap_or(0.0) });
        self.spec(0, level)?.grid()?;
        self.w_config(0).validate()?;
        Ok(())
    }

    /// Level used by `power` runs, and by `replicate` runs when `alpha` is set.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            ExperimentKind::Power => Some(self.alpha.unwrap_or(DEFAULT_ALPHA)),
            _ => self.alpha,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.theta, self.rho)?)
    }

    pub fn spec(&self, seed: u64, level: Option<TestLevel>) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            params: self.params()?,
            horizon: self.horizon,
            step: self.step,
            replications: self.replications,
            seed,
            level,
        })
    }

    pub fn w_config(&self, seed: u64) -> WSamplerConfig {
        WSamplerConfig {
            method: self.w_method,
            kl_terms: self.kl_terms,
            path_steps: self.path_steps,
            count: self.w_draws,
            seed,
        }
    }
}
