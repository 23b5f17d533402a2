//! Parallel drivers for the replication kernels of `oudw_core::harness`.
//!
//! Work is split by replicate index (or sampler chunk) and collected in index
//! order, so every result equals its sequential counterpart bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use oudw_core::asymptotics::{self, CriticalValue, WSamplerConfig, Z_05_REFERENCE, Z_05_REFERENCE_CONFIG};
use oudw_core::harness::{self, ExperimentSpec, ExperimentSummary, RejectionRate, ReplicateOutcome, TestLevel};
use oudw_core::stats::{self, KsResult, Moments};
use oudw_core::ModelParams;

use crate::error::{Error, Result};

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(oudw_core::Error::InvalidArgument { name: "threads", reason: "must be at least 1" }.into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Output(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Every replicate outcome in index order, failures included.
pub fn run_replicates(spec: &ExperimentSpec) -> Result<Vec<oudw_core::Result<ReplicateOutcome>>> {
    let grid = spec.grid()?;
    Ok((0..spec.replications as u64)
        .into_par_iter()
        .map(|i| harness::run_replicate(spec, grid, i))
        .collect())
}

/// Parallel [`harness::replicate`]; also returns the successful outcomes with
/// their replicate index.
pub fn replicate(spec: &ExperimentSpec) -> Result<(ExperimentSummary, Vec<(u64, ReplicateOutcome)>)> {
    let results = run_replicates(spec)?;
    let summary = ExperimentSummary::from_outcomes(spec, &results)?;
    Ok((summary, indexed(&results)))
}

/// Successful outcomes paired with their replicate index.
pub fn indexed(results: &[oudw_core::Result<ReplicateOutcome>]) -> Vec<(u64, ReplicateOutcome)> {
    results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().ok().map(|o| (i as u64, *o)))
        .collect()
}

/// Parallel [`asymptotics::sample_w`].
pub fn sample_w(config: &WSamplerConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let chunks: Vec<Vec<f64>> = (0..config.chunks())
        .into_par_iter()
        .map(|c| asymptotics::sample_w_chunk(config, c))
        .collect();
    Ok(chunks.concat())
}

pub fn quantiles_4w2(alphas: &[f64], config: &WSamplerConfig) -> Result<Vec<CriticalValue>> {
    let sorted = asymptotics::sorted_4w2(&sample_w(config)?);
    Ok(alphas
        .iter()
        .map(|&a| asymptotics::critical_value(&sorted, a))
        .collect::<oudw_core::Result<_>>()?)
}

/// Critical value at `alpha` from `config`, or the frozen reference when
/// `config` is the one that produced it.
pub fn critical_value(alpha: f64, config: &WSamplerConfig) -> Result<CriticalValue> {
    if alpha == Z_05_REFERENCE.alpha && *config == Z_05_REFERENCE_CONFIG {
        return Ok(Z_05_REFERENCE);
    }
    Ok(quantiles_4w2(&[alpha], config)?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullDistribution {
    pub theta: f64,
    pub horizon: f64,
    pub step: f64,
    pub replications: usize,
    pub failures: usize,
    pub w_draws: usize,
    /// Two-sample KS of `T rho_hat` against draws of `W`.
    pub ks: KsResult,
    pub t_rho_hat: Moments,
    pub w: Moments,
}

pub fn null_distribution_experiment(
    theta: f64,
    horizon: f64,
    step: f64,
    replications: usize,
    seed: u64,
    w_config: &WSamplerConfig,
) -> Result<NullDistribution> {
    let spec = ExperimentSpec {
        params: ModelParams::null(theta)?,
        horizon,
        step,
        replications,
        seed,
        level: None,
    };
    compare_with_w(&spec, &run_replicates(&spec)?, w_config)
}

/// KS comparison of `T rho_hat` from existing outcomes of `spec` with `W`.
pub fn compare_with_w(
    spec: &ExperimentSpec,
    results: &[oudw_core::Result<ReplicateOutcome>],
    w_config: &WSamplerConfig,
) -> Result<NullDistribution> {
    let t = spec.grid()?.horizon();
    let scaled: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok()).map(|o| t * o.rho_hat).collect();
    if scaled.is_empty() {
        return Err(Error::Core(oudw_core::Error::DegeneratePath { quantity: "L^_T" }));
    }
    let w = sample_w(w_config)?;
    Ok(NullDistribution {
        theta: spec.params.theta,
        horizon: t,
        step: spec.step,
        replications: results.len(),
        failures: results.len() - scaled.len(),
        w_draws: w.len(),
        ks: stats::ks_two_sample(&scaled, &w),
        t_rho_hat: Moments::of(&scaled),
        w: Moments::of(&w),
    })
}

/// One rejection rate per `rho`, every grid point using the same `seed`.
pub fn level_power_experiment(
    theta: f64,
    rho_grid: &[f64],
    horizon: f64,
    step: f64,
    replications: usize,
    level: TestLevel,
    seed: u64,
) -> Result<Vec<RejectionRate>> {
    rho_grid
        .iter()
        .map(|&rho| {
            let spec = ExperimentSpec {
                params: ModelParams::new(theta, rho)?,
                horizon,
                step,
                replications,
                seed,
                level: Some(level),
            };
            let (summary, _) = replicate(&spec)?;
            Ok(summary.rejection.expect("level is set"))
        })
        .collect()
}
