//! Replication kernels for Monte Carlo experiments.
//!
//! A replicate is fully determined by `(spec, index)`: its path is drawn from
//! the stream `(seed, Replicate, index)`. Summaries are computed from outcomes
//! collected in index order, so any parallel schedule that keeps the index
//! order gives identical results. [`replicate`] is the sequential driver; the
//! `oudw` crate runs the same kernels on a thread pool.

use alloc::vec::Vec;

use crate::asymptotics::{self, GammaCovariance, Limits};
use crate::dw_test;
use crate::error::{Error, Result};
use crate::estimators;
use crate::functionals;
use crate::linalg::Mat2;
use crate::rng::{self, Domain};
use crate::sde::{self, Grid, ModelParams};
use crate::stats::{self, KsResult, Moments};

/// Level and critical value for rejection-rate bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TestLevel {
    pub alpha: f64,
    pub z_alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentSpec {
    pub params: ModelParams,
    pub horizon: f64,
    pub step: f64,
    pub replications: usize,
    pub seed: u64,
    pub level: Option<TestLevel>,
}

impl ExperimentSpec {
    pub fn grid(&self) -> Result<Grid> {
        if self.replications < 1 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.replications as u64 > rng::MAX_INDEX {
            return Err(Error::invalid("replications", "too many replicates"));
        }
        if let Some(level) = self.level {
            if !(level.alpha > 0.0 && level.alpha < 1.0) {
                return Err(Error::invalid("alpha", "must lie strictly between 0 and 1"));
            }
            if !(level.z_alpha >= 0.0) || level.z_alpha.is_infinite() {
                return Err(Error::invalid("z_alpha", "must be finite and non-negative"));
            }
        }
        Grid::new(self.horizon, self.step)
    }
}

/// Per-replicate estimates and ergodic averages.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReplicateOutcome {
    pub theta_hat: f64,
    pub rho_hat: f64,
    pub dw: f64,
    pub z_stat: f64,
    /// `None` when the Gram matrix is too ill-conditioned.
    pub vartheta_hat: Option<[f64; 2]>,
    /// `S_T / T`
    pub s_over_t: f64,
    /// `P_T / T`, with `P_T = int X V dt` from the simulated noise.
    pub p_over_t: f64,
    /// `L_T / T`, with `L_T = int V^2 dt` from the simulated noise.
    pub l_over_t: f64,
    pub l_hat_over_t: f64,
}

pub fn run_replicate(spec: &ExperimentSpec, grid: Grid, index: u64) -> Result<ReplicateOutcome> {
    let mut rng = rng::stream(spec.seed, Domain::Replicate, index);
    let path = sde::simulate_exact_with(&spec.params, grid, &mut rng);
    let est = estimators::estimate(&path)?;
    let horizon = est.stats.horizon;
    let noise = functionals::noise_integrals(&path);
    Ok(ReplicateOutcome {
        theta_hat: est.theta_hat,
        rho_hat: est.rho_hat,
        dw: est.dw,
        z_stat: dw_test::z_statistic_from_rho(horizon, est.rho_hat),
        vartheta_hat: estimators::vartheta_from_stats(&est.stats).ok().map(|v| v.vartheta_hat),
        s_over_t: est.stats.s_t / horizon,
        p_over_t: noise.p_t / horizon,
        l_over_t: noise.l_t / horizon,
        l_hat_over_t: est.stats.l_hat_t / horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RejectionRate {
    pub rho: f64,
    pub alpha: f64,
    pub z_alpha: f64,
    pub rejections: usize,
    pub replications: usize,
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / R)`.
    pub std_error: f64,
}

impl RejectionRate {
    pub fn from_outcomes(rho: f64, level: TestLevel, outcomes: &[ReplicateOutcome]) -> Self {
        let rejections = outcomes
            .iter()
            .filter(|o| dw_test::rejects(o.z_stat, level.z_alpha))
            .count();
        let n = outcomes.len();
        let rate = rejections as f64 / n as f64;
        RejectionRate {
            rho,
            alpha: level.alpha,
            z_alpha: level.z_alpha,
            rejections,
            replications: n,
            rate,
            std_error: libm::sqrt(rate * (1.0 - rate) / n as f64),
        }
    }
}

/// Sample mean of an ergodic average next to its stationary target.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ErgodicCheck {
    pub mean: f64,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Diagnostics {
    pub s_over_t: ErgodicCheck,
    pub p_over_t: ErgodicCheck,
    pub l_over_t: ErgodicCheck,
    pub l_hat_over_t: ErgodicCheck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VarthetaSummary {
    pub count: usize,
    pub target: [f64; 2],
    pub mean: [f64; 2],
    pub std_error: [f64; 2],
    /// Sample covariance of `sqrt(T) (vartheta_hat - vartheta)`.
    pub scaled_cov: Option<Mat2>,
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentSummary {
    pub spec: ExperimentSpec,
    /// Horizon actually simulated (`steps * step`).
    pub effective_horizon: f64,
    pub replications: usize,
    pub failures: usize,
    pub limits: Limits,
    pub gamma: Option<GammaCovariance>,
    pub theta_hat: Moments,
    pub rho_hat: Moments,
    /// `sqrt(T) (theta_hat - theta*)`
    pub scaled_theta: Moments,
    /// `sqrt(T) (rho_hat - rho*)`
    pub scaled_rho: Moments,
    pub scaled_cov: Option<f64>,
    /// `sqrt(T) (D_T - D*)`
    pub scaled_dw: Moments,
    /// `T rho_hat`, the null-law scaling.
    pub t_rho_hat: Moments,
    pub ks_theta_normal: Option<KsResult>,
    pub ks_rho_normal: Option<KsResult>,
    pub vartheta: Option<VarthetaSummary>,
    pub rejection: Option<RejectionRate>,
    pub diagnostics: Diagnostics,
}

impl Moments {
    /// Standard error of the mean; `None` without a variance.
    pub fn std_error(&self) -> Option<f64> {
        self.variance.map(|v| libm::sqrt(v / self.count as f64))
    }
}

fn column(outcomes: &[ReplicateOutcome], f: impl Fn(&ReplicateOutcome) -> f64) -> Vec<f64> {
    outcomes.iter().map(f).collect()
}

impl ExperimentSummary {
    /// Summarizes outcomes listed in replicate order. Failed replicates are
    /// counted and excluded; at least one must succeed.
    pub fn from_outcomes(spec: &ExperimentSpec, results: &[Result<ReplicateOutcome>]) -> Result<Self> {
        let grid = spec.grid()?;
        let horizon = grid.horizon();
        let outcomes: Vec<ReplicateOutcome> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let failures = results.len() - outcomes.len();
        if outcomes.is_empty() {
            return Err(results
                .iter()
                .find_map(|r| r.as_ref().err().cloned())
                .unwrap_or(Error::invalid("replications", "must be at least 1")));
        }

        let params = spec.params;
        let lim = asymptotics::limits(&params);
        let gamma = asymptotics::covariance_gamma(&params).ok();
        let root_t = libm::sqrt(horizon);

        let theta = column(&outcomes, |o| o.theta_hat);
        let rho = column(&outcomes, |o| o.rho_hat);
        let scaled_theta: Vec<f64> = theta.iter().map(|t| root_t * (t - lim.theta_star)).collect();
        let scaled_rho: Vec<f64> = rho.iter().map(|r| root_t * (r - lim.rho_star)).collect();
        let scaled_dw = column(&outcomes, |o| root_t * (o.dw - lim.d_star));
        let t_rho = column(&outcomes, |o| horizon * o.rho_hat);

        let vartheta = vartheta_summary(&params, root_t, &outcomes);
        let moments = asymptotics::moment_limits(&params);
        let s_target = moments.map(|m| m[0]).or(Some(-0.5 / params.theta));
        let (p_target, l_target) = if params.is_null() {
            (None, None)
        } else {
            (Some(-0.5 / lim.theta_star), Some(-0.5 / params.rho))
        };

        Ok(ExperimentSummary {
            spec: *spec,
            effective_horizon: horizon,
            replications: results.len(),
            failures,
            limits: lim,
            gamma,
            theta_hat: Moments::of(&theta),
            rho_hat: Moments::of(&rho),
            scaled_cov: stats::sample_covariance(&scaled_theta, &scaled_rho),
            ks_theta_normal: gamma.map(|g| stats::ks_normal(&scaled_theta, g.sigma_theta_sq)),
            ks_rho_normal: gamma.map(|g| stats::ks_normal(&scaled_rho, g.sigma_rho_sq)),
            scaled_theta: Moments::of(&scaled_theta),
            scaled_rho: Moments::of(&scaled_rho),
            scaled_dw: Moments::of(&scaled_dw),
            t_rho_hat: Moments::of(&t_rho),
            vartheta,
            rejection: spec.level.map(|level| RejectionRate::from_outcomes(params.rho, level, &outcomes)),
            diagnostics: Diagnostics {
                s_over_t: ErgodicCheck { mean: stats::mean(&column(&outcomes, |o| o.s_over_t)), target: s_target },
                p_over_t: ErgodicCheck { mean: stats::mean(&column(&outcomes, |o| o.p_over_t)), target: p_target },
                l_over_t: ErgodicCheck { mean: stats::mean(&column(&outcomes, |o| o.l_over_t)), target: l_target },
                l_hat_over_t: ErgodicCheck {
                    mean: stats::mean(&column(&outcomes, |o| o.l_hat_over_t)),
                    target: asymptotics::residual_energy_limit(&params),
                },
            },
        })
    }
}

fn vartheta_summary(params: &ModelParams, root_t: f64, outcomes: &[ReplicateOutcome]) -> Option<VarthetaSummary> {
    let pairs: Vec<[f64; 2]> = outcomes.iter().filter_map(|o| o.vartheta_hat).collect();
    if pairs.is_empty() {
        return None;
    }
    let target = [params.theta + params.rho, -params.theta * params.rho];
    let a: Vec<f64> = pairs.iter().map(|p| root_t * (p[0] - target[0])).collect();
    let b: Vec<f64> = pairs.iter().map(|p| root_t * (p[1] - target[1])).collect();
    let (ma, mb) = (Moments::of(&a), Moments::of(&b));
    let scaled_cov = match (ma.variance, mb.variance, stats::sample_covariance(&a, &b)) {
        (Some(va), Some(vb), Some(c)) => Some(Mat2::new(va, c, c, vb)),
        _ => None,
    };
    let se = |m: &Moments| m.std_error().map_or(f64::NAN, |s| s / root_t);
    Some(VarthetaSummary {
        count: pairs.len(),
        target,
        mean: [target[0] + ma.mean / root_t, target[1] + mb.mean / root_t],
        std_error: [se(&ma), se(&mb)],
        scaled_cov,
        correlation: stats::correlation(&a, &b),
    })
}

/// Runs every replicate in order on the current thread.
pub fn replicate(spec: &ExperimentSpec) -> Result<(ExperimentSummary, Vec<ReplicateOutcome>)> {
    let grid = spec.grid()?;
    let results: Vec<Result<ReplicateOutcome>> = (0..spec.replications as u64)
        .map(|i| run_replicate(spec, grid, i))
        .collect();
    let summary = ExperimentSummary::from_outcomes(spec, &results)?;
    Ok((summary, results.into_iter().filter_map(|r| r.ok()).collect()))
}
