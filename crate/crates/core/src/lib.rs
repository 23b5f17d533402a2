//! Exact simulation and likelihood inference for an Ornstein-Uhlenbeck
//! process driven by Ornstein-Uhlenbeck noise,
//!
//! ```text
//! dX_t = theta X_t dt + dV_t
//! dV_t = rho   V_t dt + dW_t,      X_0 = V_0 = 0,  theta < 0,  rho <= 0,
//! ```
//!
//! together with the continuous-time Durbin-Watson statistic, the closed-form
//! limit laws of the estimators, samplers for the non-standard null law
//! `W = (B_1^2 - 1) / (2 int_0^1 B_s^2 ds)` and a serial-correlation test of
//! `rho = 0` against `rho < 0`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the multi-threaded experiment driver live in the `oudw` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod sde;
pub mod stats;

pub use asymptotics::{AsymptoticLaw, GammaCovariance, Limits, WMethod, WSamplerConfig};
pub use dw_test::TestOutcome;
pub use error::{Error, Result};
pub use estimators::{EstimationResult, VarthetaResult};
pub use functionals::SufficientStats;
pub use harness::{ExperimentSpec, ExperimentSummary, ReplicateOutcome};
pub use linalg::Mat2;
pub use sde::{ModelParams, SamplePath, TransitionLaw};
