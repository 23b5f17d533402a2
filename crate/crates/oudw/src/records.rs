//! JSON output records. Every record carries `spec_version`; records built
//! from random draws also echo the seed.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use oudw_core::dw_test::TestOutcome;
use oudw_core::estimators::VarthetaResult;
use oudw_core::EstimationResult;

use crate::csv_io;
use crate::error::Result;

pub const SPEC_VERSION: &str = "1.0";

#[derive(Debug, Serialize)]
pub struct Record<T: Serialize> {
    pub spec_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Record<T> {
    pub fn new(body: T) -> Self {
        Record { spec_version: SPEC_VERSION, seed: None, body }
    }

    pub fn seeded(seed: u64, body: T) -> Self {
        Record { spec_version: SPEC_VERSION, seed: Some(seed), body }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateRecord {
    #[serde(flatten)]
    pub estimates: EstimationResult,
    /// `None` when the Gram matrix is singular.
    pub vartheta: Option<VarthetaResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestRecord {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub theta_hat: f64,
    pub rho_hat: f64,
    pub dw: f64,
    pub z_stat: f64,
    pub alpha: f64,
    pub z_alpha: f64,
    pub reject: bool,
}

impl From<&TestOutcome> for TestRecord {
    fn from(o: &TestOutcome) -> Self {
        TestRecord {
            horizon: o.estimates.stats.horizon,
            theta_hat: o.estimates.theta_hat,
            rho_hat: o.estimates.rho_hat,
            dw: o.estimates.dw,
            z_stat: o.z_statistic,
            alpha: o.alpha,
            z_alpha: o.z_alpha,
            reject: o.reject,
        }
    }
}

/// Pretty JSON to `path`, or to stdout.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = csv_io::create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| crate::Error::Output(e.to_string()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock).map_err(|e| crate::Error::Output(e.to_string()))
        }
    }
}
