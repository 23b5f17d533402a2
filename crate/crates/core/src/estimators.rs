//! Maximum-likelihood drift estimates, the continuous-time Durbin-Watson
//! statistic and the bivariate estimator of `(theta + rho, -theta rho)`.

use crate::error::{Error, Result};
use crate::functionals::{self, SufficientStats};
use crate::linalg::Mat2;
use crate::sde::SamplePath;

/// Quadratic functionals below this are treated as zero.
pub const DEGENERATE_FLOOR: f64 = 1e-300;

/// Largest accepted condition number of the Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// `(Y_T^2 - T) / (2 int_0^T Y_t^2 dt)`, the drift MLE of a unit-diffusion
/// linear SDE `dY = a Y dt + dW` written through Itô's formula.
pub fn unit_diffusion_mle(terminal: f64, energy: f64, horizon: f64, quantity: &'static str) -> Result<f64> {
    if !(energy >= DEGENERATE_FLOOR) {
        return Err(Error::DegeneratePath { quantity });
    }
    Ok((terminal * terminal - horizon) / (2.0 * energy))
}

/// `theta_hat_T = (X_T^2 - T) / (2 S_T)`.
pub fn estimate_theta(path: &SamplePath) -> Result<f64> {
    let s_t = functionals::trapezoid_sq(path.x(), path.step());
    unit_diffusion_mle(path.terminal().0, s_t, path.horizon(), "S_T")
}

/// `rho_hat_T` from an already-built residual path on a grid of spacing `step`.
pub fn estimate_rho_from_residuals(residuals: &[f64], step: f64) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::invalid("residuals", "need at least two grid points"));
    }
    let horizon = (residuals.len() - 1) as f64 * step;
    let energy = functionals::trapezoid_sq(residuals, step);
    unit_diffusion_mle(residuals[residuals.len() - 1], energy, horizon, "L^_T")
}

/// Two-pass estimate: `theta_hat_T` on the full sample, then `rho_hat_T` on
/// the residuals `X_t - theta_hat_T Sigma_t`. Returns `(rho_hat, theta_hat)`.
pub fn estimate_rho(path: &SamplePath) -> Result<(f64, f64)> {
    let est = estimate(path)?;
    Ok((est.rho_hat, est.theta_hat))
}

/// `D_T = 2 (1 - rho_hat_T)`.
pub fn durbin_watson(rho_hat: f64) -> f64 {
    2.0 * (1.0 - rho_hat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimationResult {
    pub theta_hat: f64,
    pub rho_hat: f64,
    /// Always `durbin_watson(rho_hat)`.
    pub dw: f64,
    pub stats: SufficientStats,
}

pub fn estimate(path: &SamplePath) -> Result<EstimationResult> {
    let theta_hat = estimate_theta(path)?;
    let stats = functionals::sufficient_stats(path, theta_hat);
    let rho_hat = unit_diffusion_mle(stats.v_hat_t, stats.l_hat_t, stats.horizon, "L^_T")?;
    Ok(EstimationResult {
        theta_hat,
        rho_hat,
        dw: durbin_watson(rho_hat),
        stats,
    })
}

/// Estimate of `vartheta = (theta + rho, -theta rho)` from the regression
/// `dX = a X dt + b Sigma dt + dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VarthetaResult {
    pub vartheta_hat: [f64; 2],
    pub gram_condition: f64,
}

/// Spectral condition number of a symmetric PSD matrix (infinite if singular).
fn condition_number(gram: &Mat2) -> f64 {
    match gram.real_eigenvalues() {
        Some([hi, lo]) if lo > 0.0 && hi.is_finite() => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn vartheta_from_stats(stats: &SufficientStats) -> Result<VarthetaResult> {
    let condition = condition_number(&stats.gram);
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::SingularGram { condition });
    }
    let inv = stats.gram.inverse().ok_or(Error::SingularGram { condition })?;
    Ok(VarthetaResult {
        vartheta_hat: inv.mul_vec(stats.rhs),
        gram_condition: condition,
    })
}

pub fn estimate_vartheta(path: &SamplePath) -> Result<VarthetaResult> {
    // Gram matrix and right-hand side do not involve theta_hat.
    vartheta_from_stats(&functionals::sufficient_stats(path, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn unit_path(x1: f64) -> SamplePath {
        SamplePath::new(1.0, vec![0.0, x1], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn theta_by_hand() {
        assert_eq!(estimate_theta(&unit_path(1.0)).unwrap(), 0.0);
        // S_T = 1.5, (3 - 1) / 3
        assert_abs_diff_eq!(estimate_theta(&unit_path(3f64.sqrt())).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rho_from_residuals_by_hand() {
        assert_eq!(estimate_rho_from_residuals(&[0.0, 1.0], 1.0).unwrap(), 0.0);
        assert_eq!(estimate_rho_from_residuals(&[0.0, 2.0], 1.0).unwrap(), 0.75);
        assert!(matches!(
            estimate_rho_from_residuals(&[0.0, 0.0], 1.0),
            Err(Error::DegeneratePath { .. })
        ));
    }

    #[test]
    fn zero_path_is_degenerate() {
        let p = SamplePath::new(0.1, vec![0.0; 5], vec![0.0; 5]).unwrap();
        assert_eq!(estimate_theta(&p), Err(Error::DegeneratePath { quantity: "S_T" }));
        assert!(matches!(estimate_vartheta(&p), Err(Error::SingularGram { .. })));
    }

    #[test]
    fn durbin_watson_values() {
        assert_eq!(durbin_watson(0.0), 2.0);
        assert_eq!(durbin_watson(-0.5), 3.0);
        assert_abs_diff_eq!(durbin_watson(-6.0 / 11.0), 34.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn estimate_is_consistent_with_parts() {
        let p = SamplePath::new(0.5, vec![0.0, 0.4, -0.3, 0.9], vec![0.0; 4]).unwrap();
        let e = estimate(&p).unwrap();
        assert_eq!(e.theta_hat, estimate_theta(&p).unwrap());
        let res = functionals::residuals(&p, e.theta_hat);
        assert_abs_diff_eq!(e.rho_hat, estimate_rho_from_residuals(&res, 0.5).unwrap(), epsilon = 1e-14);
        assert_eq!(e.dw, 2.0 * (1.0 - e.rho_hat));
        assert_eq!(estimate_rho(&p).unwrap(), (e.rho_hat, e.theta_hat));
    }

    #[test]
    fn vartheta_solves_gram_system() {
        let p = SamplePath::new(0.25, vec![0.0, 0.5, 0.1, -0.6, 0.2], vec![0.0; 5]).unwrap();
        let st = functionals::sufficient_stats(&p, 0.0);
        let v = vartheta_from_stats(&st).unwrap();
        let back = st.gram.mul_vec(v.vartheta_hat);
        assert_abs_diff_eq!(back[0], st.rhs[0], epsilon = 1e-12);
        assert_abs_diff_eq!(back[1], st.rhs[1], epsilon = 1e-12);
    }
}
