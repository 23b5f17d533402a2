//! Path functionals feeding the estimators.
//!
//! All `dt`-integrals use the trapezoid rule on the path grid. Stochastic
//! integrals are never formed as discrete sums: with unit diffusion,
//! `int_0^T X dX = (X_T^2 - T) / 2` by Itô's formula, and
//! `int_0^T Sigma dX = Sigma_T X_T - S_T` by parts since `dSigma = X dt`.

use alloc::vec::Vec;

use crate::linalg::Mat2;
use crate::sde::SamplePath;

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => step * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Trapezoid integral of the squared values.
pub fn trapezoid_sq(values: &[f64], step: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => {
            step * (0.5 * (first * first + last * last) + inner.iter().map(|v| v * v).sum::<f64>())
        }
    }
}

/// `Sigma_{t_i} = int_0^{t_i} X_s ds`, cumulative trapezoid with `Sigma_0 = 0`.
pub fn cumulative_sigma(path: &SamplePath) -> Vec<f64> {
    cumulative_trapezoid(path.x(), path.step())
}

pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in values.windows(2) {
        acc += 0.5 * step * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Residual path `V^_{t_i} = X_{t_i} - theta_hat Sigma_{t_i}`.
pub fn residuals(path: &SamplePath, theta_hat: f64) -> Vec<f64> {
    path.x()
        .iter()
        .zip(cumulative_sigma(path))
        .map(|(x, s)| x - theta_hat * s)
        .collect()
}

/// Everything the estimators need from one path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SufficientStats {
    pub horizon: f64,
    /// `S_T = int X^2 dt`
    pub s_t: f64,
    /// `Sigma_T = int X dt`
    pub sigma_t: f64,
    /// `Pi_T = int Sigma dt`
    pub pi_t: f64,
    pub x_t: f64,
    pub v_hat_t: f64,
    /// `L^_T = int V^2 dt` for the residuals built with the supplied `theta_hat`.
    pub l_hat_t: f64,
    /// `int Phi Phi' dt`, `Phi = (X, Sigma)'`.
    pub gram: Mat2,
    /// `int Phi dX`.
    pub rhs: [f64; 2],
}

pub fn sufficient_stats(path: &SamplePath, theta_hat: f64) -> SufficientStats {
    let h = path.step();
    let horizon = path.horizon();
    let xs = path.x();

    let (mut sigma, mut pi) = (0.0f64, 0.0f64);
    let (mut s_t, mut cross, mut sigma_sq, mut l_hat) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut x_prev, mut v_prev) = (xs[0], xs[0]);
    for &x in &xs[1..] {
        let sigma_next = sigma + 0.5 * h * (x_prev + x);
        let v_next = x - theta_hat * sigma_next;
        pi += 0.5 * h * (sigma + sigma_next);
        s_t += 0.5 * h * (x_prev * x_prev + x * x);
        cross += 0.5 * h * (x_prev * sigma + x * sigma_next);
        sigma_sq += 0.5 * h * (sigma * sigma + sigma_next * sigma_next);
        l_hat += 0.5 * h * (v_prev * v_prev + v_next * v_next);
        sigma = sigma_next;
        x_prev = x;
        v_prev = v_next;
    }

    SufficientStats {
        horizon,
        s_t,
        sigma_t: sigma,
        pi_t: pi,
        x_t: x_prev,
        v_hat_t: v_prev,
        l_hat_t: l_hat,
        gram: Mat2::new(s_t, cross, cross, sigma_sq),
        rhs: [0.5 * (x_prev * x_prev - horizon), sigma * x_prev - s_t],
    }
}

/// Integrals that need the driving noise `V` itself: `P_T = int X V dt` and
/// `L_T = int V^2 dt`. Only available on simulated paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIntegrals {
    pub p_t: f64,
    pub l_t: f64,
}

pub fn noise_integrals(path: &SamplePath) -> NoiseIntegrals {
    let h = path.step();
    let xv: Vec<f64> = path.x().iter().zip(path.v()).map(|(x, v)| x * v).collect();
    NoiseIntegrals {
        p_t: trapezoid(&xv, h),
        l_t: trapezoid_sq(path.v(), h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn path(step: f64, x: Vec<f64>) -> SamplePath {
        let v = vec![0.0; x.len()];
        SamplePath::new(step, x, v).unwrap()
    }

    #[test]
    fn sigma_of_linear_path() {
        assert_eq!(cumulative_sigma(&path(0.5, vec![0.0, 0.5, 1.0])), vec![0.0, 0.125, 0.5]);
    }

    #[test]
    fn zero_path() {
        let p = path(0.1, vec![0.0; 11]);
        assert!(cumulative_sigma(&p).iter().all(|&s| s == 0.0));
        let st = sufficient_stats(&p, 3.0);
        assert_eq!((st.s_t, st.sigma_t, st.pi_t, st.l_hat_t), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(st.gram, Mat2::ZERO);
        assert_abs_diff_eq!(st.horizon, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.rhs[0], -0.5, epsilon = 1e-15);
        assert_eq!(st.rhs[1], 0.0);
    }

    #[test]
    fn unit_grid_by_hand() {
        let st = sufficient_stats(&path(1.0, vec![0.0, 1.0]), 0.0);
        assert_eq!(st.s_t, 0.5);
        assert_eq!(st.sigma_t, 0.5);
        assert_eq!(st.rhs, [0.0, 0.0]);
        assert_eq!(st.l_hat_t, 0.5);
        assert_eq!(st.pi_t, 0.25);
    }

    #[test]
    fn residual_energy_matches_residual_path() {
        let p = path(0.25, vec![0.0, 0.3, -0.2, 0.7, 0.1]);
        let theta_hat = -1.7;
        let st = sufficient_stats(&p, theta_hat);
        let res = residuals(&p, theta_hat);
        assert_abs_diff_eq!(st.l_hat_t, trapezoid_sq(&res, 0.25), epsilon = 1e-15);
        assert_eq!(st.v_hat_t, *res.last().unwrap());
        assert_eq!(st.gram.get(0, 0), st.s_t);
        let sig = cumulative_sigma(&p);
        assert_abs_diff_eq!(st.pi_t, trapezoid(&sig, 0.25), epsilon = 1e-15);
    }

    #[test]
    fn trapezoid_edge_cases() {
        assert_eq!(trapezoid(&[], 1.0), 0.0);
        assert_eq!(trapezoid(&[3.0], 1.0), 0.0);
        assert_eq!(trapezoid(&[1.0, 3.0], 0.5), 1.0);
    }
}
