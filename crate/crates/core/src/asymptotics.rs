//! Closed-form limit laws of the estimators and Monte Carlo samplers for the
//! null limit `W = (B_1^2 - 1) / (2 int_0^1 B_s^2 ds)`.
//!
//! Under `rho < 0`:
//!
//! * `theta_hat -> theta* = theta + rho` and
//!   `rho_hat -> rho* = theta rho (theta + rho) / ((theta + rho)^2 + theta rho)`,
//! * `sqrt(T) (theta_hat - theta*, rho_hat - rho*)` is asymptotically
//!   `N(0, Gamma)` and the Durbin-Watson statistic has variance `4 sigma_rho^2`,
//! * the regression estimator of `(theta + rho, -theta rho)` has covariance
//!   `Delta = diag(-2 theta*, -2 theta rho theta*)`.
//!
//! Under `rho = 0`, `T rho_hat` converges in law to `W`. Its quantiles have no
//! closed form and are estimated from either of two samplers: the
//! Karhunen-Loève series `T = sqrt(2) sum g_n Z_n`, `S = sum g_n^2 Z_n^2`
//! with `g_n = 2 (-1)^n / ((2n - 1) pi)` and `W = (T^2 - 1) / (2 S)`, or a
//! discretized Brownian path.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2};
use crate::rng::{self, Domain};
use crate::sde::ModelParams;
use crate::stats::{self, QuantileEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Limits {
    pub theta_star: f64,
    pub rho_star: f64,
    pub d_star: f64,
}

/// Almost-sure limits of `theta_hat`, `rho_hat` and the Durbin-Watson statistic.
/// The denominator `(theta + rho)^2 + theta rho` is positive on the whole domain.
pub fn limits(params: &ModelParams) -> Limits {
    let (theta, rho) = (params.theta, params.rho);
    let sum = theta + rho;
    let prod = theta * rho;
    let rho_star = prod * sum / (sum * sum + prod);
    Limits {
        theta_star: sum,
        rho_star,
        d_star: 2.0 * (1.0 - rho_star),
    }
}

/// Entries of `Gamma` and the Durbin-Watson variance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GammaCovariance {
    pub sigma_theta_sq: f64,
    pub ell: f64,
    pub sigma_rho_sq: f64,
    pub sigma_d_sq: f64,
}

impl GammaCovariance {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.sigma_theta_sq, self.ell, self.ell, self.sigma_rho_sq)
    }
}

pub fn covariance_gamma(params: &ModelParams) -> Result<GammaCovariance> {
    if params.is_null() {
        return Err(Error::Regime {
            law: "the joint normal limit",
            requirement: "rho < 0 (use the W law under rho = 0)",
        });
    }
    let Limits { theta_star, rho_star, .. } = limits(params);
    let prod = params.theta * params.rho;
    let ts2 = theta_star * theta_star;
    let ts4 = ts2 * ts2;
    let ts6 = ts4 * ts2;
    let base = ts2 + prod;
    let sigma_rho_sq =
        -2.0 * rho_star * (ts6 + prod * (ts4 - prod * (2.0 * ts2 - prod))) / (base * base * base);
    Ok(GammaCovariance {
        sigma_theta_sq: -2.0 * theta_star,
        ell: 2.0 * rho_star * (ts2 - prod) / base,
        sigma_rho_sq,
        sigma_d_sq: 4.0 * sigma_rho_sq,
    })
}

/// Asymptotic covariance of `sqrt(T) (vartheta_hat - vartheta)`.
pub fn delta_matrix(params: &ModelParams) -> Result<Mat2> {
    if params.is_null() {
        return Err(Error::Regime {
            law: "the bivariate estimator covariance",
            requirement: "rho < 0",
        });
    }
    let theta_star = params.theta + params.rho;
    Ok(Mat2::diag(-2.0 * theta_star, -2.0 * params.theta * params.rho * theta_star))
}

/// `lim L^_T / T = -((theta + rho)^2 + theta rho) / (2 theta rho (theta + rho))`
/// for `rho < 0`.
pub fn residual_energy_limit(params: &ModelParams) -> Option<f64> {
    if params.is_null() {
        return None;
    }
    let (sum, prod) = (params.theta + params.rho, params.theta * params.rho);
    Some(-(sum * sum + prod) / (2.0 * prod * sum))
}

/// Every limit the model has at `params`. Entries that only exist under
/// `rho < 0` are `None` at the null.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AsymptoticLaw {
    pub theta: f64,
    pub rho: f64,
    pub theta_star: f64,
    pub rho_star: f64,
    pub d_star: f64,
    pub sigma_theta_sq: Option<f64>,
    pub ell: Option<f64>,
    pub sigma_rho_sq: Option<f64>,
    pub sigma_d_sq: Option<f64>,
    pub delta: Option<Mat2>,
}

impl AsymptoticLaw {
    pub fn new(params: &ModelParams) -> Self {
        let l = limits(params);
        let gamma = covariance_gamma(params).ok();
        AsymptoticLaw {
            theta: params.theta,
            rho: params.rho,
            theta_star: l.theta_star,
            rho_star: l.rho_star,
            d_star: l.d_star,
            sigma_theta_sq: gamma.map(|g| g.sigma_theta_sq),
            ell: gamma.map(|g| g.ell),
            sigma_rho_sq: gamma.map(|g| g.sigma_rho_sq),
            sigma_d_sq: gamma.map(|g| g.sigma_d_sq),
            delta: delta_matrix(params).ok(),
        }
    }
}

/// Matrix `C` of the linear ODE `U' = C U + (1, 0, 0)'` solved by
/// `U_t = (E[X_t^2], E[Sigma_t^2], E[X_t Sigma_t])`.
pub fn moment_matrix(params: &ModelParams) -> [[f64; 3]; 3] {
    let (sum, prod) = (params.theta + params.rho, params.theta * params.rho);
    [
        [2.0 * sum, 0.0, -2.0 * prod],
        [0.0, 0.0, 2.0],
        [1.0, -prod, sum],
    ]
}

/// Spectrum of [`moment_matrix`]: `{theta + rho, 2 theta, 2 rho}`.
pub fn moment_spectrum(params: &ModelParams) -> [f64; 3] {
    [params.theta + params.rho, 2.0 * params.theta, 2.0 * params.rho]
}

/// Stationary point `-C^{-1} (1, 0, 0)'`, which for `rho < 0` equals
/// `(-1/(2(theta+rho)), -1/(2 theta rho (theta+rho)), 0)`. `None` at the null,
/// where `C` is singular.
pub fn moment_limits(params: &ModelParams) -> Option<[f64; 3]> {
    if params.is_null() {
        return None;
    }
    linalg::solve3(moment_matrix(params), [-1.0, 0.0, 0.0])
}

/// Karhunen-Loève coefficient `g_n = 2 (-1)^n / ((2n - 1) pi)`, `n >= 1`.
pub fn kl_coefficient(n: usize) -> f64 {
    assert!(n >= 1);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    2.0 * sign / ((2 * n - 1) as f64 * PI)
}

/// `sum_{n <= terms} g_n^2`, which tends to 1/2.
pub fn kl_partial_sum(terms: usize) -> f64 {
    (1..=terms).map(|n| { let g = kl_coefficient(n); g * g }).sum()
}

/// Bound `1 / (pi^2 N)` on the neglected tail `sum_{n > N} g_n^2`.
pub fn kl_tail_bound(terms: usize) -> f64 {
    1.0 / (PI * PI * terms as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WMethod {
    KarhunenLoeve,
    BrownianPath,
}

impl WMethod {
    pub fn name(&self) -> &'static str {
        match self {
            WMethod::KarhunenLoeve => "karhunen_loeve",
            WMethod::BrownianPath => "brownian_path",
        }
    }
}

pub const DEFAULT_KL_TERMS: usize = 200;
pub const DEFAULT_PATH_STEPS: usize = 2000;

/// Draws per independent random stream of a sampler.
pub const W_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WSamplerConfig {
    pub method: WMethod,
    pub kl_terms: usize,
    pub path_steps: usize,
    pub count: usize,
    pub seed: u64,
}

impl WSamplerConfig {
    pub fn new(method: WMethod, count: usize, seed: u64) -> Self {
        WSamplerConfig {
            method,
            kl_terms: DEFAULT_KL_TERMS,
            path_steps: DEFAULT_PATH_STEPS,
            count,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kl_terms < 1 {
            return Err(Error::invalid("kl_terms", "must be at least 1"));
        }
        if self.path_steps < 2 {
            return Err(Error::invalid("path_steps", "must be at least 2"));
        }
        if self.count < 1 {
            return Err(Error::invalid("count", "must be at least 1"));
        }
        Ok(())
    }

    pub fn chunks(&self) -> usize {
        self.count.div_ceil(W_CHUNK)
    }
}

/// Smallest accepted value of `int B^2`; smaller draws are redrawn.
const MIN_AREA: f64 = 1e-300;

fn draw_kl(coeffs: &[f64], rng: &mut rng::StreamRng) -> f64 {
    loop {
        let (mut t, mut s) = (0.0f64, 0.0f64);
        for &g in coeffs {
            let z = rng::normal(rng);
            t += g * z;
            s += g * g * z * z;
        }
        let t = core::f64::consts::SQRT_2 * t;
        if s >= MIN_AREA {
            return (t * t - 1.0) / (2.0 * s);
        }
    }
}

fn draw_path(steps: usize, rng: &mut rng::StreamRng) -> f64 {
    let h = 1.0 / steps as f64;
    let sqrt_h = libm::sqrt(h);
    loop {
        let (mut b, mut area) = (0.0f64, 0.0f64);
        for _ in 0..steps {
            let next = b + sqrt_h * rng::normal(rng);
            area += 0.5 * h * (b * b + next * next);
            b = next;
        }
        if area >= MIN_AREA {
            return (b * b - 1.0) / (2.0 * area);
        }
    }
}

/// Draws of chunk `chunk` (indices `chunk * W_CHUNK ..`), from their own stream.
pub fn sample_w_chunk(config: &WSamplerConfig, chunk: usize) -> Vec<f64> {
    let start = chunk * W_CHUNK;
    let len = W_CHUNK.min(config.count.saturating_sub(start));
    let mut rng = rng::stream(config.seed, Domain::WSampler, chunk as u64);
    match config.method {
        WMethod::KarhunenLoeve => {
            let coeffs: Vec<f64> = (1..=config.kl_terms).map(kl_coefficient).collect();
            (0..len).map(|_| draw_kl(&coeffs, &mut rng)).collect()
        }
        WMethod::BrownianPath => (0..len).map(|_| draw_path(config.path_steps, &mut rng)).collect(),
    }
}

/// `config.count` draws of `W`, in chunk order.
pub fn sample_w(config: &WSamplerConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.count);
    for chunk in 0..config.chunks() {
        out.extend(sample_w_chunk(config, chunk));
    }
    Ok(out)
}

/// Sorted sample of `4 W^2`, the null law of the test statistic.
pub fn sorted_4w2(draws: &[f64]) -> Vec<f64> {
    let squared: Vec<f64> = draws.iter().map(|w| 4.0 * w * w).collect();
    stats::sorted(&squared)
}

/// `(1 - alpha)`-quantile of `4 W^2` with its 99% order-statistic band.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CriticalValue {
    pub alpha: f64,
    pub z_alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub draws: usize,
}

pub fn critical_value(sorted_4w2: &[f64], alpha: f64) -> Result<CriticalValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", "must lie strictly between 0 and 1"));
    }
    if sorted_4w2.is_empty() {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let QuantileEstimate { value, ci_low, ci_high } = stats::quantile_with_band(sorted_4w2, 1.0 - alpha);
    Ok(CriticalValue {
        alpha,
        z_alpha: value,
        ci_low,
        ci_high,
        draws: sorted_4w2.len(),
    })
}

pub fn quantile_4w2(alpha: f64, config: &WSamplerConfig) -> Result<CriticalValue> {
    let draws = sample_w(config)?;
    critical_value(&sorted_4w2(&draws), alpha)
}

/// Several levels from one shared sample, so the values are monotone in `alpha`.
pub fn quantiles_4w2(alphas: &[f64], config: &WSamplerConfig) -> Result<Vec<CriticalValue>> {
    let sorted = sorted_4w2(&sample_w(config)?);
    alphas.iter().map(|&a| critical_value(&sorted, a)).collect()
}

/// Regression baseline for `z_0.05`: `quantile_4w2(0.05, ..)` with the
/// Karhunen-Loève sampler, 200 terms, 10^6 draws and seed 2011.
pub const Z_05_REFERENCE: CriticalValue = CriticalValue {
    alpha: 0.05,
    z_alpha: 264.112_573_675_229_1,
    ci_low: 261.632_694_652_045_4,
    ci_high: 266.816_932_050_130_96,
    draws: 1_000_000,
};

/// Configuration that reproduces [`Z_05_REFERENCE`].
pub const Z_05_REFERENCE_CONFIG: WSamplerConfig = WSamplerConfig {
    method: WMethod::KarhunenLoeve,
    kl_terms: DEFAULT_KL_TERMS,
    path_steps: DEFAULT_PATH_STEPS,
    count: 1_000_000,
    seed: 2011,
};

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(theta: f64, rho: f64) -> ModelParams {
        ModelParams::new(theta, rho).unwrap()
    }

    #[test]
    fn limits_at_reference_point() {
        let l = limits(&p(-2.0, -1.0));
        assert_eq!(l.theta_star, -3.0);
        assert_abs_diff_eq!(l.rho_star, -6.0 / 11.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.d_star, 34.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn limits_at_null() {
        for theta in [-0.1, -1.0, -7.5] {
            let l = limits(&p(theta, 0.0));
            assert_eq!((l.theta_star, l.rho_star, l.d_star), (theta, 0.0, 2.0));
        }
    }

    #[test]
    fn rho_star_is_symmetric() {
        assert_eq!(limits(&p(-2.0, -1.0)).rho_star, limits(&p(-1.0, -2.0)).rho_star);
    }

    #[test]
    fn gamma_at_reference_point() {
        let g = covariance_gamma(&p(-2.0, -1.0)).unwrap();
        assert_abs_diff_eq!(g.sigma_theta_sq, 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.ell, -84.0 / 121.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.sigma_rho_sq, 9924.0 / 14641.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.sigma_d_sq, 4.0 * 9924.0 / 14641.0, epsilon = 1e-13);
    }

    #[test]
    fn gamma_vanishes_towards_null() {
        let g = covariance_gamma(&p(-1.0, -1e-9)).unwrap();
        assert!(g.ell.abs() < 1e-8 && g.sigma_rho_sq.abs() < 1e-8);
        assert!(matches!(covariance_gamma(&p(-1.0, 0.0)), Err(Error::Regime { .. })));
    }

    #[test]
    fn delta_values() {
        assert_eq!(delta_matrix(&p(-2.0, -1.0)).unwrap(), Mat2::diag(6.0, 12.0));
        assert_eq!(delta_matrix(&p(-1.0, -1.0)).unwrap(), Mat2::diag(4.0, 4.0));
        assert!(delta_matrix(&p(-1.0, 0.0)).is_err());
    }

    #[test]
    fn law_at_null_has_no_normal_limit() {
        let law = AsymptoticLaw::new(&p(-1.0, 0.0));
        assert!(law.sigma_theta_sq.is_none() && law.delta.is_none());
        assert_eq!(law.d_star, 2.0);
    }

    #[test]
    fn residual_energy_limit_reference() {
        assert_abs_diff_eq!(residual_energy_limit(&p(-2.0, -1.0)).unwrap(), 11.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn moment_limits_reference() {
        let u = moment_limits(&p(-2.0, -1.0)).unwrap();
        assert_abs_diff_eq!(u[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], 1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[2], 0.0, epsilon = 1e-12);
        assert!(moment_limits(&p(-2.0, 0.0)).is_none());
    }

    #[test]
    fn moment_spectrum_roots_of_characteristic_polynomial() {
        let params = p(-1.3, -0.4);
        let c = moment_matrix(&params);
        for lambda in moment_spectrum(&params) {
            let mut shifted = c;
            for (i, row) in shifted.iter_mut().enumerate() {
                row[i] -= lambda;
            }
            assert!(linalg::det3(shifted).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_coefficients() {
        assert_abs_diff_eq!(kl_coefficient(1), -2.0 / PI, epsilon = 1e-16);
        assert_abs_diff_eq!(kl_coefficient(2), 2.0 / (3.0 * PI), epsilon = 1e-16);
        for n in [1, 10, 200, 5000] {
            let gap = 0.5 - kl_partial_sum(n);
            assert!(gap > 0.0 && gap <= kl_tail_bound(n), "n = {n}");
        }
    }

    #[test]
    fn sampler_is_chunk_deterministic() {
        let cfg = WSamplerConfig { count: W_CHUNK + 10, ..WSamplerConfig::new(WMethod::KarhunenLoeve, 0, 5) };
        let all = sample_w(&cfg).unwrap();
        assert_eq!(all.len(), W_CHUNK + 10);
        assert_eq!(&all[W_CHUNK..], &sample_w_chunk(&cfg, 1)[..]);
        assert_eq!(all, sample_w(&cfg).unwrap());
    }

    #[test]
    fn sampler_config_validation() {
        let mut cfg = WSamplerConfig::new(WMethod::BrownianPath, 10, 1);
        cfg.path_steps = 1;
        assert!(sample_w(&cfg).is_err());
        cfg.path_steps = 2;
        cfg.count = 0;
        assert!(sample_w(&cfg).is_err());
    }

    #[test]
    fn quantiles_are_monotone_and_bounded() {
        let cfg = WSamplerConfig::new(WMethod::KarhunenLoeve, 20_000, 9);
        let qs = quantiles_4w2(&[0.01, 0.05, 0.1, 0.5, 0.999_99], &cfg).unwrap();
        for w in qs.windows(2) {
            assert!(w[0].z_alpha >= w[1].z_alpha);
        }
        assert!(qs.iter().all(|q| q.ci_low <= q.z_alpha && q.z_alpha <= q.ci_high));
        assert!(qs.last().unwrap().z_alpha < 1e-3);
        assert!(critical_value(&[1.0], 1.0).is_err());
    }
}
