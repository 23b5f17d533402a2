//! Sample moments, Kolmogorov-Smirnov statistics and order-statistic
//! quantiles used by the experiment summaries.

use alloc::vec::Vec;

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased variance; `None` with fewer than two values.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample covariance; `None` with fewer than two pairs.
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let acc: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(acc / (xs.len() - 1) as f64)
}

pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    sample_covariance(xs, xs)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let cov = sample_covariance(xs, ys)?;
    let denom = libm::sqrt(sample_variance(xs)? * sample_variance(ys)?);
    (denom > 0.0).then(|| cov / denom)
}

/// Mean, unbiased variance and the moment ratios `g1 = m3 / m2^1.5`,
/// `g2 = m4 / m2^2 - 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let m = mean(xs);
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - m;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let nf = n as f64;
        let (m2n, m3n, m4n) = (m2 / nf, m3 / nf, m4 / nf);
        let shape_ok = n >= 3 && m2n > 0.0;
        Moments {
            count: n,
            mean: m,
            variance: (n >= 2).then(|| m2 / (nf - 1.0)),
            skewness: shape_ok.then(|| m3n / libm::pow(m2n, 1.5)),
            excess_kurtosis: shape_ok.then(|| m4n / (m2n * m2n) - 3.0),
        }
    }
}

/// Sorts a copy with NaN-free total order.
pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut out = xs.to_vec();
    out.sort_unstable_by(|a, b| a.total_cmp(b));
    out
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - G_b|` on sorted inputs.
pub fn ks_distance_sorted(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        // Step past every copy of the smaller value in both samples so ties
        // are evaluated after both jumps.
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / na - j as f64 / nb));
    }
    d
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // The alternating series converges slowly here and Q is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = libm::exp(-2.0 * jf * jf * lambda * lambda);
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a KS distance with effective size `n_eff`, using
/// the small-sample correction `lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) d`.
pub fn ks_p_value(distance: f64, n_eff: f64) -> f64 {
    let root = libm::sqrt(n_eff);
    kolmogorov_survival((root + 0.12 + 0.11 / root) * distance)
}

/// Two-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (sa, sb) = (sorted(a), sorted(b));
    let distance = ks_distance_sorted(&sa, &sb);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    KsResult { distance, p_value: ks_p_value(distance, na * nb / (na + nb)) }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// One-sample KS test against `N(0, variance)`.
pub fn ks_normal(xs: &[f64], variance: f64) -> KsResult {
    let s = sorted(xs);
    let n = s.len() as f64;
    let sd = libm::sqrt(variance);
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = normal_cdf(x / sd);
        d = d.max(libm::fabs((i + 1) as f64 / n - f)).max(libm::fabs(f - i as f64 / n));
    }
    KsResult { distance: d, p_value: ks_p_value(d, n) }
}

/// Upper 0.5% point of the standard normal, for 99% two-sided bands.
pub const Z_995: f64 = 2.575_829_303_548_901;

/// Empirical `p`-quantile of a sorted sample with a distribution-free 99%
/// confidence band from binomial order statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuantileEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn quantile_with_band(sorted: &[f64], p: f64) -> QuantileEstimate {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    let nf = n as f64;
    let at = |rank: f64| -> f64 {
        // 1-based rank clamped to the sample.
        let r = rank.clamp(1.0, nf) as usize;
        sorted[r - 1]
    };
    let centre = libm::ceil(nf * p).max(1.0);
    let spread = Z_995 * libm::sqrt(nf * p * (1.0 - p));
    QuantileEstimate {
        value: at(centre),
        ci_low: at(libm::floor(nf * p - spread)),
        ci_high: at(libm::ceil(nf * p + spread) + 1.0),
    }
}
