//! The coupled linear system and its exact Gaussian discretization.
//!
//! Writing the state as `(X, V)`, the pair solves
//! `d(X, V) = A (X, V) dt + b dW` with
//!
//! ```text
//! A = [[theta, rho],      b = (1, 1)
//!      [0,     rho]],
//! ```
//!
//! because `dX = theta X dt + rho V dt + dW` and both rows see the same
//! Brownian increment. Over a step `h` the transition is
//! `(X, V)_{t+h} = e^{Ah} (X, V)_t + N(0, Q(h))` with
//! `Q(h) = int_0^h e^{As} b b' e^{A's} ds`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::rng::{self, Domain, StreamRng};

/// Below this gap `|rho - theta|` the propagator uses its confluent expansion.
pub const CONFLUENT_GAP: f64 = 1e-8;

/// Relative tolerance when snapping `horizon / step` to an integer.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// Drift pair of the model. `theta < 0`, `rho <= 0`; `rho = 0` is the null.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModelParams {
    pub theta: f64,
    pub rho: f64,
}

impl ModelParams {
    pub fn new(theta: f64, rho: f64) -> Result<Self> {
        if !theta.is_finite() || theta >= 0.0 {
            return Err(Error::invalid("theta", "must be finite and strictly negative"));
        }
        if !rho.is_finite() || rho > 0.0 {
            return Err(Error::invalid("rho", "must be finite and non-positive"));
        }
        Ok(ModelParams { theta, rho })
    }

    /// Null-hypothesis model `rho = 0`.
    pub fn null(theta: f64) -> Result<Self> {
        Self::new(theta, 0.0)
    }

    pub fn is_null(&self) -> bool {
        self.rho == 0.0
    }

    /// Drift matrix of the state `(X, V)`.
    pub fn drift_matrix(&self) -> Mat2 {
        Mat2::new(self.theta, self.rho, 0.0, self.rho)
    }

    /// Drift matrix of the state `(X, Sigma)` with `Sigma_t = int_0^t X ds`:
    /// `dX = (theta + rho) X dt - theta rho Sigma dt + dW`.
    pub fn companion_matrix(&self) -> Mat2 {
        let (t, r) = (self.theta, self.rho);
        Mat2::new(t + r, -t * r, 1.0, 0.0)
    }
}

/// `int_0^h e^{lambda s} ds`.
fn exp_integral(lambda: f64, h: f64) -> f64 {
    if lambda == 0.0 {
        h
    } else {
        libm::expm1(lambda * h) / lambda
    }
}

/// `e^{Ah}` for the drift of `(X, V)`.
///
/// Upper triangular with diagonal `(e^{theta h}, e^{rho h})` and upper-right
/// entry `rho (e^{rho h} - e^{theta h}) / (rho - theta)`.
///
/// # Panics
/// If `h` is negative or not finite.
pub fn transition_matrix(params: &ModelParams, h: f64) -> Mat2 {
    assert!(h >= 0.0 && h.is_finite(), "step must be finite and non-negative");
    let (theta, rho) = (params.theta, params.rho);
    let gap = rho - theta;
    let e_theta = libm::exp(theta * h);
    let e_rho = libm::exp(rho * h);
    let coupling = if libm::fabs(gap) < CONFLUENT_GAP {
        // rho h e^{theta h} (1 + gap h / 2) is the divided difference to O(gap^2).
        rho * h * e_theta * (1.0 + 0.5 * gap * h)
    } else {
        rho * e_theta * libm::expm1(gap * h) / gap
    };
    Mat2::new(e_theta, coupling, 0.0, e_rho)
}

/// Stationary covariance of `(X, V)`, the solution of `A Q + Q A' + b b' = 0`.
/// Exists only for `rho < 0`.
pub fn stationary_covariance(params: &ModelParams) -> Option<Mat2> {
    if params.is_null() {
        return None;
    }
    let var_x = -0.5 / (params.theta + params.rho);
    let var_v = -0.5 / params.rho;
    Some(Mat2::new(var_x, var_x, var_x, var_v))
}

/// Covariance `Q(h)` of the one-step innovation.
///
/// # Panics
/// If `h` is negative or not finite.
pub fn transition_covariance(params: &ModelParams, h: f64) -> Mat2 {
    assert!(h >= 0.0 && h.is_finite(), "step must be finite and non-negative");
    if h == 0.0 {
        return Mat2::ZERO;
    }
    let (theta, rho) = (params.theta, params.rho);
    let gap = rho - theta;
    let scale = libm::fabs(theta).max(libm::fabs(rho));
    if params.is_null() || libm::fabs(gap) >= 0.1 * scale {
        eigen_sum_covariance(theta, rho, h)
    } else if 2.0 * scale * h <= 1.0 {
        series_covariance(&params.drift_matrix(), h)
    } else {
        // Near-confluent and rho < 0: Q(h) = Q_inf - e^{Ah} Q_inf e^{A'h}.
        let q_inf = stationary_covariance(params).expect("rho < 0 on this branch");
        let f = transition_matrix(params, h);
        let q = q_inf - f * q_inf * f.transpose();
        // Exact symmetry.
        let off = 0.5 * (q.get(0, 1) + q.get(1, 0));
        Mat2::new(q.get(0, 0), off, off, q.get(1, 1))
    }
}

/// The first component of `e^{As} b` is `a1 e^{theta s} + a2 e^{rho s}` with
/// `a1 = -theta / gap`, `a2 = rho / gap`; the second is `e^{rho s}`.
fn eigen_sum_covariance(theta: f64, rho: f64, h: f64) -> Mat2 {
    let gap = rho - theta;
    let a1 = -theta / gap;
    let a2 = rho / gap;
    let e_tt = exp_integral(2.0 * theta, h);
    let e_tr = exp_integral(theta + rho, h);
    let e_rr = exp_integral(2.0 * rho, h);
    let q11 = a1 * a1 * e_tt + 2.0 * a1 * a2 * e_tr + a2 * a2 * e_rr;
    let q12 = a1 * e_tr + a2 * e_rr;
    Mat2::new(q11, q12, q12, e_rr)
}

/// `sum_k h^{k+1} / (k+1)! L^k(b b')` with `L(M) = A M + M A'`, for `|A| h <= 1/2`.
fn series_covariance(a: &Mat2, h: f64) -> Mat2 {
    let mut term = Mat2::new(1.0, 1.0, 1.0, 1.0);
    let mut coeff = h;
    let mut acc = term.scale(coeff);
    for k in 1..60 {
        term = *a * term + term * a.transpose();
        coeff *= h / (k as f64 + 1.0);
        let inc = term.scale(coeff);
        acc = acc + inc;
        if inc.max_abs_diff(&Mat2::ZERO) <= 1e-18 * acc.max_abs_diff(&Mat2::ZERO) {
            break;
        }
    }
    acc
}

/// One-step Gaussian transition of `(X, V)` over a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionLaw {
    pub mean_propagator: Mat2,
    pub noise_cov: Mat2,
    noise_factor: Mat2,
}

impl TransitionLaw {
    pub fn new(params: &ModelParams, h: f64) -> Self {
        let mean_propagator = transition_matrix(params, h);
        let noise_cov = transition_covariance(params, h);
        TransitionLaw {
            mean_propagator,
            noise_cov,
            noise_factor: noise_cov.cholesky_psd(),
        }
    }

    #[inline]
    pub fn step(&self, state: [f64; 2], rng: &mut StreamRng) -> [f64; 2] {
        let f = &self.mean_propagator.0;
        let l = &self.noise_factor.0;
        let z1 = rng::normal(rng);
        let z2 = rng::normal(rng);
        [
            f[0][0] * state[0] + f[0][1] * state[1] + l[0][0] * z1,
            f[1][1] * state[1] + l[1][0] * z1 + l[1][1] * z2,
        ]
    }
}

/// Uniform time grid `t_i = i * step`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub steps: usize,
}

impl Grid {
    /// Snaps `horizon / step` to an integer, rejecting grids that do not divide
    /// the horizon to within [`GRID_TOLERANCE`].
    pub fn new(horizon: f64, step: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid("horizon", "must be finite and positive"));
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::invalid("step", "must be finite and positive"));
        }
        if step > horizon * (1.0 + GRID_TOLERANCE) {
            return Err(Error::invalid("step", "must not exceed the horizon"));
        }
        let ratio = horizon / step;
        let steps = libm::round(ratio);
        if libm::fabs(steps * step - horizon) > GRID_TOLERANCE * horizon {
            return Err(Error::invalid("step", "horizon is not an integer multiple of step"));
        }
        if steps > 1e12 {
            return Err(Error::invalid("step", "grid is too fine"));
        }
        Ok(Grid { step, steps: steps as usize })
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.step
    }
}

/// Joint trajectory of `(X, V)` on a uniform grid starting from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    step: f64,
    x: Vec<f64>,
    v: Vec<f64>,
}

impl SamplePath {
    pub fn new(step: f64, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::invalid("step", "must be finite and positive"));
        }
        if x.len() != v.len() {
            return Err(Error::invalid("v", "must have the same length as x"));
        }
        if x.len() < 2 {
            return Err(Error::invalid("x", "needs at least two grid points"));
        }
        if x[0] != 0.0 {
            return Err(Error::invalid("x", "must start at 0"));
        }
        if v[0] != 0.0 {
            return Err(Error::invalid("v", "must start at 0"));
        }
        if x.iter().chain(v.iter()).any(|s| !s.is_finite()) {
            return Err(Error::invalid("x", "values must be finite"));
        }
        Ok(SamplePath { step, x, v })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of grid intervals `n`.
    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }

    /// `T = n h`.
    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.step
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn terminal(&self) -> (f64, f64) {
        (self.x[self.steps()], self.v[self.steps()])
    }
}

/// Iterates the exact transition on `grid`, drawing from `rng`.
pub fn simulate_exact_with(params: &ModelParams, grid: Grid, rng: &mut StreamRng) -> SamplePath {
    let law = TransitionLaw::new(params, grid.step);
    let mut x = Vec::with_capacity(grid.steps + 1);
    let mut v = Vec::with_capacity(grid.steps + 1);
    let mut state = [0.0, 0.0];
    x.push(0.0);
    v.push(0.0);
    for _ in 0..grid.steps {
        state = law.step(state, rng);
        x.push(state[0]);
        v.push(state[1]);
    }
    SamplePath { step: grid.step, x, v }
}

/// Exact simulation; the law at every grid time equals that of the
/// continuous-time system.
pub fn simulate_exact(params: &ModelParams, horizon: f64, step: f64, seed: u64) -> Result<SamplePath> {
    let grid = Grid::new(horizon, step)?;
    let mut rng = rng::stream(seed, Domain::Path, 0);
    Ok(simulate_exact_with(params, grid, &mut rng))
}

pub fn simulate_euler_with(params: &ModelParams, grid: Grid, rng: &mut StreamRng) -> SamplePath {
    let (theta, rho, h) = (params.theta, params.rho, grid.step);
    let sqrt_h = libm::sqrt(h);
    let mut x = Vec::with_capacity(grid.steps + 1);
    let mut v = Vec::with_capacity(grid.steps + 1);
    let (mut xs, mut vs) = (0.0, 0.0);
    x.push(xs);
    v.push(vs);
    for _ in 0..grid.steps {
        let dw = sqrt_h * rng::normal(rng);
        let next_x = xs + (theta * xs + rho * vs) * h + dw;
        let next_v = vs + rho * vs * h + dw;
        xs = next_x;
        vs = next_v;
        x.push(xs);
        v.push(vs);
    }
    SamplePath { step: h, x, v }
}

/// Euler-Maruyama discretization, one shared Brownian increment per step.
/// Kept as a cross-check of the exact scheme.
pub fn simulate_euler(params: &ModelParams, horizon: f64, step: f64, seed: u64) -> Result<SamplePath> {
    let grid = Grid::new(horizon, step)?;
    let mut rng = rng::stream(seed, Domain::Path, 0);
    Ok(simulate_euler_with(params, grid, &mut rng))
}

/// Limits of `E[X_t^2]`, `E[V_t^2]` and `E[X_t V_t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StationaryMoments {
    pub var_x: f64,
    /// `None` under `rho = 0`, where `V` is a Brownian motion.
    pub var_v: Option<f64>,
    pub cov_xv: Option<f64>,
}

pub fn stationary_moments(params: &ModelParams) -> StationaryMoments {
    let var_x = -0.5 / (params.theta + params.rho);
    if params.is_null() {
        StationaryMoments { var_x, var_v: None, cov_xv: None }
    } else {
        StationaryMoments {
            var_x,
            var_v: Some(-0.5 / params.rho),
            cov_xv: Some(var_x),
        }
    }
}

/// Monte Carlo estimate of `E[exp(-u int_0^1 B_s^2 ds)]` next to its closed
/// form `cosh(sqrt(2u))^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCheck {
    pub mc_estimate: f64,
    pub closed_form: f64,
    /// Standard error of `mc_estimate`; NaN with a single path.
    pub std_error: f64,
}

pub fn laplace_closed_form(u: f64) -> f64 {
    1.0 / libm::sqrt(libm::cosh(libm::sqrt(2.0 * u)))
}

pub fn laplace_check(u: f64, paths: usize, steps: usize, seed: u64) -> Result<LaplaceCheck> {
    if !u.is_finite() || u < 0.0 {
        return Err(Error::invalid("u", "must be finite and non-negative"));
    }
    if paths == 0 {
        return Err(Error::invalid("paths", "must be at least 1"));
    }
    if steps < 2 {
        return Err(Error::invalid("steps", "must be at least 2"));
    }
    let h = 1.0 / steps as f64;
    let sqrt_h = libm::sqrt(h);
    let mut moments = crate::stats::RunningMoments::default();
    for p in 0..paths {
        let mut rng = rng::stream(seed, Domain::Laplace, p as u64);
        let (mut b, mut area) = (0.0f64, 0.0f64);
        for _ in 0..steps {
            let next = b + sqrt_h * rng::normal(&mut rng);
            area += 0.5 * h * (b * b + next * next);
            b = next;
        }
        moments.push(libm::exp(-u * area));
    }
    let std_error = moments
        .sample_variance()
        .map_or(f64::NAN, |var| libm::sqrt(var / paths as f64));
    Ok(LaplaceCheck {
        mc_estimate: moments.mean(),
        closed_form: laplace_closed_form(u),
        std_error,
    })
}
