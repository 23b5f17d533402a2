//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Seeds are fixed constants.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::ExitCode;

use oudw::mc;
use oudw_core::asymptotics::{self, WMethod, WSamplerConfig, Z_05_REFERENCE};
use oudw_core::harness::{ExperimentSpec, ExperimentSummary, ReplicateOutcome, TestLevel};
use oudw_core::rng::{self, Domain};
use oudw_core::sde::{self, Grid, ModelParams};
use oudw_core::{estimators, linalg, stats};

const SEED_ALTERNATIVE: u64 = 101;
const SEED_NULL: u64 = 202;
const SEED_W: u64 = 303;
const SEED_POWER: u64 = 404;
const SEED_KL: u64 = 505;
const SEED_PATH: u64 = 506;
const SEED_LAPLACE: u64 = 707;
const SEED_STEP: u64 = 808;

const R: usize = 2000;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Check { ok: true, detail: String::new() }
    }

    fn add(&mut self, ok: bool, what: String) {
        self.ok &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&what);
        if !ok {
            self.detail.push_str(" [miss]");
        }
    }
}

fn rel_within(got: f64, want: f64, tol: f64) -> bool {
    ((got - want) / want).abs() <= tol
}

struct Runs {
    alt: (ExperimentSummary, Vec<(u64, ReplicateOutcome)>),
    null: (ExperimentSummary, Vec<(u64, ReplicateOutcome)>),
}

fn runs() -> Runs {
    let alt = ExperimentSpec {
        params: ModelParams::new(-2.0, -1.0).unwrap(),
        horizon: 200.0,
        step: 0.01,
        replications: R,
        seed: SEED_ALTERNATIVE,
        level: None,
    };
    let null = ExperimentSpec {
        params: ModelParams::null(-1.0).unwrap(),
        horizon: 500.0,
        step: 0.01,
        replications: R,
        seed: SEED_NULL,
        level: Some(TestLevel { alpha: Z_05_REFERENCE.alpha, z_alpha: Z_05_REFERENCE.z_alpha }),
    };
    Runs { alt: mc::replicate(&alt).unwrap(), null: mc::replicate(&null).unwrap() }
}

fn consistency(runs: &Runs) -> Check {
    let s = &runs.alt.0;
    let mut c = Check::new();
    c.add(s.failures == 0, format!("failures {}", s.failures));
    for (name, m, target) in [("theta_hat", &s.theta_hat, -3.0), ("rho_hat", &s.rho_hat, -6.0 / 11.0)] {
        let se = m.std_error().unwrap();
        let z = (m.mean - target) / se;
        c.add(z.abs() <= 3.0, format!("{name} mean {:.5} (target {target:.5}, z {z:+.2})", m.mean));
    }
    c
}

fn clt(runs: &Runs) -> Check {
    let s = &runs.alt.0;
    let mut c = Check::new();
    let vt = s.scaled_theta.variance.unwrap();
    let vr = s.scaled_rho.variance.unwrap();
    let cov = s.scaled_cov.unwrap();
    c.add(rel_within(vt, 6.0, 0.15), format!("var theta {vt:.4} (6)"));
    c.add(rel_within(vr, 9924.0 / 14641.0, 0.15), format!("var rho {vr:.4} ({:.4})", 9924.0 / 14641.0));
    c.add(rel_within(cov, -84.0 / 121.0, 0.25), format!("cov {cov:.4} ({:.4})", -84.0 / 121.0));
    let skew = s.scaled_theta.skewness.unwrap();
    let kurt = s.scaled_theta.excess_kurtosis.unwrap();
    c.add(skew.abs() <= 0.15, format!("skew {skew:+.3}"));
    c.add(kurt.abs() <= 0.3, format!("ex. kurtosis {kurt:+.3}"));
    c
}

fn null_law(runs: &Runs) -> Check {
    let t = runs.null.0.effective_horizon;
    let scaled: Vec<f64> = runs.null.1.iter().map(|(_, o)| t * o.rho_hat).collect();
    let w = mc::sample_w(&WSamplerConfig::new(WMethod::KarhunenLoeve, 100_000, SEED_W)).unwrap();
    let ks = stats::ks_two_sample(&scaled, &w);
    let mut c = Check::new();
    c.add(scaled.len() == R, format!("replicates {}", scaled.len()));
    c.add(ks.p_value > 0.01, format!("KS D {:.4}, p {:.3}", ks.distance, ks.p_value));
    c
}

fn dual_w() -> Check {
    let kl = mc::sample_w(&WSamplerConfig::new(WMethod::KarhunenLoeve, 100_000, SEED_KL)).unwrap();
    let path = mc::sample_w(&WSamplerConfig::new(WMethod::BrownianPath, 100_000, SEED_PATH)).unwrap();
    let ks = stats::ks_two_sample(&kl, &path);
    let n = asymptotics::DEFAULT_KL_TERMS;
    let gap = 0.5 - asymptotics::kl_partial_sum(n);
    let mut c = Check::new();
    c.add(ks.distance < 0.01, format!("KS D {:.4} (p {:.3})", ks.distance, ks.p_value));
    c.add(gap.abs() <= asymptotics::kl_tail_bound(n), format!("1/2 - partial sum {gap:.3e} <= {:.3e}", asymptotics::kl_tail_bound(n)));
    c
}

fn calibration(runs: &Runs) -> Check {
    let mut c = Check::new();
    let level = runs.null.0.rejection.unwrap();
    c.add((0.03..=0.07).contains(&level.rate), format!("level {:.4} at z {:.2}", level.rate, level.z_alpha));

    let test_level = TestLevel { alpha: Z_05_REFERENCE.alpha, z_alpha: Z_05_REFERENCE.z_alpha };
    let power = mc::level_power_experiment(-2.0, &[-1.0], 500.0, 0.01, 500, test_level, SEED_POWER).unwrap();
    c.add(power[0].rate >= 0.99, format!("power (-2,-1) {:.4}", power[0].rate));

    let grid = [0.0, -0.1, -0.25, -0.5, -1.0];
    let rows = mc::level_power_experiment(-1.0, &grid, 500.0, 0.01, 500, test_level, SEED_POWER).unwrap();
    let monotone = rows.windows(2).all(|w| w[1].rate + 2.0 * w[0].std_error.max(w[1].std_error) >= w[0].rate);
    let rates: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.rate)).collect();
    c.add(monotone, format!("power over rho grid [{}]", rates.join(", ")));

    let vd = runs.alt.0.scaled_dw.variance.unwrap();
    let sigma_d = asymptotics::covariance_gamma(&ModelParams::new(-2.0, -1.0).unwrap()).unwrap().sigma_d_sq;
    c.add(rel_within(vd, sigma_d, 0.15), format!("var D {vd:.4} ({sigma_d:.4})"));
    c
}

fn bivariate(runs: &Runs) -> Check {
    let v = runs.alt.0.vartheta.unwrap();
    let mut c = Check::new();
    c.add(v.count == R, format!("solved {}", v.count));
    for k in 0..2 {
        let z = (v.mean[k] - v.target[k]) / v.std_error[k];
        c.add(z.abs() <= 3.0, format!("mean[{k}] {:.4} (z {z:+.2})", v.mean[k]));
    }
    let cov = v.scaled_cov.unwrap();
    c.add(rel_within(cov.get(0, 0), 6.0, 0.15), format!("cov11 {:.3} (6)", cov.get(0, 0)));
    c.add(rel_within(cov.get(1, 1), 12.0, 0.15), format!("cov22 {:.3} (12)", cov.get(1, 1)));
    let r = v.correlation.unwrap();
    c.add(r.abs() < 0.1, format!("r {r:+.3}"));
    c
}

fn simulator() -> Check {
    let mut c = Check::new();
    let pairs = [(-2.0, -1.0), (-1.0, 0.0), (-0.5, -0.5), (-1.0, -1.05), (-3.0, -0.2)];
    let steps = [1e-3, 0.01, 0.1, 1.0];
    let (mut quad, mut semi, mut flow) = (0.0f64, 0.0f64, 0.0f64);
    for (theta, rho) in pairs {
        let p = ModelParams::new(theta, rho).unwrap();
        for h in steps {
            let q = sde::transition_covariance(&p, h).0;
            let want = support::innovation_covariance(theta, rho, h);
            quad = quad.max(support::max_abs_diff(&q, &want) / support::max_abs(&want));
            let f = sde::transition_matrix(&p, h).0;
            quad = quad.max(support::max_abs_diff(&f, &support::expm(&support::drift(theta, rho), h)));
            for h2 in steps {
                let f1 = sde::transition_matrix(&p, h);
                let lhs = sde::transition_matrix(&p, h + h2);
                semi = semi.max(lhs.max_abs_diff(&(f1 * sde::transition_matrix(&p, h2))));
                let qs = sde::transition_covariance(&p, h + h2);
                let qf = sde::transition_covariance(&p, h) + f1 * sde::transition_covariance(&p, h2) * f1.transpose();
                flow = flow.max(qs.max_abs_diff(&qf) / qs.max_abs_diff(&linalg::Mat2::ZERO));
            }
        }
    }
    c.add(quad <= 1e-10, format!("quadrature {quad:.1e}"));
    c.add(semi <= 1e-12 && flow <= 1e-12, format!("semigroup {semi:.1e}, flow {flow:.1e}"));

    let lap = sde::laplace_check(2.0, 100_000, 1000, SEED_LAPLACE).unwrap();
    let z = (lap.mc_estimate - lap.closed_form) / lap.std_error;
    c.add(z.abs() <= 3.0, format!("Laplace {:.5} vs {:.5} (z {z:+.2})", lap.mc_estimate, lap.closed_form));

    let p = ModelParams::new(-2.0, -1.0).unwrap();
    let terminal = |step: f64, seed: u64| -> Vec<f64> {
        let grid = Grid::new(5.0, step).unwrap();
        (0..20_000)
            .map(|i| sde::simulate_exact_with(&p, grid, &mut rng::stream(seed, Domain::Path, i)).terminal().0)
            .collect()
    };
    let ks = stats::ks_two_sample(&terminal(0.1, SEED_STEP), &terminal(0.05, SEED_STEP + 1));
    c.add(ks.p_value > 0.01, format!("h vs h/2 KS p {:.3}", ks.p_value));
    c
}

fn identities(runs: &Runs) -> Check {
    let mut c = Check::new();
    let mut exact = true;
    for (summary, raw) in [&runs.alt, &runs.null] {
        let t = summary.effective_horizon;
        for (_, o) in raw {
            exact &= o.dw == estimators::durbin_watson(o.rho_hat) && o.dw == 2.0 * (1.0 - o.rho_hat);
            exact &= o.z_stat == 4.0 * t * t * o.rho_hat * o.rho_hat;
        }
    }
    c.add(exact, format!("D = 2(1 - rho), Z = 4 T^2 rho^2 on {} replicates", 2 * R));

    let p = ModelParams::new(-2.0, -1.0).unwrap();
    let cm = asymptotics::moment_matrix(&p);
    let neg = [[-cm[0][0], -cm[0][1], -cm[0][2]], [-cm[1][0], -cm[1][1], -cm[1][2]], [-cm[2][0], -cm[2][1], -cm[2][2]]];
    let u = linalg::solve3(neg, [1.0, 0.0, 0.0]).unwrap();
    let err = (u[0] - 1.0 / 6.0).abs().max((u[1] - 1.0 / 12.0).abs()).max(u[2].abs());
    c.add(err <= 1e-10, format!("-C^-1 I = ({:.6}, {:.6}, {:.1e})", u[0], u[1], u[2]));

    let mut eig = 0.0f64;
    let grid: [f64; 6] = [-3.0, -2.0, -1.0, -0.5, -0.1, 0.0];
    for &theta in &grid[..5] {
        for &rho in &grid {
            if theta == rho {
                continue;
            }
            let ev = ModelParams::new(theta, rho).unwrap().companion_matrix().real_eigenvalues().unwrap();
            eig = eig.max((ev[0] - theta.max(rho)).abs()).max((ev[1] - theta.min(rho)).abs());
        }
    }
    c.add(eig <= 1e-12, format!("companion eigenvalues {eig:.1e}"));
    c
}

fn main() -> ExitCode {
    let runs = runs();
    let checks: [(&str, Check); 8] = [
        ("1 consistency", consistency(&runs)),
        ("2 CLT variances", clt(&runs)),
        ("3 null limit law", null_law(&runs)),
        ("4 dual W oracles", dual_w()),
        ("5 test calibration", calibration(&runs)),
        ("6 bivariate estimator", bivariate(&runs)),
        ("7 simulator exactness", simulator()),
        ("8 algebraic identities", identities(&runs)),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let tag = if check.ok { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", check.detail);
        failed += usize::from(!check.ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
