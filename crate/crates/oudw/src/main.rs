use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use oudw::config::{ExperimentConfig, ExperimentKind};
use oudw::csv_io;
use oudw::error::{Error, Result};
use oudw::mc;
use oudw::records::{self, EstimateRecord, Record, TestRecord};
use oudw_core::asymptotics::{AsymptoticLaw, WMethod, WSamplerConfig, DEFAULT_KL_TERMS, DEFAULT_PATH_STEPS, Z_05_REFERENCE};
use oudw_core::harness::TestLevel;
use oudw_core::stats::{self, Moments};
use oudw_core::{dw_test, estimators, sde, ModelParams};

/// Environment variable holding the default seed.
const SEED_ENV: &str = "OUDW_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "oudw", version, about = "Ornstein-Uhlenbeck processes driven by Ornstein-Uhlenbeck noise: simulation, estimation and the Durbin-Watson test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a path and write it as `t,x,v` CSV.
    Simulate(SimulateArgs),
    /// Estimate drifts from a path CSV.
    Estimate(EstimateArgs),
    /// Durbin-Watson test of `rho = 0` on a path CSV.
    Test(TestArgs),
    /// Almost-sure limits and asymptotic covariances at `(theta, rho)`.
    Limits(LimitsArgs),
    /// Draw from the null law `W` of `T rho_hat`.
    Wdist(WdistArgs),
    /// Quantile table of `4 W^2`.
    Quantile(QuantileArgs),
    /// Run a Monte Carlo experiment from a config file.
    Mc(McArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Scheme {
    Exact,
    Euler,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Method {
    KarhunenLoeve,
    BrownianPath,
}

impl From<Method> for WMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::KarhunenLoeve => WMethod::KarhunenLoeve,
            Method::BrownianPath => WMethod::BrownianPath,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    step: f64,
    /// Defaults to $OUDW_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "exact")]
    scheme: Scheme,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON output; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Critical value; may be omitted at the default level 0.05.
    #[arg(long = "z-alpha")]
    z_alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SamplerArgs {
    #[arg(long, value_enum, default_value = "karhunen-loeve")]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_KL_TERMS)]
    kl_terms: usize,
    #[arg(long, default_value_t = DEFAULT_PATH_STEPS)]
    path_steps: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl SamplerArgs {
    fn config(&self, count: usize) -> Result<WSamplerConfig> {
        let cfg = WSamplerConfig {
            method: self.method.into(),
            kl_terms: self.kl_terms,
            path_steps: self.path_steps,
            count,
            seed: resolve_seed(self.seed, None)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct WdistArgs {
    #[arg(long, default_value_t = 100_000)]
    count: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// CSV of the raw draws.
    #[arg(long)]
    draws: Option<PathBuf>,
    /// JSON summary; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QuantileArgs {
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.01")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// CSV table; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// JSON summary; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of per-replicate estimates (replicate and null experiments).
    #[arg(long)]
    raw: Option<PathBuf>,
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| oudw_core::Error::InvalidArgument { name: SEED_ENV, reason: "must be an unsigned integer" }.into()),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let params = ModelParams::new(args.theta, args.rho)?;
    let seed = resolve_seed(args.seed, None)?;
    let path = match args.scheme {
        Scheme::Exact => sde::simulate_exact(&params, args.horizon, args.step, seed)?,
        Scheme::Euler => sde::simulate_euler(&params, args.horizon, args.step, seed)?,
    };
    csv_io::write_path_file(&args.out, &path)?;
    eprintln!("wrote {} points to {} (seed {seed})", path.steps() + 1, args.out.display());
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let path = csv_io::read_path_file(&args.input)?;
    let estimates = estimators::estimate(&path)?;
    let vartheta = estimators::vartheta_from_stats(&estimates.stats).ok();
    records::write_json(args.out.as_deref(), &Record::new(EstimateRecord { estimates, vartheta }))
}

fn test(args: TestArgs) -> Result<()> {
    let z_alpha = match args.z_alpha {
        Some(z) => z,
        None if args.alpha == Z_05_REFERENCE.alpha => Z_05_REFERENCE.z_alpha,
        None => {
            return Err(oudw_core::Error::InvalidArgument {
                name: "z-alpha",
                reason: "required unless alpha = 0.05; see `oudw quantile`",
            }
            .into())
        }
    };
    let path = csv_io::read_path_file(&args.input)?;
    let outcome = dw_test::run_test(&path, args.alpha, z_alpha)?;
    records::write_json(args.out.as_deref(), &Record::new(TestRecord::from(&outcome)))?;
    if outcome.reject {
        eprintln!(
            "H0 rejected: the driving noise is serially correlated, so theta_hat and rho_hat are biased. \
             The `vartheta` field of `oudw estimate` estimates (theta + rho, -theta rho) consistently."
        );
    }
    Ok(())
}

fn limits(args: LimitsArgs) -> Result<()> {
    let params = ModelParams::new(args.theta, args.rho)?;
    records::write_json(args.out.as_deref(), &Record::new(AsymptoticLaw::new(&params)))
}

#[derive(Serialize)]
struct WdistRecord {
    config: WSamplerConfig,
    moments: Moments,
    quantiles: Vec<(f64, stats::QuantileEstimate)>,
}

fn wdist(args: WdistArgs) -> Result<()> {
    let cfg = args.sampler.config(args.count)?;
    let draws = mc::with_threads(args.sampler.threads, || mc::sample_w(&cfg))??;
    if let Some(p) = &args.draws {
        csv_io::write_draws(csv_io::create(p)?, &draws)?;
    }
    let sorted = stats::sorted(&draws);
    let quantiles = [0.01, 0.05, 0.1, 0.5, 0.9, 0.95, 0.99]
        .iter()
        .map(|&p| (p, stats::quantile_with_band(&sorted, p)))
        .collect();
    let body = WdistRecord { config: cfg, moments: Moments::of(&draws), quantiles };
    records::write_json(args.out.as_deref(), &Record::seeded(cfg.seed, body))
}

fn quantile(args: QuantileArgs) -> Result<()> {
    let cfg = args.sampler.config(args.count)?;
    let rows = mc::with_threads(args.sampler.threads, || mc::quantiles_4w2(&args.alpha, &cfg))??;
    match &args.out {
        Some(p) => csv_io::write_quantile_table(csv_io::create(p)?, &rows, &cfg),
        None => csv_io::write_quantile_table(std::io::stdout().lock(), &rows, &cfg),
    }
}

#[derive(Serialize)]
struct PowerRecord {
    theta: f64,
    horizon: f64,
    step: f64,
    replications: usize,
    rows: Vec<oudw_core::harness::RejectionRate>,
}

fn mc_command(args: McArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io { path: args.config.clone(), source })?;
    let cfg = ExperimentConfig::parse(&text)?;
    let seed = resolve_seed(args.seed, cfg.seed)?;
    mc::with_threads(args.threads, || run_experiment(&cfg, seed, &args))?
}

fn run_experiment(cfg: &ExperimentConfig, seed: u64, args: &McArgs) -> Result<()> {
    let level = match cfg.alpha() {
        None => None,
        Some(alpha) => {
            let z_alpha = match cfg.z_alpha {
                Some(z) => z,
                None if alpha == Z_05_REFERENCE.alpha => Z_05_REFERENCE.z_alpha,
                None => mc::critical_value(alpha, &cfg.w_config(seed))?.z_alpha,
            };
            Some(TestLevel { alpha, z_alpha })
        }
    };
    match cfg.kind {
        ExperimentKind::Replicate => {
            let (summary, raw) = mc::replicate(&cfg.spec(seed, level)?)?;
            if let Some(p) = &args.raw {
                csv_io::write_replicates(csv_io::create(p)?, &raw)?;
            }
            records::write_json(args.out.as_deref(), &Record::seeded(seed, summary))
        }
        ExperimentKind::Null => {
            let spec = cfg.spec(seed, level)?;
            let results = mc::run_replicates(&spec)?;
            if let Some(p) = &args.raw {
                csv_io::write_replicates(csv_io::create(p)?, &mc::indexed(&results))?;
            }
            let summary = oudw_core::ExperimentSummary::from_outcomes(&spec, &results)?;
            let null = mc::compare_with_w(&spec, &results, &cfg.w_config(seed))?;
            #[derive(Serialize)]
            struct NullRecord {
                null_law: mc::NullDistribution,
                w_config: WSamplerConfig,
                summary: oudw_core::ExperimentSummary,
            }
            let body = NullRecord { null_law: null, w_config: cfg.w_config(seed), summary };
            records::write_json(args.out.as_deref(), &Record::seeded(seed, body))
        }
        ExperimentKind::Power => {
            let level = level.expect("power runs always carry a level");
            let rows = mc::level_power_experiment(cfg.theta, &cfg.rho_grid, cfg.horizon, cfg.step, cfg.replications, level, seed)?;
            let body = PowerRecord {
                theta: cfg.theta,
                horizon: cfg.horizon,
                step: cfg.step,
                replications: cfg.replications,
                rows,
            };
            records::write_json(args.out.as_deref(), &Record::seeded(seed, body))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Test(a) => test(a),
        Command::Limits(a) => limits(a),
        Command::Wdist(a) => wdist(a),
        Command::Quantile(a) => quantile(a),
        Command::Mc(a) => mc_command(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
