//! Command-line interface: fitting, audits, offset complexity estimation,
//! critical radii, covers, chaining bounds, rate experiments, and full runs.
//!
//! `OFFSETRAD_THREADS` caps the worker pool (default: available cores).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use offsetrad::chaining::{chaining_bound_sample, greedy_cover, star_cover_construct};
use offsetrad::error::{Error, Result};
use offsetrad::estimators::{star_estimator, StepOneFit};
use offsetrad::harness::{
    self, experiment_critrad_rate, experiment_dominance, experiment_finite_aggregation,
    experiment_minimax, experiment_nonparametric_rate, experiment_parametric_rate,
    experiment_restriction_identity, geom_check_trials, AggregationRateConfig, CritradRateConfig,
    DominanceConfig, FiniteSupportScenario, GeomConfig, LinearGaussianScenario, MinimaxConfig,
    NoiseLaw, NonparametricRateConfig, ParametricRateConfig, RestrictionIdentityConfig,
};
use offsetrad::io::{read_design_sample, read_matrix_csv, write_csv_rows, write_json};
use offsetrad::model::{shifted_star_class, FiniteDictionary, FunctionClass, LinearClass};
use offsetrad::offset::{
    critical_radius, offset_mc, Convention, CritradClass, LinearCritradInstance, McClass,
    StarCritradInstance,
};
use offsetrad::seeding::derive_seed;

#[derive(Parser)]
#[command(
    name = "offsetrad",
    version,
    about = "Star estimator and offset Rademacher complexity toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the two-step Star estimator and write the result as JSON.
    Fit(FitArgs),
    /// Audit the geometric inequality on randomized instances (CSV rows).
    GeomCheck(GeomCheckArgs),
    /// Monte Carlo estimate of an offset complexity.
    Offset(OffsetArgs),
    /// Critical radius of the localized offset process on a builtin scenario.
    Critrad(CritradArgs),
    /// Greedy cover of a value matrix.
    Cover(CoverArgs),
    /// Chaining bound for a value matrix.
    ChainBound(ChainBoundArgs),
    /// Rate experiments: parametric, aggregation, nonparametric.
    Rates(RatesArgs),
    /// Stochastic-dominance diagnostic table.
    Dominance(DominanceArgs),
    /// Exhaustive minimax lower-bound comparison.
    MinimaxLb(MinimaxArgs),
    /// Execute a JSON run config.
    Run(RunArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Class kind: finite | linear.
    #[arg(long)]
    class: String,
    /// Sample CSV (x_1..x_d, y[, fstar, xi]).
    #[arg(long)]
    data: PathBuf,
    /// Dictionary CSV (finite classes; rows = members).
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GeomCheckArgs {
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inequality constant (default 1/18).
    #[arg(long, default_value_t = 1.0 / 18.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 6)]
    max_members: usize,
    #[arg(long, default_value_t = 10)]
    max_n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OffsetArgs {
    /// Class kind: finite | linear | star.
    #[arg(long)]
    class: String,
    /// Dictionary CSV (finite and star classes).
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Sample CSV; supplies the design matrix for linear classes and the
    /// noise multipliers for *-noise conventions.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Index of f* in the dictionary (star classes).
    #[arg(long)]
    fstar_index: Option<usize>,
    #[arg(long, visible_alias = "C", default_value_t = 0.25)]
    c_offset: f64,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// eps | 2eps | eps-noise | 2eps-noise.
    #[arg(long, default_value = "2eps-noise")]
    convention: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CritradArgs {
    /// Scenario: star (finite-support dictionary) | linear (Gaussian design).
    #[arg(long, default_value = "star")]
    scenario: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    members: usize,
    #[arg(long, default_value_t = 40)]
    support: usize,
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, visible_alias = "C", default_value_t = 0.5)]
    c_offset: f64,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 1e-4)]
    r_lo: f64,
    #[arg(long, default_value_t = 50.0)]
    r_hi: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoverArgs {
    /// Value matrix CSV (rows = functions on the design).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    delta: f64,
    /// Cover the star hull around zero instead, valid at 2*delta
    /// (requires unit-ball inputs).
    #[arg(long, default_value_t = false)]
    star: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChainBoundArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, visible_alias = "C", default_value_t = 0.25)]
    c_offset: f64,
    /// Comma-separated gamma grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.4, 0.8])]
    gamma_grid: Vec<f64>,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0])]
    alpha_grid: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RatesArgs {
    /// parametric | aggregation | nonparametric.
    #[arg(long)]
    experiment: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated n grid (defaults per experiment).
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DominanceArgs {
    #[arg(long, default_value_t = 800)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Student-t(5) noise instead of Gaussian.
    #[arg(long, default_value_t = false)]
    heavy_tail: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MinimaxArgs {
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    c: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn init_threads() {
    if let Ok(v) = std::env::var("OFFSETRAD_THREADS") {
        if let Ok(k) = v.parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
        }
    }
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let sample = read_design_sample(&args.data)?;
    let class = match args.class.as_str() {
        "finite" => {
            let dict_path = args.dict.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--dict is required for finite classes".into())
            })?;
            FunctionClass::Finite(FiniteDictionary::new(read_matrix_csv(dict_path)?)?)
        }
        "linear" => FunctionClass::Linear(LinearClass::from_rows(sample.x_rows())?),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown class '{other}' (expected finite | linear)"
            )))
        }
    };
    let fit = star_estimator(&class, &sample)?;
    let g_hat = match &fit.g_hat {
        StepOneFit::Finite { index } => serde_json::json!(index),
        StepOneFit::Linear { weights, .. } => serde_json::json!(weights),
    };
    write_json(
        &args.out,
        &serde_json::json!({
            "g_hat": g_hat,
            "lambda_star": fit.lambda_star,
            "base_index": fit.base_index,
            "risk_g": fit.risk_g,
            "risk_f": fit.risk_f,
        }),
    )
}

fn cmd_geom_check(args: &GeomCheckArgs) -> Result<()> {
    let report = geom_check_trials(&GeomConfig {
        trials: args.trials,
        c: args.c,
        tol: args.tol,
        max_members: args.max_members,
        max_n: args.max_n,
        seed: args.seed,
    })?;
    write_csv_rows(&args.out, &report.rows)?;
    eprintln!(
        "geom-check: {} trials, {} violations at c = {}, worst ratio {:?}",
        report.rows.len(),
        report.total_violations,
        report.c,
        report.worst_ratio
    );
    Ok(())
}

fn cmd_offset(args: &OffsetArgs) -> Result<()> {
    let convention = Convention::parse(&args.convention)?;
    let sample = args.data.as_deref().map(read_design_sample).transpose()?;
    let xi: Option<Vec<f64>> = sample
        .as_ref()
        .and_then(|s| s.truth())
        .map(|t| t.xi().to_vec());

    let estimate = match args.class.as_str() {
        "finite" => {
            let dict_path = args.dict.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--dict is required for finite classes".into())
            })?;
            let dict = FiniteDictionary::new(read_matrix_csv(dict_path)?)?;
            offset_mc(
                &McClass::Finite(&dict),
                args.c_offset,
                convention,
                xi.as_deref(),
                args.reps,
                args.seed,
            )?
        }
        "star" => {
            let dict_path = args.dict.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--dict is required for star classes".into())
            })?;
            let dict = FiniteDictionary::new(read_matrix_csv(dict_path)?)?;
            let fstar_index = args.fstar_index.ok_or_else(|| {
                Error::InvalidParameter("--fstar-index is required for star classes".into())
            })?;
            let fstar = dict.evaluate(fstar_index)?;
            let class = shifted_star_class(&dict, &fstar)?;
            offset_mc(
                &McClass::Star(&class),
                args.c_offset,
                convention,
                xi.as_deref(),
                args.reps,
                args.seed,
            )?
        }
        "linear" => {
            let sample = sample.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--data is required for linear classes".into())
            })?;
            let class = LinearClass::from_rows(sample.x_rows())?;
            offset_mc(
                &McClass::Linear(&class),
                args.c_offset,
                convention,
                xi.as_deref(),
                args.reps,
                args.seed,
            )?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown class '{other}' (expected finite | linear | star)"
            )))
        }
    };
    write_json(&args.out, &estimate)
}

fn cmd_critrad(args: &CritradArgs) -> Result<()> {
    let kappa = args.kappa.unwrap_or(args.c_offset * (1.0 - 1.0 / 72.0));
    let class = match args.scenario.as_str() {
        "star" => {
            let scenario = FiniteSupportScenario::build(
                args.members,
                args.support,
                NoiseLaw::Gaussian { sigma: args.sigma },
                true,
                derive_seed(args.seed, 0xB0),
            )?;
            let inst = scenario.generate(args.n, derive_seed(args.seed, 0xB1))?;
            CritradClass::Star(StarCritradInstance {
                dict_support: scenario.dict_support.clone(),
                fstar_support: scenario.fstar_support().to_vec(),
                weights: scenario.weights.clone(),
                sample_indices: inst.sample_indices.clone(),
                xi: inst.sample.truth().expect("synthetic truth").xi().to_vec(),
            })
        }
        "linear" => {
            let scenario =
                LinearGaussianScenario::build(args.p, args.sigma, derive_seed(args.seed, 0xB0))?;
            let inst = scenario.generate(args.n, derive_seed(args.seed, 0xB1))?;
            CritradClass::Linear(LinearCritradInstance {
                features: inst.class.features().clone(),
                covariance: DMatrix::identity(args.p, args.p),
                xi: inst.sample.truth().expect("synthetic truth").xi().to_vec(),
            })
        }
        other => {
            return Err(Error::UnknownScenario(format!(
                "'{other}' (expected star | linear)"
            )))
        }
    };
    let result = critical_radius(
        &class,
        kappa,
        args.delta,
        args.c_offset,
        args.reps,
        (args.r_lo, args.r_hi),
        args.seed,
    )?;
    write_json(&args.out, &result)
}

fn cmd_cover(args: &CoverArgs) -> Result<()> {
    let points = read_matrix_csv(&args.data)?;
    if args.star {
        let res = star_cover_construct(&points, args.delta, 2000)?;
        write_json(&args.out, &res)
    } else {
        let cover = greedy_cover(&points, args.delta)?;
        write_json(&args.out, &cover)
    }
}

fn cmd_chain_bound(args: &ChainBoundArgs) -> Result<()> {
    let points = read_matrix_csv(&args.data)?;
    let bound = chaining_bound_sample(&points, args.c_offset, &args.gamma_grid, &args.alpha_grid)?;
    write_json(&args.out, &bound)
}

fn cmd_rates(args: &RatesArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)?;
    match args.experiment.as_str() {
        "parametric" => {
            let mut cfg = ParametricRateConfig {
                seed: args.seed,
                ..ParametricRateConfig::default()
            };
            if let Some(grid) = &args.n_grid {
                cfg.n_grid = grid.clone();
            }
            if let Some(t) = args.trials {
                cfg.trials_per_n = t;
            }
            let report = experiment_parametric_rate(&cfg)?;
            write_csv_rows(&args.out_dir.join("parametric.csv"), &report.rows)?;
            write_json(&args.out_dir.join("parametric.json"), &report)?;
            eprintln!(
                "parametric: slope {:.3} (r2 {:.4}), window ratio {:.3}",
                report.fit.slope, report.fit.r2, report.window.ratio
            );
        }
        "aggregation" => {
            let mut cfg = AggregationRateConfig {
                seed: args.seed,
                ..AggregationRateConfig::default()
            };
            if let Some(grid) = &args.n_grid {
                cfg.n_grid = grid.clone();
            }
            if let Some(t) = args.trials {
                cfg.trials_per_n = t;
            }
            let report = experiment_finite_aggregation(&cfg)?;
            write_csv_rows(&args.out_dir.join("aggregation.csv"), &report.rows)?;
            write_json(&args.out_dir.join("aggregation.json"), &report)?;
            if let Some(fit) = &report.fit_q90 {
                eprintln!("aggregation: q90 slope {:.3} (r2 {:.4})", fit.slope, fit.r2);
            }
        }
        "nonparametric" => {
            let mut cfg = NonparametricRateConfig::default();
            if let Some(grid) = &args.n_grid {
                cfg.n_grid = grid.clone();
            }
            let report = experiment_nonparametric_rate(&cfg)?;
            write_csv_rows(&args.out_dir.join("nonparametric.csv"), &report.rows)?;
            write_json(&args.out_dir.join("nonparametric.json"), &report)?;
            if let Some(fit) = &report.fit {
                eprintln!("nonparametric: slope {:.3} (r2 {:.4})", fit.slope, fit.r2);
            }
        }
        "critrad" => {
            let mut cfg = CritradRateConfig {
                seed: args.seed,
                ..CritradRateConfig::default()
            };
            if let Some(grid) = &args.n_grid {
                cfg.n_grid = grid.clone();
            }
            let report = experiment_critrad_rate(&cfg)?;
            write_csv_rows(&args.out_dir.join("critrad-rate.csv"), &report.rows)?;
            write_json(&args.out_dir.join("critrad-rate.json"), &report)?;
        }
        "restriction-identity" => {
            let cfg = RestrictionIdentityConfig {
                seed: args.seed,
                ..RestrictionIdentityConfig::default()
            };
            let report = experiment_restriction_identity(&cfg)?;
            write_json(&args.out_dir.join("restriction-identity.json"), &report)?;
        }
        other => return Err(Error::UnknownScenario(format!("experiment '{other}'"))),
    }
    Ok(())
}

fn cmd_dominance(args: &DominanceArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)?;
    let noise = if args.heavy_tail {
        NoiseLaw::StudentT {
            df: 5.0,
            scale: 0.5,
        }
    } else {
        NoiseLaw::Gaussian { sigma: 0.5 }
    };
    let cfg = DominanceConfig {
        trials: args.trials,
        seed: args.seed,
        noise,
        ..DominanceConfig::default()
    };
    let report = experiment_dominance(&cfg)?;
    let tag = if args.heavy_tail { "heavy" } else { "gaussian" };
    write_csv_rows(
        &args.out_dir.join(format!("dominance-{tag}.csv")),
        &report.rows,
    )?;
    write_json(&args.out_dir.join(format!("dominance-{tag}.json")), &report)?;
    Ok(())
}

fn cmd_minimax(args: &MinimaxArgs) -> Result<()> {
    let cfg = MinimaxConfig {
        instances: args.instances,
        n: args.n,
        c: args.c,
        seed: args.seed,
        ..MinimaxConfig::default()
    };
    let records = experiment_minimax(&cfg)?;
    write_csv_rows(&args.out, &records)?;
    let holds = records.iter().filter(|r| r.holds).count();
    eprintln!("minimax-lb: {}/{} instances hold", holds, records.len());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = harness::load_config(&args.config)?;
    let summary = harness::run(&config, &args.out_dir)?;
    for path in &summary.outputs {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::GeomCheck(args) => cmd_geom_check(args),
        Command::Offset(args) => cmd_offset(args),
        Command::Critrad(args) => cmd_critrad(args),
        Command::Cover(args) => cmd_cover(args),
        Command::ChainBound(args) => cmd_chain_bound(args),
        Command::Rates(args) => cmd_rates(args),
        Command::Dominance(args) => cmd_dominance(args),
        Command::MinimaxLb(args) => cmd_minimax(args),
        Command::Run(args) => cmd_run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
