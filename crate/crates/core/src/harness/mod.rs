//! Experiment configuration, execution, and result persistence.
//!
//! A run config is a JSON document with a global seed and a list of
//! experiments. Outputs are CSV tables (fixed column order per table type),
//! JSON summaries, and a manifest echoing the config with its hash. Runs are
//! bit-reproducible: identical configs produce identical bytes.

pub mod experiments;
pub mod ratefit;
pub mod scenarios;

pub use experiments::*;
pub use ratefit::RateFit;
pub use scenarios::{
    lipschitz_paths, FiniteSupportInstance, FiniteSupportScenario, LinearGaussianScenario,
    LinearInstance, MisspecifiedLinearScenario, NoiseLaw,
};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{write_csv_rows, write_json};
use crate::seeding::derive_seed;

/// One experiment in a run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Geom(GeomConfig),
    Parametric(ParametricRateConfig),
    Aggregation(AggregationRateConfig),
    Nonparametric(NonparametricRateConfig),
    Dominance(DominanceConfig),
    CritradRate(CritradRateConfig),
    RestrictionIdentity(RestrictionIdentityConfig),
    MinimaxLb(MinimaxConfig),
}

impl ExperimentSpec {
    fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Geom(_) => "geom",
            ExperimentSpec::Parametric(_) => "parametric",
            ExperimentSpec::Aggregation(_) => "aggregation",
            ExperimentSpec::Nonparametric(_) => "nonparametric",
            ExperimentSpec::Dominance(_) => "dominance",
            ExperimentSpec::CritradRate(_) => "critrad-rate",
            ExperimentSpec::RestrictionIdentity(_) => "restriction-identity",
            ExperimentSpec::MinimaxLb(_) => "minimax-lb",
        }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub version: String,
    pub config_sha256: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
}

fn config_hash(config: &RunConfig) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Per-experiment seeds: an explicit nonzero seed wins; otherwise derive
/// from the run seed and the experiment's position.
fn effective_seed(run_seed: u64, index: usize, configured: u64) -> u64 {
    if configured != 0 {
        configured
    } else {
        derive_seed(run_seed, index as u64)
    }
}

/// Execute every experiment in the config and persist results under
/// `out_dir`. Returns the list of files written.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();

    for (index, spec) in config.experiments.iter().enumerate() {
        let stem = format!("{:02}-{}", index, spec.kind());
        match spec {
            ExperimentSpec::Geom(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let report = geom_check_trials(&cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &report.rows)?;
                outputs.push(csv);
                let json = out_dir.join(format!("{stem}.json"));
                write_json(
                    &json,
                    &serde_json::json!({
                        "total_violations": report.total_violations,
                        "worst_ratio": report.worst_ratio,
                        "c": report.c,
                        "tol": report.tol,
                        "trials": report.rows.len(),
                    }),
                )?;
                outputs.push(json);
            }
            ExperimentSpec::Parametric(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let report = experiment_parametric_rate(&cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &report.rows)?;
                outputs.push(csv);
                let json = out_dir.join(format!("{stem}.json"));
                write_json(&json, &report)?;
                outputs.push(json);
            }
            ExperimentSpec::Aggregation(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let report = experiment_finite_aggregation(&cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &report.rows)?;
                outputs.push(csv);
                let json = out_dir.join(format!("{stem}.json"));
                write_json(&json, &report)?;
                outputs.push(json);
            }
            ExperimentSpec::Nonparametric(cfg) => {
                let report = experiment_nonparametric_rate(cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &report.rows)?;
                outputs.push(csv);
                let json = out_dir.join(format!("{stem}.json"));
                write_json(&json, &report)?;
                outputs.push(json);
            }
            ExperimentSpec::Dominance(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let report = experiment_dominance(&cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &report.rows)?;
                outputs.push(csv);
                let json = out_dir.join(format!("{stem}.json"));
                write_json(&json, &report)?;
                outputs.push(json);
            }
            ExperimentSpec::CritradRate(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let report = experiment_critrad_rate(&cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &report.rows)?;
                outputs.push(csv);
                let json = out_dir.join(format!("{stem}.json"));
                write_json(&json, &report)?;
                outputs.push(json);
            }
            ExperimentSpec::RestrictionIdentity(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let report = experiment_restriction_identity(&cfg)?;
                let json = out_dir.join(format!("{stem}.json"));
                write_json(&json, &report)?;
                outputs.push(json);
            }
            ExperimentSpec::MinimaxLb(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = effective_seed(config.seed, index, cfg.seed);
                let records = experiment_minimax(&cfg)?;
                let csv = out_dir.join(format!("{stem}.csv"));
                write_csv_rows(&csv, &records)?;
                outputs.push(csv);
            }
        }
    }

    let manifest = Manifest {
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(config)?,
        config: config.clone(),
    };
    let manifest_path = out_dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    outputs.push(manifest_path);

    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        outputs,
    })
}

/// Parse a run config from a JSON file with a schema-oriented error message.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Error::InvalidParameter(format!(
            "malformed config {}: {e}; expected {{\"seed\": u64, \"experiments\": [{{\"kind\": ...}}]}}",
            path.display()
        ))
    })
}
