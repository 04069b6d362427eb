//! Effective configuration: a JSON config file overlaid by command-line flags.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use uc_screen_core::{PgaConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Aware,
    Agnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostBoundArg {
    None,
    Nn,
}

/// Every option a stage may consume. Flags left unset fall back to the
/// `--config` file, then to per-command defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Network case JSON
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<PathBuf>,
    /// Load variation range r in [0, 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    /// Total load level (defaults to the nominal total)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Number of samples to generate
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Random seed
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relaxation of the predicted cost cap
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Neighbours for KNN screening
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Screen for one load (aware) or a whole region (agnostic)
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    /// Add a learned cost cap to the screening problems
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_bound: Option<CostBoundArg>,
    /// Output path
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Experiment spec JSON
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    /// Also write the assembled problem in CPLEX LP format
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_export: Option<PathBuf>,
    /// Dataset JSONL (from `datagen`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Trained cost model JSON (from `train`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Load vector JSON array (defaults to the case's nominal load)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load: Option<PathBuf>,
    /// Screening report JSON (from `screen`) used to reduce the problem
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen: Option<PathBuf>,
    /// Metrics CSV (from `eval`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<PathBuf>,
    /// Branch-and-bound node limit
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_limit: Option<usize>,

    /// Training hyperparameters (config file only)
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    /// Bound-search parameters (config file only)
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pga: Option<PgaConfig>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field),)* }
    };
}

impl RunConfig {
    /// Values in `self` (flags) win over `file`.
    pub fn over(self, file: RunConfig) -> RunConfig {
        let top = self;
        overlay!(file, top, case, range, level, count, seed, epsilon, k, mode, cost_bound, out, spec,
            lp_export, data, model, load, screen, results, node_limit, train, pga)
    }
}
