//! Per-command settings. Every setting can come from a flag or from a JSON
//! file passed with `--config` (keys are the flag names with underscores);
//! flags win. The base seed falls back to `XPORTME_SEED`, then to a default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use xportme::simulation::{default_gamma_grid, ModelForm, ScenarioSpec};

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "XPORTME_SEED";
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_OUT: &str = "xportme-out";
/// Offsets added to the weighted μ̂₀ when no `--mu1-grid` is given.
pub const DEFAULT_MU1_OFFSETS: [f64; 9] = [-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2];

pub fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

macro_rules! overlay {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            /// Fill fields unset on the command line from `file`.
            pub fn overlay(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

/// Settings shared by `estimate` and `weights`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingArgs {
    /// Stacked CSV (columns S, A, Y, [Z], [prob], covariates...).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Membership model terms, e.g. `age+bmi+age:bmi+bmi^2`. Default: all main effects.
    #[arg(long)]
    pub terms: Option<String>,
    /// Cap validation weights at this quantile of their distribution.
    #[arg(long)]
    pub trim_quantile: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(WeightingArgs { data, terms, trim_quantile, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateArgs {
    /// Stacked CSV (columns S, A, Y, [Z], [prob], covariates...).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Membership model terms, e.g. `age+bmi+age:bmi+bmi^2`. Default: all main effects.
    #[arg(long)]
    pub terms: Option<String>,
    /// Cap validation weights at this quantile of their distribution.
    #[arg(long)]
    pub trim_quantile: Option<f64>,
    /// Assumed treatment-arm error means for the corrected ATE (comma list).
    #[arg(long, value_delimiter = ',')]
    pub mu1_grid: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(EstimateArgs { data, terms, trim_quantile, mu1_grid, out });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightingConfig {
    pub data: PathBuf,
    pub terms: Option<String>,
    pub trim_quantile: Option<f64>,
    pub out: Option<PathBuf>,
}

impl WeightingConfig {
    pub fn new(data: impl Into<PathBuf>) -> Self {
        Self {
            data: data.into(),
            terms: None,
            trim_quantile: None,
            out: None,
        }
    }
}

impl WeightingArgs {
    pub fn resolve(self) -> Result<WeightingConfig> {
        let data = self
            .data
            .ok_or_else(|| CliError::Config("`data` is required".into()))?;
        if let Some(q) = self.trim_quantile {
            if !(q > 0.0 && q < 1.0) {
                return Err(CliError::Config(format!("trim_quantile must lie in (0, 1), got {q}")));
            }
        }
        Ok(WeightingConfig {
            data,
            terms: self.terms,
            trim_quantile: self.trim_quantile,
            out: Some(self.out.unwrap_or_else(|| DEFAULT_OUT.into())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateConfig {
    #[serde(flatten)]
    pub weighting: WeightingConfig,
    /// `None` means a grid around the weighted μ̂₀.
    pub mu1_grid: Option<Vec<f64>>,
}

impl EstimateArgs {
    pub fn resolve(self) -> Result<EstimateConfig> {
        if matches!(&self.mu1_grid, Some(g) if g.is_empty()) {
            return Err(CliError::Config("mu1_grid is empty".into()));
        }
        let weighting = WeightingArgs {
            data: self.data,
            terms: self.terms,
            trim_quantile: self.trim_quantile,
            out: self.out,
        };
        Ok(EstimateConfig {
            weighting: weighting.resolve()?,
            mu1_grid: self.mu1_grid,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Membership-strength values (comma list). Default 0,0.2,...,1.
    #[arg(long, value_delimiter = ',')]
    pub gamma1: Option<Vec<f64>>,
    /// Error-strength values (comma list). Default 0,0.2,...,1.
    #[arg(long, value_delimiter = ',')]
    pub gamma2: Option<Vec<f64>>,
    /// True membership model forms, 1-7 (comma list). Default all.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<u8>>,
    /// Replicates per scenario. Default 1000.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Rows drawn from each of the trial and validation strata. Default 1000.
    #[arg(long)]
    pub n: Option<usize>,
    /// Population size. Default 100000, or 1000000 with --full-scale.
    #[arg(long)]
    pub pop_size: Option<usize>,
    /// Variance of the reported-outcome noise. Default 1.5.
    #[arg(long)]
    pub outcome_noise_var: Option<f64>,
    /// Base seed; falls back to XPORTME_SEED, then 2024.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Default: available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Use the full-size population by default.
    #[arg(long)]
    #[serde(skip)]
    pub full_scale: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn overlay(self, file: Self) -> Self {
        Self {
            gamma1: self.gamma1.or(file.gamma1),
            gamma2: self.gamma2.or(file.gamma2),
            models: self.models.or(file.models),
            replicates: self.replicates.or(file.replicates),
            n: self.n.or(file.n),
            pop_size: self.pop_size.or(file.pop_size),
            outcome_noise_var: self.outcome_noise_var.or(file.outcome_noise_var),
            seed: self.seed.or(file.seed),
            threads: self.threads.or(file.threads),
            full_scale: self.full_scale,
            out: self.out.or(file.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateConfig {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub models: Vec<u8>,
    pub replicates: usize,
    pub n: usize,
    pub pop_size: usize,
    pub outcome_noise_var: f64,
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn forms(&self) -> Result<Vec<ModelForm>> {
        self.models
            .iter()
            .map(|&m| ModelForm::new(m).map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }
}

impl SimulateArgs {
    /// `env_seed` is the value of `XPORTME_SEED`, if set.
    pub fn resolve(self, env_seed: Option<&str>) -> Result<SimulateConfig> {
        let seed = match (self.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(raw)) => raw
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}=`{raw}` is not a u64")))?,
            (None, None) => DEFAULT_SEED,
        };
        let default_pop = if self.full_scale {
            ScenarioSpec::FULL_POPULATION
        } else {
            ScenarioSpec::DESK_POPULATION
        };
        let threads = self.threads.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
        let cfg = SimulateConfig {
            gamma1: self.gamma1.unwrap_or_else(default_gamma_grid),
            gamma2: self.gamma2.unwrap_or_else(default_gamma_grid),
            models: self.models.unwrap_or_else(|| (1..=7).collect()),
            replicates: self.replicates.unwrap_or(1000),
            n: self.n.unwrap_or(1000),
            pop_size: self.pop_size.unwrap_or(default_pop),
            outcome_noise_var: self.outcome_noise_var.unwrap_or(1.5),
            seed,
            threads: threads.max(1),
            out: Some(self.out.unwrap_or_else(|| DEFAULT_OUT.into())),
        };
        if cfg.gamma1.is_empty() || cfg.gamma2.is_empty() || cfg.models.is_empty() {
            return Err(CliError::Config("gamma1, gamma2 and models must be nonempty".into()));
        }
        cfg.forms()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomArgs {
    /// CSV holding both probability columns.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Column of fitted probabilities. Default `fitted`.
    #[arg(long)]
    pub fitted_column: Option<String>,
    /// Column of reference (true-model) probabilities. Default `true`.
    #[arg(long)]
    pub true_column: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(DomArgs { data, fitted_column, true_column, out });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomConfig {
    pub data: PathBuf,
    pub fitted_column: String,
    pub true_column: String,
    pub out: Option<PathBuf>,
}

impl DomArgs {
    pub fn resolve(self) -> Result<DomConfig> {
        Ok(DomConfig {
            data: self
                .data
                .ok_or_else(|| CliError::Config("`data` is required".into()))?,
            fitted_column: self.fitted_column.unwrap_or_else(|| "fitted".into()),
            true_column: self.true_column.unwrap_or_else(|| "true".into()),
            out: Some(self.out.unwrap_or_else(|| DEFAULT_OUT.into())),
        })
    }
}
