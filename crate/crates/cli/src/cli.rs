//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_dom, cmd_estimate, cmd_simulate, cmd_weights, fmt_f64};
use crate::config::{load_file, DomArgs, EstimateArgs, SimulateArgs, WeightingArgs, SEED_ENV};
use crate::error::Result;

const DATA_HELP: &str = "\
Input CSV: header row, then one row per subject.
  S      sample label, `v` (validation) or `rct` (trial)
  A      treatment, 0 or 1 (validation rows must be 0)
  Y      self-reported outcome
  Z      error-free outcome; optional column, empty when unobserved
  prob   optional precomputed P(S = rct | X); skips model fitting
  other  numeric covariates, in header order";

const ESTIMATE_AFTER: &str = "\
Writes to --out:
  report.json   membership model, weights, naive/weighted error means,
                empirical bias (when trial Z is present), corrected ATE
  balance.csv   covariate,trial_mean,validation_mean,asmd,validation_mean_weighted,asmd_weighted
  meta.json     resolved configuration";

const WEIGHTS_AFTER: &str = "\
Writes to --out:
  weights.csv       row,S,prob,weight,weight_trimmed
  balance.csv       covariate,trial_mean,validation_mean,asmd,validation_mean_weighted,asmd_weighted
  diagnostics.json  membership model, trimming threshold, effective sample size
  meta.json         resolved configuration";

const SIMULATE_AFTER: &str = "\
Writes to --out:
  results.csv    gamma1,gamma2,true_model,estimator,mean_bias,abs_bias,mc_se,coverage,asmd_true_probs,failed_replicates
  scenarios.csv  gamma1,gamma2,true_model,asmd_true_probs,mean_dom,mean_analytic_bias,failed_replicates,error
  meta.json      resolved configuration and per-scenario seeds
Estimators: naive, weighted_true, weighted_misspecified (mains-only fit).
Results do not depend on --threads.";

const DOM_AFTER: &str = "\
Writes to --out:
  dom.json   dom,n,fitted_column,true_column
  meta.json  resolved configuration";

#[derive(Debug, Parser)]
#[command(name = "xportme", version, about = "Transport-weighted correction of outcome measurement error")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the control-arm error mean and the corrected ATE.
    #[command(long_about = DATA_HELP, after_help = ESTIMATE_AFTER)]
    Estimate {
        /// JSON file with default settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: EstimateArgs,
    },
    /// Fit the membership model and write weights and balance diagnostics.
    #[command(long_about = DATA_HELP, after_help = WEIGHTS_AFTER)]
    Weights {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: WeightingArgs,
    },
    /// Run the Monte Carlo study over a grid of scenarios.
    #[command(after_help = SIMULATE_AFTER)]
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// Degree of misspecification between fitted and reference probabilities.
    #[command(after_help = DOM_AFTER)]
    Dom {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        args: DomArgs,
    },
}

/// Run a parsed command and return a short summary for the terminal.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Estimate { config, args } => {
            let cfg = args.overlay(load_file(config.as_deref())?).resolve()?;
            let out = cmd_estimate(&cfg)?;
            let r = &out.report;
            let mut s = format!(
                "mu0_naive    {} (se {})\nmu0_weighted {} (se {})\nnaive_ate    {}",
                fmt_f64(r.mu0_naive.estimate),
                r.mu0_naive.se.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.mu0_weighted.estimate),
                r.mu0_weighted.se.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.naive_ate.estimate),
            );
            if let Some(b) = &r.empirical_bias {
                s.push_str(&format!(
                    "\nempirical bias: naive {}, weighted {}",
                    fmt_f64(b.naive),
                    fmt_f64(b.weighted)
                ));
            }
            Ok(s)
        }
        Command::Weights { config, args } => {
            let cfg = args.overlay(load_file(config.as_deref())?).resolve()?;
            let (_, diag) = cmd_weights(&cfg)?;
            Ok(format!(
                "effective sample size {} (raw {}), max weight {}",
                fmt_f64(diag.weights.effective_sample_size),
                fmt_f64(diag.weights.effective_sample_size_raw),
                fmt_f64(diag.weights.max_weight),
            ))
        }
        Command::Simulate { config, args } => {
            let env_seed = std::env::var(SEED_ENV).ok();
            let cfg = args
                .overlay(load_file(config.as_deref())?)
                .resolve(env_seed.as_deref())?;
            let out = cmd_simulate(&cfg)?;
            Ok(format!(
                "{} scenarios, {} failed",
                out.scenarios.len(),
                out.failed_scenarios()
            ))
        }
        Command::Dom { config, args } => {
            let cfg = args.overlay(load_file(config.as_deref())?).resolve()?;
            let out = cmd_dom(&cfg)?;
            Ok(format!("dom {} (n = {})", fmt_f64(out.dom), out.n))
        }
    }
}
