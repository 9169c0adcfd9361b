//! Monte Carlo engine for the transport-weighting simulation study.
//!
//! A population of four independent standard-normal covariates gets trial
//! membership from one of seven logistic forms scaled by γ₁; equal-size trial
//! and validation samples are drawn from the two strata; reported outcomes
//! carry an error whose mean depends on the covariates through γ₂. Each
//! replicate compares the naive validation error mean with inverse-odds
//! weighted versions under the true-form and mains-only membership fits.

mod generate;
pub mod rng;
mod runner;
mod scenario;

pub use generate::{
    draw_samples, generate_outcomes, generate_population, Population, SampleSkeleton,
    SimulatedData,
};
pub use runner::{
    asmd_of_true_probs, build_grid, run_grid, run_replicate, run_scenario, EstimatorSummary,
    ReplicateEstimate, ReplicateResult, ScenarioResult,
};
pub use scenario::{
    default_gamma_grid, CoefficientTable, Estimator, FittedModel, ModelForm, ScenarioSpec,
    N_COVARIATES,
};
