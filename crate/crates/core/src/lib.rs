//! Transport-weighted correction of outcome measurement error in intervention
//! trials that rely on an external validation sample.
//!
//! The validation sample observes both the self-reported outcome `Y` and the
//! error-free outcome `Z` under control conditions only. Its error mean is
//! transported to the trial, after reweighting validation rows by the odds of
//! trial membership so they resemble the trial on measured covariates.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod membership;
pub mod scalar;
pub mod simulation;
pub mod stats;

pub use data::{
    validate_dataset, ErrorMoments, EstimateReport, Rule, SampleLabel, StackedDataset,
    StackedRow, Violation,
};
pub use error::{Error, Result};
pub use estimators::{
    analytic_ate_bias, analytic_mu0_bias, corrected_ate, empirical_mu0_bias, naive_ate,
    naive_mu0, weighted_mu0, CovariateShiftSpec, MeasurementErrorSpec, SensitivityPoint,
};
pub use membership::{
    asmd, balance_table, build_design, dom, fit_membership, make_weights, predict_prob,
    trim_weights, FitOptions, MembershipModel, TermSet, WeightSet,
};
pub use scalar::{expit, logit, Scalar};
pub use stats::weighted_covariance;

pub type Dataset = StackedDataset<f64>;
pub type Row = StackedRow<f64>;
pub type Report = EstimateReport<f64>;
pub type Model = MembershipModel<f64>;
pub type Weights = WeightSet<f64>;
pub type ErrorSpec = MeasurementErrorSpec<f64>;
pub type ShiftSpec = CovariateShiftSpec<f64>;
pub type ScenarioOutcome = simulation::ScenarioResult<f64>;
