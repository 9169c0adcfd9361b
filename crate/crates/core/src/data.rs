//! Stacked trial + validation data and the report type shared by the estimators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Z_95};

/// Which study a row comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleLabel {
    #[serde(rename = "v")]
    Validation,
    #[serde(rename = "rct")]
    Trial,
}

impl SampleLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleLabel::Validation => "v",
            SampleLabel::Trial => "rct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "v" => Some(SampleLabel::Validation),
            "rct" => Some(SampleLabel::Trial),
            _ => None,
        }
    }
}

impl fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One participant in the stacked dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedRow<F> {
    pub sample: SampleLabel,
    pub treated: bool,
    /// Outcome measured with error (Y).
    pub y_reported: F,
    /// Outcome without error (Z), usually observed only in the validation study.
    pub z_true: Option<F>,
    pub covariates: Vec<F>,
}

impl<F: Scalar> StackedRow<F> {
    pub fn validation(y: F, z: F, covariates: Vec<F>) -> Self {
        Self {
            sample: SampleLabel::Validation,
            treated: false,
            y_reported: y,
            z_true: Some(z),
            covariates,
        }
    }

    pub fn trial(treated: bool, y: F, z: Option<F>, covariates: Vec<F>) -> Self {
        Self {
            sample: SampleLabel::Trial,
            treated,
            y_reported: y,
            z_true: z,
            covariates,
        }
    }

    pub fn is_validation(&self) -> bool {
        self.sample == SampleLabel::Validation
    }

    /// Y − Z when Z is observed.
    pub fn error(&self) -> Option<F> {
        self.z_true.map(|z| self.y_reported - z)
    }
}

/// Rows from the trial and the validation sample in a single table.
///
/// The dataset is immutable once built; [`validate_dataset`] reports any
/// structural problems without rejecting the data.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDataset<F> {
    rows: Vec<StackedRow<F>>,
    covariate_names: Vec<String>,
}

impl<F: Scalar> StackedDataset<F> {
    pub fn new(rows: Vec<StackedRow<F>>, covariate_names: Vec<String>) -> Self {
        Self {
            rows,
            covariate_names,
        }
    }

    /// Dataset with covariates named `x1..xp`.
    pub fn with_default_names(rows: Vec<StackedRow<F>>) -> Self {
        let p = rows.first().map_or(0, |r| r.covariates.len());
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::new(rows, names)
    }

    pub fn rows(&self) -> &[StackedRow<F>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn validation_rows(&self) -> impl Iterator<Item = &StackedRow<F>> {
        self.rows.iter().filter(|r| r.is_validation())
    }

    pub fn trial_rows(&self) -> impl Iterator<Item = &StackedRow<F>> {
        self.rows.iter().filter(|r| !r.is_validation())
    }

    pub fn n_validation(&self) -> usize {
        self.validation_rows().count()
    }

    pub fn n_trial(&self) -> usize {
        self.trial_rows().count()
    }

    /// Values of covariate `j` for rows of one sample.
    pub fn covariate_column(&self, j: usize, sample: SampleLabel) -> Vec<F> {
        self.rows
            .iter()
            .filter(|r| r.sample == sample)
            .map(|r| r.covariates[j])
            .collect()
    }
}

/// Mean and variance of the measurement error Y − Z in one sample/arm cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMoments<F> {
    pub mu: F,
    pub sigma2: F,
    pub sample: SampleLabel,
    pub treated: bool,
}

impl<F: Scalar> ErrorMoments<F> {
    /// Empirical moments over the rows of `sample` with the given arm.
    /// Variance uses the n − 1 divisor (0 for a single row).
    pub fn from_dataset(d: &StackedDataset<F>, sample: SampleLabel, treated: bool) -> Result<Self> {
        let mut errors = Vec::new();
        for (i, row) in d.rows().iter().enumerate() {
            if row.sample == sample && row.treated == treated {
                errors.push(row.error().ok_or(Error::MissingTruth { row: i })?);
            }
        }
        if errors.is_empty() {
            return Err(Error::EmptyArm { arm: treated as u8 });
        }
        let mu = crate::stats::mean(&errors);
        let sigma2 = if errors.len() > 1 {
            crate::stats::sample_variance(&errors)
        } else {
            F::zero()
        };
        Ok(Self {
            mu,
            sigma2,
            sample,
            treated,
        })
    }
}

/// A point estimate with optional normal-theory interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport<F> {
    pub label: String,
    pub estimate: F,
    pub se: Option<F>,
    pub ci_low: Option<F>,
    pub ci_high: Option<F>,
    pub n_effective: F,
}

impl<F: Scalar> EstimateReport<F> {
    pub fn with_se(label: impl Into<String>, estimate: F, se: F, n_effective: F) -> Self {
        let half = F::lit(Z_95) * se;
        Self {
            label: label.into(),
            estimate,
            se: Some(se),
            ci_low: Some(estimate - half),
            ci_high: Some(estimate + half),
            n_effective,
        }
    }

    pub fn point(label: impl Into<String>, estimate: F, n_effective: F) -> Self {
        Self {
            label: label.into(),
            estimate,
            se: None,
            ci_low: None,
            ci_high: None,
            n_effective,
        }
    }

    /// Whether the interval contains `value`. False when no interval exists.
    pub fn covers(&self, value: F) -> bool {
        match (self.ci_low, self.ci_high) {
            (Some(lo), Some(hi)) => lo <= value && value <= hi,
            _ => false,
        }
    }
}

/// Rule broken by a dataset, reported by [`validate_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    ValidationRowTreated,
    ValidationMissingTruth,
    CovariateLength,
    NonFiniteValue,
    TooFewValidationRows,
    TooFewTrialRows,
    NoTreatedTrialRows,
    NoControlTrialRows,
}

impl Rule {
    pub fn describe(self) -> &'static str {
        match self {
            Rule::ValidationRowTreated => "validation rows must be control",
            Rule::ValidationMissingTruth => "validation rows must have an observed Z",
            Rule::CovariateLength => "covariate vector length must match the covariate names",
            Rule::NonFiniteValue => "values must be finite",
            Rule::TooFewValidationRows => "at least two validation rows are required",
            Rule::TooFewTrialRows => "at least two trial rows are required",
            Rule::NoTreatedTrialRows => "the trial needs at least one treated row",
            Rule::NoControlTrialRows => "the trial needs at least one control row",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending row, or `None` for dataset-level rules.
    pub row: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(r) => write!(f, "row {r}: {}", self.rule.describe()),
            None => f.write_str(self.rule.describe()),
        }
    }
}

/// Check every row- and dataset-level invariant. Never fails; an empty list
/// means the dataset is usable.
pub fn validate_dataset<F: Scalar>(d: &StackedDataset<F>) -> Vec<Violation> {
    let mut out = Vec::new();
    let p = d.n_covariates();
    for (i, row) in d.rows().iter().enumerate() {
        let mut push = |rule| out.push(Violation { row: Some(i), rule });
        if row.is_validation() && row.treated {
            push(Rule::ValidationRowTreated);
        }
        if row.is_validation() && row.z_true.is_none() {
            push(Rule::ValidationMissingTruth);
        }
        if row.covariates.len() != p {
            push(Rule::CovariateLength);
        }
        let finite = row.y_reported.is_finite()
            && row.z_true.is_none_or(|z| z.is_finite())
            && row.covariates.iter().all(|x| x.is_finite());
        if !finite {
            push(Rule::NonFiniteValue);
        }
    }
    let mut push = |rule| out.push(Violation { row: None, rule });
    if d.n_validation() < 2 {
        push(Rule::TooFewValidationRows);
    }
    if d.n_trial() < 2 {
        push(Rule::TooFewTrialRows);
    }
    if !d.trial_rows().any(|r| r.treated) {
        push(Rule::NoTreatedTrialRows);
    }
    if !d.trial_rows().any(|r| !r.treated) {
        push(Rule::NoControlTrialRows);
    }
    out
}
