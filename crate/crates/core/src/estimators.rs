//! Point estimators and bias formulas for the error mean under control and the ATE.
//!
//! Sign convention: every bias is `estimate − target`. The covariate shift `β₁`
//! is the validation mean minus the trial mean, so the naive validation error
//! mean is off by `α_x · β₁`.

use serde::Serialize;

use crate::data::{EstimateReport, StackedDataset};
use crate::error::{Error, Result};
use crate::membership::WeightSet;
use crate::scalar::Scalar;
use crate::stats;

/// Measurement-error model `Y − Z ~ N(α₀ + α₁A + α_x·X, σ_Y²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementErrorSpec<F> {
    pub alpha0: F,
    /// Extra error mean under treatment.
    pub alpha_treat: F,
    pub alpha_x: Vec<F>,
    pub sigma_y2: F,
}

impl<F: Scalar> MeasurementErrorSpec<F> {
    pub fn new(alpha0: F, alpha_treat: F, alpha_x: Vec<F>, sigma_y2: F) -> Result<Self> {
        if !(sigma_y2 >= F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "error variance must be >= 0, got {sigma_y2}"
            )));
        }
        Ok(Self {
            alpha0,
            alpha_treat,
            alpha_x,
            sigma_y2,
        })
    }
}

/// Covariate model `X = β₀ + β₁·1[S = v] + ε_X` with per-covariate variances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovariateShiftSpec<F> {
    pub beta0: Vec<F>,
    pub beta1: Vec<F>,
    pub sigma_x2: Vec<F>,
}

impl<F: Scalar> CovariateShiftSpec<F> {
    pub fn new(beta0: Vec<F>, beta1: Vec<F>, sigma_x2: Vec<F>) -> Result<Self> {
        stats::same_len(beta0.len(), beta1.len(), "beta1")?;
        stats::same_len(beta0.len(), sigma_x2.len(), "sigma_x2")?;
        if sigma_x2.iter().any(|v| !(*v >= F::zero())) {
            return Err(Error::InvalidArgument(
                "covariate variances must be >= 0".into(),
            ));
        }
        Ok(Self {
            beta0,
            beta1,
            sigma_x2,
        })
    }

    /// Shift with zero trial means and unit variances.
    pub fn from_shift(beta1: Vec<F>) -> Self {
        let p = beta1.len();
        Self {
            beta0: vec![F::zero(); p],
            beta1,
            sigma_x2: vec![F::one(); p],
        }
    }
}

fn trial_arm<F: Scalar>(d: &StackedDataset<F>, treated: bool) -> Vec<F> {
    d.trial_rows()
        .filter(|r| r.treated == treated)
        .map(|r| r.y_reported)
        .collect()
}

/// Difference in mean reported outcome between trial arms, with a Welch SE.
pub fn naive_ate<F: Scalar>(d: &StackedDataset<F>) -> Result<EstimateReport<F>> {
    let treated = trial_arm(d, true);
    let control = trial_arm(d, false);
    if treated.is_empty() {
        return Err(Error::EmptyArm { arm: 1 });
    }
    if control.is_empty() {
        return Err(Error::EmptyArm { arm: 0 });
    }
    let estimate = stats::mean(&treated) - stats::mean(&control);
    let n = F::from_usize_lossy(treated.len() + control.len());
    if treated.len() < 2 || control.len() < 2 {
        return Ok(EstimateReport::point("naive_ate", estimate, n));
    }
    let se = (stats::sample_variance(&treated) / F::from_usize_lossy(treated.len())
        + stats::sample_variance(&control) / F::from_usize_lossy(control.len()))
    .sqrt();
    Ok(EstimateReport::with_se("naive_ate", estimate, se, n))
}

fn validation_errors<F: Scalar>(d: &StackedDataset<F>) -> Result<Vec<(usize, F)>> {
    d.rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_validation())
        .map(|(i, r)| r.error().map(|e| (i, e)).ok_or(Error::MissingTruth { row: i }))
        .collect()
}

/// Unweighted mean of Y − Z over the validation sample.
pub fn naive_mu0<F: Scalar>(d: &StackedDataset<F>) -> Result<EstimateReport<F>> {
    let errors: Vec<F> = validation_errors(d)?.into_iter().map(|(_, e)| e).collect();
    if errors.is_empty() {
        return Err(Error::InvalidDataset("no validation rows".into()));
    }
    let n = F::from_usize_lossy(errors.len());
    let estimate = stats::mean(&errors);
    if errors.len() < 2 {
        return Ok(EstimateReport::point("mu0_naive", estimate, n));
    }
    let se = stats::sample_sd(&errors) / n.sqrt();
    Ok(EstimateReport::with_se("mu0_naive", estimate, se, n))
}

/// Weighted mean of Y − Z over the validation sample.
///
/// The SE is `√(var(Y*−Z*)/n)`, with the variance of the weighted difference
/// assembled from weighted (co)variances of Y and Z, and `n` the Kish effective
/// sample size of the validation weights.
pub fn weighted_mu0<F: Scalar>(
    d: &StackedDataset<F>,
    w: &WeightSet<F>,
) -> Result<EstimateReport<F>> {
    stats::same_len(d.len(), w.weights().len(), "weights vs rows")?;
    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut wv = Vec::new();
    for (i, err) in validation_errors(d)? {
        let row = &d.rows()[i];
        y.push(row.y_reported);
        z.push(row.y_reported - err);
        wv.push(w.weights()[i]);
    }
    let total = wv.iter().copied().sum::<F>();
    let estimate = y
        .iter()
        .zip(&z)
        .zip(&wv)
        .map(|((&y, &z), &w)| w * (y - z))
        .sum::<F>()
        / total;
    // weighted_covariance rejects negative or all-zero weights
    let var_y = stats::weighted_covariance(&y, &y, &wv)?;
    let var_z = stats::weighted_covariance(&z, &z, &wv)?;
    let cov = stats::weighted_covariance(&y, &z, &wv)?;
    let var_diff = (var_y + var_z - (cov + cov)).max(F::zero());
    let n_eff = stats::effective_sample_size(&wv)?;
    let se = (var_diff / n_eff).sqrt();
    Ok(EstimateReport::with_se("mu0_weighted", estimate, se, n_eff))
}

/// Bias of the naive ATE under the error model: the treatment term `α₁`.
pub fn analytic_ate_bias<F: Scalar>(spec: &MeasurementErrorSpec<F>) -> F {
    spec.alpha_treat
}

/// Transportability bias of the naive error-mean estimate: `α_x · β₁`.
pub fn analytic_mu0_bias<F: Scalar>(
    spec: &MeasurementErrorSpec<F>,
    shift: &CovariateShiftSpec<F>,
) -> Result<F> {
    stats::same_len(spec.alpha_x.len(), shift.beta1.len(), "alpha_x vs beta1")?;
    Ok(spec
        .alpha_x
        .iter()
        .zip(&shift.beta1)
        .map(|(&a, &b)| a * b)
        .sum())
}

/// One point of the sensitivity sweep over the assumed treatment-arm error mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityPoint<F> {
    pub mu1: F,
    pub report: EstimateReport<F>,
}

/// ATE corrected for differential error, `naive_ate − (μ₁ − μ̂₀)`, for each assumed μ₁.
///
/// μ₁ is a fixed sensitivity parameter; the SE adds the naive ATE and μ̂₀ SEs in
/// quadrature and is omitted if either is missing.
pub fn corrected_ate<F: Scalar>(
    d: &StackedDataset<F>,
    mu0_hat: &EstimateReport<F>,
    mu1_grid: &[F],
) -> Result<Vec<SensitivityPoint<F>>> {
    if mu1_grid.is_empty() {
        return Err(Error::InvalidArgument("mu1 grid is empty".into()));
    }
    let ate = naive_ate(d)?;
    let se = match (ate.se, mu0_hat.se) {
        (Some(a), Some(b)) => Some((a * a + b * b).sqrt()),
        _ => None,
    };
    Ok(mu1_grid
        .iter()
        .map(|&mu1| {
            let estimate = ate.estimate - (mu1 - mu0_hat.estimate);
            let report = match se {
                Some(se) => EstimateReport::with_se("corrected_ate", estimate, se, ate.n_effective),
                None => EstimateReport::point("corrected_ate", estimate, ate.n_effective),
            };
            SensitivityPoint { mu1, report }
        })
        .collect())
}

/// `μ̂₀ − mean(Y − Z | trial, control)`; needs Z observed on trial control rows.
pub fn empirical_mu0_bias<F: Scalar>(
    d: &StackedDataset<F>,
    mu0_hat: &EstimateReport<F>,
) -> Result<F> {
    let mut errors = Vec::new();
    for (i, row) in d.rows().iter().enumerate() {
        if !row.is_validation() && !row.treated {
            errors.push(row.error().ok_or(Error::MissingTruth { row: i })?);
        }
    }
    if errors.is_empty() {
        return Err(Error::EmptyArm { arm: 0 });
    }
    Ok(mu0_hat.estimate - stats::mean(&errors))
}
