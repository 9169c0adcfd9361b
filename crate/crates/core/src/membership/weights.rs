use serde::Serialize;

use crate::data::StackedDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats;

/// Quantile convention used by [`trim_weights`].
pub const QUANTILE_RULE: &str = "inverse_cdf";

/// Per-row transport weights aligned with a dataset.
///
/// Trial rows always carry weight 0 and validation rows a finite weight ≥ 0;
/// every constructor enforces this.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSet<F> {
    weights: Vec<F>,
    validation: Vec<bool>,
    trimmed: bool,
    trim_threshold: Option<F>,
    trim_quantile: Option<F>,
}

impl<F: Scalar> WeightSet<F> {
    /// Validation weights taken from `weights`; entries on trial rows must be 0.
    pub fn new(d: &StackedDataset<F>, weights: Vec<F>) -> Result<Self> {
        stats::same_len(d.len(), weights.len(), "weights vs rows")?;
        for (i, (row, &w)) in d.rows().iter().zip(&weights).enumerate() {
            if !(w >= F::zero()) || !w.is_finite() {
                return Err(Error::DegenerateWeights(format!("row {i}: weight {w}")));
            }
            if !row.is_validation() && w != F::zero() {
                return Err(Error::DegenerateWeights(format!(
                    "row {i}: trial rows must have weight 0, got {w}"
                )));
            }
        }
        Ok(Self {
            weights,
            validation: d.rows().iter().map(|r| r.is_validation()).collect(),
            trimmed: false,
            trim_threshold: None,
            trim_quantile: None,
        })
    }

    /// Weight 1 on every validation row.
    pub fn uniform(d: &StackedDataset<F>) -> Self {
        let w = d
            .rows()
            .iter()
            .map(|r| if r.is_validation() { F::one() } else { F::zero() })
            .collect();
        Self::new(d, w).expect("uniform weights satisfy the invariants")
    }

    #[cfg(test)]
    pub(crate) fn from_raw(weights: Vec<F>) -> Self {
        let validation = weights.iter().map(|&w| w != F::zero()).collect();
        Self {
            weights,
            validation,
            trimmed: false,
            trim_threshold: None,
            trim_quantile: None,
        }
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn validation_weights(&self) -> Vec<F> {
        self.weights
            .iter()
            .zip(&self.validation)
            .filter(|(_, &v)| v)
            .map(|(&w, _)| w)
            .collect()
    }

    pub fn trimmed(&self) -> bool {
        self.trimmed
    }

    pub fn trim_threshold(&self) -> Option<F> {
        self.trim_threshold
    }

    pub fn trim_quantile(&self) -> Option<F> {
        self.trim_quantile
    }

    pub fn max_weight(&self) -> F {
        self.weights.iter().copied().fold(F::zero(), F::max)
    }

    pub fn effective_sample_size(&self) -> Result<F> {
        stats::effective_sample_size(&self.validation_weights())
    }
}

/// Inverse-odds weights `e/(1 − e)` for validation rows, 0 for trial rows.
pub fn make_weights<F: Scalar>(probs: &[F], d: &StackedDataset<F>) -> Result<WeightSet<F>> {
    stats::same_len(d.len(), probs.len(), "probabilities vs rows")?;
    let mut w = Vec::with_capacity(probs.len());
    for (i, (&e, row)) in probs.iter().zip(d.rows()).enumerate() {
        if !(e > F::zero() && e < F::one()) {
            return Err(Error::ProbabilityOutOfRange {
                row: i,
                value: e.as_f64(),
            });
        }
        w.push(if row.is_validation() {
            e / (F::one() - e)
        } else {
            F::zero()
        });
    }
    WeightSet::new(d, w)
}

/// Cap validation weights above the `upper_quantile` quantile of the
/// validation weights at that quantile. Trial zeros are untouched.
///
/// The quantile is the inverse-CDF order statistic (see [`QUANTILE_RULE`]),
/// so trimming an already trimmed set at the same level changes nothing.
pub fn trim_weights<F: Scalar>(w: &WeightSet<F>, upper_quantile: F) -> Result<WeightSet<F>> {
    if !(upper_quantile > F::zero() && upper_quantile < F::one()) {
        return Err(Error::InvalidArgument(format!(
            "trim quantile must lie in (0, 1), got {upper_quantile}"
        )));
    }
    let vals = w.validation_weights();
    let threshold = stats::quantile_inverse_cdf(&vals, upper_quantile)
        .ok_or_else(|| Error::DegenerateWeights("no validation rows to trim".into()))?;
    let weights = w
        .weights
        .iter()
        .zip(&w.validation)
        .map(|(&x, &v)| if v && x > threshold { threshold } else { x })
        .collect();
    Ok(WeightSet {
        weights,
        validation: w.validation.clone(),
        trimmed: true,
        trim_threshold: Some(threshold),
        trim_quantile: Some(upper_quantile),
    })
}
