use serde::Serialize;

use super::weights::WeightSet;
use crate::data::{SampleLabel, StackedDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats;

/// Pooling convention used for every ASMD in this crate.
pub const ASMD_CONVENTION: &str =
    "pooled_sd = sqrt((var_a + var_b) / 2); sample (n-1) variances, p(1-p) for 0/1 columns";

struct Moments<F> {
    mean: F,
    var: F,
}

fn moments<F: Scalar>(x: &[F], w: Option<&[F]>) -> Result<Moments<F>> {
    match w {
        None => {
            let mean = stats::mean(x);
            let var = if stats::is_binary(x) {
                mean * (F::one() - mean)
            } else if x.len() > 1 {
                stats::sample_variance(x)
            } else {
                F::zero()
            };
            Ok(Moments { mean, var })
        }
        Some(w) => {
            let mean = stats::weighted_mean(x, w)?;
            let var = if stats::is_binary(x) {
                mean * (F::one() - mean)
            } else {
                stats::reliability_weighted_variance(x, w).unwrap_or(F::zero())
            };
            Ok(Moments { mean, var })
        }
    }
}

fn standardized_gap<F: Scalar>(a: &Moments<F>, b: &Moments<F>) -> Result<F> {
    let gap = (a.mean - b.mean).abs();
    let pooled = ((a.var + b.var) / F::lit(2.0)).sqrt();
    if pooled > F::zero() {
        Ok(gap / pooled)
    } else if gap == F::zero() {
        Ok(F::zero())
    } else {
        Err(Error::ZeroSpread(format!(
            "means differ by {gap} but both samples are constant"
        )))
    }
}

/// Absolute standardized mean difference between two samples.
///
/// Pooled SD is `√((var(a) + var(b)) / 2)`; see [`ASMD_CONVENTION`].
pub fn asmd<F: Scalar>(a: &[F], b: &[F]) -> Result<F> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("asmd needs two nonempty samples".into()));
    }
    standardized_gap(&moments(a, None)?, &moments(b, None)?)
}

/// ASMD of membership probabilities between trial and validation rows.
pub fn asmd_of_probabilities<F: Scalar>(d: &StackedDataset<F>, probs: &[F]) -> Result<F> {
    stats::same_len(d.len(), probs.len(), "probabilities vs rows")?;
    let (mut trial, mut val) = (Vec::new(), Vec::new());
    for (row, &p) in d.rows().iter().zip(probs) {
        if row.is_validation() {
            val.push(p);
        } else {
            trial.push(p);
        }
    }
    asmd(&trial, &val)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceRow<F> {
    pub covariate: String,
    pub trial_mean: F,
    pub validation_mean: F,
    /// Infinite when both samples are constant at different values.
    pub asmd: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceTable<F> {
    pub weighted: bool,
    pub convention: &'static str,
    pub rows: Vec<BalanceRow<F>>,
}

/// Per-covariate balance between the trial (unweighted) and the validation
/// sample (weighted when `w` is given).
pub fn balance_table<F: Scalar>(
    d: &StackedDataset<F>,
    w: Option<&WeightSet<F>>,
) -> BalanceTable<F> {
    let val_w = w.map(|w| {
        d.rows()
            .iter()
            .zip(w.weights())
            .filter(|(r, _)| r.is_validation())
            .map(|(_, &w)| w)
            .collect::<Vec<_>>()
    });
    let rows = d
        .covariate_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let t = d.covariate_column(j, SampleLabel::Trial);
            let v = d.covariate_column(j, SampleLabel::Validation);
            let nan = F::nan();
            let tm = if t.is_empty() { None } else { moments(&t, None).ok() };
            let vm = if v.is_empty() {
                None
            } else {
                moments(&v, val_w.as_deref()).ok()
            };
            let asmd = match (&tm, &vm) {
                (Some(a), Some(b)) => standardized_gap(a, b).unwrap_or(F::infinity()),
                _ => nan,
            };
            BalanceRow {
                covariate: name.clone(),
                trial_mean: tm.map_or(nan, |m| m.mean),
                validation_mean: vm.map_or(nan, |m| m.mean),
                asmd,
            }
        })
        .collect();
    BalanceTable {
        weighted: w.is_some(),
        convention: ASMD_CONVENTION,
        rows,
    }
}

/// Degree of misspecification: mean of `|π̂ᵢ − π̂ᵢᶜ|` scaled by the sample SD
/// of the reference (true-model) probabilities `π̂ᶜ`.
pub fn dom<F: Scalar>(pi_fitted: &[F], pi_true: &[F]) -> Result<F> {
    stats::same_len(pi_true.len(), pi_fitted.len(), "fitted vs true probabilities")?;
    if pi_true.len() < 2 {
        return Err(Error::ZeroSpread("need at least two probabilities".into()));
    }
    let sd = stats::sample_sd(pi_true);
    if !(sd > F::zero()) {
        return Err(Error::ZeroSpread(
            "reference probabilities have zero standard deviation".into(),
        ));
    }
    let mean_gap = pi_fitted
        .iter()
        .zip(pi_true)
        .map(|(&a, &b)| (a - b).abs())
        .sum::<F>()
        / F::from_usize_lossy(pi_true.len());
    Ok(mean_gap / sd)
}
