//! Small descriptive-statistics helpers over slices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn mean<F: Scalar>(xs: &[F]) -> F {
    xs.iter().copied().sum::<F>() / F::from_usize_lossy(xs.len())
}

/// Variance with the n − 1 divisor. Requires at least two values.
pub fn sample_variance<F: Scalar>(xs: &[F]) -> F {
    let m = mean(xs);
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / F::from_usize_lossy(xs.len() - 1)
}

pub fn sample_sd<F: Scalar>(xs: &[F]) -> F {
    sample_variance(xs).sqrt()
}

fn check_weights<F: Scalar>(w: &[F]) -> Result<F> {
    let mut total = F::zero();
    for (i, &wi) in w.iter().enumerate() {
        if !(wi >= F::zero()) || !wi.is_finite() {
            return Err(Error::DegenerateWeights(format!(
                "weight {i} is {wi}, expected a finite value >= 0"
            )));
        }
        total = total + wi;
    }
    if total <= F::zero() {
        return Err(Error::DegenerateWeights("weights sum to zero".into()));
    }
    Ok(total)
}

pub fn weighted_mean<F: Scalar>(x: &[F], w: &[F]) -> Result<F> {
    same_len(x.len(), w.len(), "weights")?;
    let total = check_weights(w)?;
    Ok(x.iter().zip(w).map(|(&x, &w)| w * x).sum::<F>() / total)
}

/// Weighted covariance `Σ wᵢ(yᵢ − ȳ*)(zᵢ − z̄*) / Σ wᵢ` with weighted means ȳ*, z̄*.
pub fn weighted_covariance<F: Scalar>(y: &[F], z: &[F], w: &[F]) -> Result<F> {
    same_len(y.len(), z.len(), "z")?;
    same_len(y.len(), w.len(), "weights")?;
    let total = check_weights(w)?;
    let ybar = y.iter().zip(w).map(|(&v, &w)| w * v).sum::<F>() / total;
    let zbar = z.iter().zip(w).map(|(&v, &w)| w * v).sum::<F>() / total;
    let cross: F = y
        .iter()
        .zip(z)
        .zip(w)
        .map(|((&yi, &zi), &wi)| wi * (yi - ybar) * (zi - zbar))
        .sum();
    Ok(cross / total)
}

/// Weighted variance with the reliability-weights correction
/// `Σw(x − x̄)² / (Σw − Σw²/Σw)`; equals [`sample_variance`] for equal weights.
pub fn reliability_weighted_variance<F: Scalar>(x: &[F], w: &[F]) -> Result<F> {
    same_len(x.len(), w.len(), "weights")?;
    let total = check_weights(w)?;
    let m = x.iter().zip(w).map(|(&v, &w)| w * v).sum::<F>() / total;
    let ss: F = x.iter().zip(w).map(|(&v, &w)| w * (v - m) * (v - m)).sum();
    let sq: F = w.iter().map(|&w| w * w).sum();
    let denom = total - sq / total;
    if denom <= F::zero() {
        return Err(Error::DegenerateWeights(
            "fewer than two rows carry weight".into(),
        ));
    }
    Ok(ss / denom)
}

/// Kish effective sample size `(Σw)² / Σw²`.
pub fn effective_sample_size<F: Scalar>(w: &[F]) -> Result<F> {
    let total = check_weights(w)?;
    let sq: F = w.iter().map(|&w| w * w).sum();
    Ok(total * total / sq)
}

/// Inverse-CDF empirical quantile: the smallest order statistic `x₍ₖ₎` with
/// `k/n ≥ q`. Always returns an observed value.
pub fn quantile_inverse_cdf<F: Scalar>(xs: &[F], q: F) -> Option<F> {
    if xs.is_empty() || !(q > F::zero() && q < F::one()) {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    // k = ceil(q·n), guarded against q·n landing a hair above an integer.
    let qn = q.as_f64() * n as f64;
    let mut k = qn.ceil() as usize;
    if k > 1 && (qn - (k - 1) as f64).abs() < 1e-9 {
        k -= 1;
    }
    Some(sorted[k.clamp(1, n) - 1])
}

pub(crate) fn same_len(expected: usize, found: usize, context: &'static str) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected,
            found,
            context,
        });
    }
    Ok(())
}

/// True when every value is exactly 0 or 1.
pub fn is_binary<F: Scalar>(xs: &[F]) -> bool {
    xs.iter().all(|&x| x == F::zero() || x == F::one())
}
