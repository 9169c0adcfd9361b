use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::scenario::{ScenarioSpec, N_COVARIATES};
use crate::data::{SampleLabel, StackedDataset, StackedRow};
use crate::error::{Error, Result};
use crate::scalar::{expit, Scalar};

/// Finite population: covariates, true trial-membership probabilities, and the
/// realized membership indicator.
#[derive(Debug, Clone)]
pub struct Population {
    /// Row-major, `N_COVARIATES` values per member.
    pub covariates: Vec<f64>,
    pub probs: Vec<f64>,
    pub in_trial: Vec<bool>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.covariates[i * N_COVARIATES..(i + 1) * N_COVARIATES]
    }

    /// Whole population as a stacked dataset labelled by realized membership.
    /// Outcomes are zero placeholders.
    pub fn to_dataset<F: Scalar>(&self) -> StackedDataset<F> {
        let rows = (0..self.len())
            .map(|i| {
                let x = self.x(i).iter().map(|&v| F::lit(v)).collect();
                if self.in_trial[i] {
                    StackedRow::trial(false, F::zero(), None, x)
                } else {
                    StackedRow::validation(F::zero(), F::zero(), x)
                }
            })
            .collect();
        StackedDataset::with_default_names(rows)
    }
}

/// Sampled members before outcomes are drawn.
#[derive(Debug, Clone)]
pub struct SampleSkeleton {
    /// Row-major covariates: trial rows first, then validation rows.
    pub covariates: Vec<f64>,
    pub probs: Vec<f64>,
    pub samples: Vec<SampleLabel>,
}

impl SampleSkeleton {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.covariates[i * N_COVARIATES..(i + 1) * N_COVARIATES]
    }

    /// Covariate means of one sample.
    pub fn covariate_means(&self, sample: SampleLabel) -> [f64; N_COVARIATES] {
        let mut sum = [0.0; N_COVARIATES];
        let mut n = 0usize;
        for i in (0..self.len()).filter(|&i| self.samples[i] == sample) {
            for (s, v) in sum.iter_mut().zip(self.x(i)) {
                *s += v;
            }
            n += 1;
        }
        sum.map(|s| s / n as f64)
    }
}

/// Simulated stacked data with the true membership probabilities kept alongside.
#[derive(Debug, Clone)]
pub struct SimulatedData<F> {
    pub dataset: StackedDataset<F>,
    pub true_probs: Vec<F>,
}

/// Draw `population_size` members with independent standard-normal covariates,
/// membership probabilities from the scenario's true form (no intercept), and
/// Bernoulli membership.
pub fn generate_population<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Population {
    let coeffs = spec.coefficients();
    let n = spec.population_size;
    let mut covariates = Vec::with_capacity(n * N_COVARIATES);
    let mut probs = Vec::with_capacity(n);
    let mut in_trial = Vec::with_capacity(n);
    for _ in 0..n {
        let start = covariates.len();
        for _ in 0..N_COVARIATES {
            covariates.push(StandardNormal.sample(rng));
        }
        let p = expit(coeffs.membership_predictor(&covariates[start..]));
        probs.push(p);
        in_trial.push(rng.random::<f64>() < p);
    }
    Population {
        covariates,
        probs,
        in_trial,
    }
}

/// Sample `n` members without replacement from each membership stratum.
pub fn draw_samples<R: Rng + ?Sized>(
    population: &Population,
    n: usize,
    rng: &mut R,
) -> Result<SampleSkeleton> {
    let (trial, validation): (Vec<usize>, Vec<usize>) =
        (0..population.len()).partition(|&i| population.in_trial[i]);
    let mut skeleton = SampleSkeleton {
        covariates: Vec::with_capacity(2 * n * N_COVARIATES),
        probs: Vec::with_capacity(2 * n),
        samples: Vec::with_capacity(2 * n),
    };
    for (members, label, name) in [
        (&trial, SampleLabel::Trial, "trial"),
        (&validation, SampleLabel::Validation, "validation"),
    ] {
        if members.len() < n {
            return Err(Error::InsufficientStratum {
                stratum: name,
                available: members.len(),
                requested: n,
            });
        }
        let mut picked = rand::seq::index::sample(rng, members.len(), n).into_vec();
        // keep population order inside each sample
        picked.sort_unstable();
        for k in picked {
            let i = members[k];
            skeleton.covariates.extend_from_slice(population.x(i));
            skeleton.probs.push(population.probs[i]);
            skeleton.samples.push(label);
        }
    }
    Ok(skeleton)
}

/// Draw potential outcomes `Z(0) ~ N(0,1)`, `Z(1) ~ N(2,1)` and
/// `Y(a) ~ N(Z(a) + error mean(X), noise variance)`, assign treatment
/// Bernoulli(½) in the trial and 0 in the validation sample, and keep the
/// observed Y and Z on every row.
pub fn generate_outcomes<F: Scalar, R: Rng + ?Sized>(
    skeleton: &SampleSkeleton,
    spec: &ScenarioSpec,
    rng: &mut R,
) -> SimulatedData<F> {
    let coeffs = spec.coefficients();
    let noise_sd = spec.outcome_noise_var.sqrt();
    let mut rows = Vec::with_capacity(skeleton.len());
    for i in 0..skeleton.len() {
        let x = skeleton.x(i);
        let shift = coeffs.error_mean(x);
        let z0: f64 = StandardNormal.sample(rng);
        let z1 = 2.0 + Distribution::<f64>::sample(&StandardNormal, rng);
        let y0 = z0 + shift + noise_sd * Distribution::<f64>::sample(&StandardNormal, rng);
        let y1 = z1 + shift + noise_sd * Distribution::<f64>::sample(&StandardNormal, rng);
        let is_trial = skeleton.samples[i] == SampleLabel::Trial;
        let treated = is_trial && rng.random::<f64>() < 0.5;
        let (y, z) = if treated { (y1, z1) } else { (y0, z0) };
        rows.push(StackedRow {
            sample: skeleton.samples[i],
            treated,
            y_reported: F::lit(y),
            z_true: Some(F::lit(z)),
            covariates: x.iter().map(|&v| F::lit(v)).collect(),
        });
    }
    SimulatedData {
        dataset: StackedDataset::with_default_names(rows),
        true_probs: skeleton.probs.iter().map(|&p| F::lit(p)).collect(),
    }
}
