use rayon::prelude::*;
use serde::Serialize;

use super::generate::{draw_samples, generate_outcomes, generate_population};
use super::rng::{replicate_rng, scenario_seed};
use super::scenario::{Estimator, FittedModel, ModelForm, ScenarioSpec};
use crate::data::SampleLabel;
use crate::error::{Error, Result};
use crate::estimators::{naive_mu0, weighted_mu0};
use crate::membership::{asmd, dom, fit_membership, make_weights, predict_prob, FitOptions};
use crate::scalar::Scalar;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateEstimate<F> {
    pub value: F,
    pub se: F,
    pub ci_covers: bool,
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateResult<F> {
    /// Realized mean of Y − Z over trial control rows.
    pub mu0_rct_true: F,
    pub estimates: Vec<(Estimator, ReplicateEstimate<F>)>,
    pub asmd_true_probs: F,
    /// DoM of the mains-only fit against the true-form fit, when both were fitted.
    pub dom: Option<F>,
    /// `error_coeffs · (x̄_validation − x̄_trial)` over the sampled rows.
    pub analytic_bias: F,
}

impl<F: Scalar> ReplicateResult<F> {
    pub fn estimate(&self, which: Estimator) -> Option<&ReplicateEstimate<F>> {
        self.estimates.iter().find(|(e, _)| *e == which).map(|(_, r)| r)
    }
}

/// Aggregate performance of one estimator over a scenario's replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary<F> {
    pub estimator: Estimator,
    pub mean_bias: F,
    pub abs_mean_bias: F,
    /// `sd(bias) / √R`.
    pub mc_se: F,
    pub coverage: F,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult<F> {
    pub scenario: ScenarioSpec,
    pub summaries: Vec<EstimatorSummary<F>>,
    pub asmd_true_probs: F,
    pub mean_dom: Option<F>,
    pub mean_analytic_bias: F,
    pub failed_replicates: usize,
    pub first_failure: Option<String>,
}

impl<F: Scalar> ScenarioResult<F> {
    pub fn summary(&self, which: Estimator) -> Option<&EstimatorSummary<F>> {
        self.summaries.iter().find(|s| s.estimator == which)
    }
}

/// Run replicate `index` of a scenario.
pub fn run_replicate<F: Scalar>(spec: &ScenarioSpec, index: usize) -> Result<ReplicateResult<F>> {
    let mut rng = replicate_rng(spec.seed, index as u64);
    let population = generate_population(spec, &mut rng);
    let skeleton = draw_samples(&population, spec.sample_size, &mut rng)?;
    let sim = generate_outcomes::<F, _>(&skeleton, spec, &mut rng);
    let d = &sim.dataset;

    let trial_errors: Vec<F> = d
        .trial_rows()
        .filter(|r| !r.treated)
        .filter_map(|r| r.error())
        .collect();
    if trial_errors.is_empty() {
        return Err(Error::EmptyArm { arm: 0 });
    }
    let truth = stats::mean(&trial_errors);

    let record = |r: &crate::data::EstimateReport<F>| ReplicateEstimate {
        value: r.estimate,
        se: r.se.unwrap_or(F::nan()),
        ci_covers: r.covers(truth),
    };
    let mut estimates = vec![(Estimator::Naive, record(&naive_mu0(d)?))];
    let opts = FitOptions::default();
    let mut probs_by_fit = Vec::new();
    for &fitted in &spec.fitted_models {
        let model = fit_membership(d, &fitted.terms(spec.true_model), &opts)?;
        let probs = predict_prob(&model, d)?;
        let w = make_weights(&probs, d)?;
        estimates.push((Estimator::Weighted(fitted), record(&weighted_mu0(d, &w)?)));
        probs_by_fit.push((fitted, probs));
    }

    let find = |m: FittedModel| probs_by_fit.iter().find(|(f, _)| *f == m).map(|(_, p)| p);
    let dom_value = match (
        find(FittedModel::MainEffectsOnly),
        find(FittedModel::TrueForm),
    ) {
        (Some(fitted), Some(reference)) => Some(dom(fitted, reference)?),
        _ => None,
    };

    let (mut p_trial, mut p_val) = (Vec::new(), Vec::new());
    for (&p, &s) in sim.true_probs.iter().zip(&skeleton.samples) {
        match s {
            SampleLabel::Trial => p_trial.push(p),
            SampleLabel::Validation => p_val.push(p),
        }
    }
    let coeffs = spec.coefficients();
    let xv = skeleton.covariate_means(SampleLabel::Validation);
    let xt = skeleton.covariate_means(SampleLabel::Trial);
    let analytic_bias = (0..xv.len())
        .map(|j| coeffs.error_coeffs[j] * (xv[j] - xt[j]))
        .sum::<f64>();

    Ok(ReplicateResult {
        mu0_rct_true: truth,
        estimates,
        asmd_true_probs: asmd(&p_trial, &p_val)?,
        dom: dom_value,
        analytic_bias: F::lit(analytic_bias),
    })
}

fn summarize<F: Scalar>(which: Estimator, done: &[ReplicateResult<F>]) -> EstimatorSummary<F> {
    let mut bias = Vec::with_capacity(done.len());
    let mut covered = 0usize;
    for r in done {
        if let Some(e) = r.estimate(which) {
            bias.push(e.value - r.mu0_rct_true);
            covered += e.ci_covers as usize;
        }
    }
    let n = bias.len();
    let (mean_bias, mc_se, coverage) = match n {
        0 => (F::nan(), F::nan(), F::nan()),
        1 => (bias[0], F::nan(), F::from_usize_lossy(covered)),
        _ => (
            stats::mean(&bias),
            stats::sample_sd(&bias) / F::from_usize_lossy(n).sqrt(),
            F::from_usize_lossy(covered) / F::from_usize_lossy(n),
        ),
    };
    EstimatorSummary {
        estimator: which,
        mean_bias,
        abs_mean_bias: mean_bias.abs(),
        mc_se,
        coverage,
        replicates: n,
    }
}

/// Run every replicate of a scenario and aggregate bias, Monte Carlo SE, and
/// interval coverage per estimator. Replicates that fail (separation,
/// non-convergence, short strata) are excluded and counted.
pub fn run_scenario<F: Scalar>(spec: &ScenarioSpec) -> Result<ScenarioResult<F>> {
    spec.validate()?;
    let outcomes: Vec<Result<ReplicateResult<F>>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, r))
        .collect();

    let mut done = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    let mut first_failure = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => done.push(r),
            Err(e) => {
                failed += 1;
                first_failure.get_or_insert_with(|| format!("replicate {i}: {e}"));
            }
        }
    }

    let mean_of = |xs: Vec<F>| {
        if xs.is_empty() {
            F::nan()
        } else {
            stats::mean(&xs)
        }
    };
    let doms: Vec<F> = done.iter().filter_map(|r| r.dom).collect();
    Ok(ScenarioResult {
        summaries: spec
            .estimators()
            .into_iter()
            .map(|e| summarize(e, &done))
            .collect(),
        asmd_true_probs: mean_of(done.iter().map(|r| r.asmd_true_probs).collect()),
        mean_dom: (!doms.is_empty()).then(|| stats::mean(&doms)),
        mean_analytic_bias: mean_of(done.iter().map(|r| r.analytic_bias).collect()),
        failed_replicates: failed,
        first_failure,
        scenario: spec.clone(),
    })
}

/// Run scenarios on a pool of `parallelism` threads. Output order follows the
/// input, and results do not depend on the thread count.
pub fn run_grid<F: Scalar>(
    specs: &[ScenarioSpec],
    parallelism: usize,
) -> Result<Vec<Result<ScenarioResult<F>>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| specs.par_iter().map(run_scenario).collect()))
}

/// Cartesian grid of scenarios in (γ₁, γ₂, form) order, each cell seeded from
/// `base_seed` and its position.
pub fn build_grid(
    template: &ScenarioSpec,
    gamma1: &[f64],
    gamma2: &[f64],
    forms: &[ModelForm],
    base_seed: u64,
) -> Vec<ScenarioSpec> {
    let mut out = Vec::with_capacity(gamma1.len() * gamma2.len() * forms.len());
    for &g1 in gamma1 {
        for &g2 in gamma2 {
            for &form in forms {
                let idx = out.len() as u64;
                out.push(ScenarioSpec {
                    gamma1: g1,
                    gamma2: g2,
                    true_model: form,
                    seed: scenario_seed(base_seed, idx),
                    ..template.clone()
                });
            }
        }
    }
    out
}

/// ASMD of the true membership probabilities between the trial and validation
/// rows of a simulated sample.
pub fn asmd_of_true_probs<F: Scalar>(true_probs: &[F], samples: &[SampleLabel]) -> Result<F> {
    stats::same_len(true_probs.len(), samples.len(), "probabilities vs labels")?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (&p, &s) in true_probs.iter().zip(samples) {
        match s {
            SampleLabel::Trial => t.push(p),
            SampleLabel::Validation => v.push(p),
        }
    }
    asmd(&t, &v)
}
