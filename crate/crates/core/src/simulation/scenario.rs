use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::membership::{Term, TermSet};

/// Number of covariates in the simulated population.
pub const N_COVARIATES: usize = 4;

/// Base membership coefficients over X₁..X₄, in units of γ₁.
const MEMBERSHIP_BASE: [f64; N_COVARIATES] = [1.0, 0.0, 0.5, 2.0];
/// Base error coefficients over X₁..X₄, in units of γ₂.
const ERROR_BASE: [f64; N_COVARIATES] = [0.0, 1.0, 2.0, 0.5];

/// True membership-model form, numbered 1 through 7. Every form has the four
/// main effects; forms 2–7 add quadratic and/or interaction terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ModelForm(u8);

impl ModelForm {
    pub const ALL: [ModelForm; 7] = [
        ModelForm(1),
        ModelForm(2),
        ModelForm(3),
        ModelForm(4),
        ModelForm(5),
        ModelForm(6),
        ModelForm(7),
    ];

    pub fn new(index: u8) -> Result<Self> {
        if (1..=7).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::InvalidArgument(format!(
                "membership model form must be 1..=7, got {index}"
            )))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Terms of the form, with an intercept (as fitted).
    pub fn terms(self) -> TermSet {
        let mains = TermSet::main_effects(N_COVARIATES);
        // covariate indices are zero-based: X₃ is 2, X₄ is 3
        match self.0 {
            1 => mains,
            2 => mains.with_quadratic(2),
            3 => mains.with_quadratic(3),
            4 => mains.with_interaction(2, 3),
            5 => mains.with_interaction(2, 3).with_quadratic(2).with_quadratic(3),
            6 => mains.with_interaction(0, 3),
            7 => mains.with_interaction(0, 2),
            _ => unreachable!("validated in ModelForm::new"),
        }
    }
}

impl TryFrom<u8> for ModelForm {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ModelForm> for u8 {
    fn from(m: ModelForm) -> u8 {
        m.0
    }
}

impl fmt::Display for ModelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Membership model fitted in each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FittedModel {
    TrueForm,
    MainEffectsOnly,
}

impl FittedModel {
    pub fn terms(self, form: ModelForm) -> TermSet {
        match self {
            FittedModel::TrueForm => form.terms(),
            FittedModel::MainEffectsOnly => TermSet::main_effects(N_COVARIATES),
        }
    }
}

/// Estimator rows reported for each scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    Naive,
    Weighted(FittedModel),
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Naive => "naive",
            Estimator::Weighted(FittedModel::TrueForm) => "weighted_true",
            Estimator::Weighted(FittedModel::MainEffectsOnly) => "weighted_misspecified",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Coefficients of the generating models for one (γ₁, γ₂, form) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    /// Membership terms (no intercept), in canonical column order.
    pub membership_terms: Vec<Term>,
    pub membership_coeffs: Vec<f64>,
    /// Error-mean coefficients on X₁..X₄.
    pub error_coeffs: [f64; N_COVARIATES],
}

impl CoefficientTable {
    /// Quadratic terms get half their covariate's coefficient; interactions get
    /// the mean of the two covariates' coefficients.
    pub fn new(gamma1: f64, gamma2: f64, form: ModelForm) -> Self {
        let base = MEMBERSHIP_BASE.map(|b| b * gamma1);
        let membership_terms = form.terms().without_intercept().terms();
        let membership_coeffs = membership_terms
            .iter()
            .map(|t| match *t {
                Term::Intercept => 0.0,
                Term::Main(i) => base[i],
                Term::Quadratic(i) => 0.5 * base[i],
                Term::Interaction(i, j) => 0.5 * (base[i] + base[j]),
            })
            .collect();
        Self {
            membership_terms,
            membership_coeffs,
            error_coeffs: ERROR_BASE.map(|b| b * gamma2),
        }
    }

    pub fn membership_predictor(&self, x: &[f64]) -> f64 {
        self.membership_terms
            .iter()
            .zip(&self.membership_coeffs)
            .map(|(t, c)| {
                c * match *t {
                    Term::Intercept => 1.0,
                    Term::Main(i) => x[i],
                    Term::Quadratic(i) => x[i] * x[i],
                    Term::Interaction(i, j) => x[i] * x[j],
                }
            })
            .sum()
    }

    pub fn error_mean(&self, x: &[f64]) -> f64 {
        self.error_coeffs.iter().zip(x).map(|(a, x)| a * x).sum()
    }
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub gamma1: f64,
    pub gamma2: f64,
    pub true_model: ModelForm,
    pub fitted_models: Vec<FittedModel>,
    pub population_size: usize,
    /// Rows drawn from each sample.
    pub sample_size: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Variance of the reported-outcome noise around `Z(a) + error mean`.
    pub outcome_noise_var: f64,
}

impl ScenarioSpec {
    pub const DESK_POPULATION: usize = 100_000;
    pub const FULL_POPULATION: usize = 1_000_000;

    pub fn new(gamma1: f64, gamma2: f64, true_model: ModelForm) -> Self {
        Self {
            gamma1,
            gamma2,
            true_model,
            fitted_models: vec![FittedModel::TrueForm, FittedModel::MainEffectsOnly],
            population_size: Self::DESK_POPULATION,
            sample_size: 1000,
            replicates: 1000,
            seed: 0,
            outcome_noise_var: 1.5,
        }
    }

    pub fn with_sizes(mut self, population: usize, sample: usize, replicates: usize) -> Self {
        self.population_size = population;
        self.sample_size = sample;
        self.replicates = replicates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..=1.0).contains(&self.gamma1) || !(0.0..=1.0).contains(&self.gamma2) {
            return bad(format!(
                "gamma values must lie in [0, 1], got ({}, {})",
                self.gamma1, self.gamma2
            ));
        }
        if self.sample_size < 2 || self.replicates == 0 {
            return bad("sample size must be >= 2 and replicates >= 1".into());
        }
        if self.population_size < 2 * self.sample_size {
            return bad(format!(
                "population of {} cannot supply two samples of {}",
                self.population_size, self.sample_size
            ));
        }
        if !(self.outcome_noise_var >= 0.0) {
            return bad("outcome noise variance must be >= 0".into());
        }
        Ok(())
    }

    pub fn coefficients(&self) -> CoefficientTable {
        CoefficientTable::new(self.gamma1, self.gamma2, self.true_model)
    }

    pub fn estimators(&self) -> Vec<Estimator> {
        std::iter::once(Estimator::Naive)
            .chain(self.fitted_models.iter().map(|&m| Estimator::Weighted(m)))
            .collect()
    }
}

/// γ values 0, 0.2, …, 1.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..=5).map(|i| f64::from(i) * 0.2).collect()
}
