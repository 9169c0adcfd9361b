#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use xportme::{Dataset, Row};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stacked data from a one-covariate-per-column error model: in the trial
/// `X ~ N(β₀, σ²)`, in the validation sample `X ~ N(β₀ + β₁, σ²)`, and
/// `Y − Z ~ N(α₀ + α₁A + α_x·X, σ_Y²)`.
pub struct ErrorModelFixture {
    pub alpha0: f64,
    pub alpha_treat: f64,
    pub alpha_x: Vec<f64>,
    pub sigma_y: f64,
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
}

impl ErrorModelFixture {
    pub fn draw(&self, n_val: usize, n_trial: usize, r: &mut impl Rng) -> Dataset {
        let p = self.alpha_x.len();
        let std = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::with_capacity(n_val + n_trial);
        for i in 0..(n_val + n_trial) {
            let validation = i < n_val;
            let x: Vec<f64> = (0..p)
                .map(|j| {
                    self.beta0[j] + if validation { self.beta1[j] } else { 0.0 } + std.sample(r)
                })
                .collect();
            let treated = !validation && r.random::<bool>();
            let z = std.sample(r) + if treated { 2.0 } else { 0.0 };
            let err = self.alpha0
                + if treated { self.alpha_treat } else { 0.0 }
                + self.alpha_x.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>()
                + self.sigma_y * std.sample(r);
            rows.push(if validation {
                Row::validation(z + err, z, x)
            } else {
                Row::trial(treated, z + err, Some(z), x)
            });
        }
        Dataset::with_default_names(rows)
    }

    /// Error mean under control in the trial population.
    pub fn mu0_rct(&self) -> f64 {
        self.alpha0 + self.alpha_x.iter().zip(&self.beta0).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Two-sample logistic fixture: covariates N(0,1), membership from `theta`
/// (first entry intercept) on main effects.
pub fn logistic_fixture(theta: &[f64], n: usize, r: &mut impl Rng) -> Dataset {
    let std = Normal::new(0.0, 1.0).unwrap();
    let p = theta.len() - 1;
    let rows = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| std.sample(r)).collect();
            let eta = theta[0] + theta[1..].iter().zip(&x).map(|(t, x)| t * x).sum::<f64>();
            let prob = 1.0 / (1.0 + (-eta).exp());
            if r.random::<f64>() < prob {
                Row::trial(false, 0.0, None, x)
            } else {
                Row::validation(0.0, 0.0, x)
            }
        })
        .collect();
    Dataset::with_default_names(rows)
}
