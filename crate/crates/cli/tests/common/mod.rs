#![allow(dead_code, clippy::needless_range_loop)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use xportme::{Dataset, Row};
use xportme_cli::write_stacked_csv;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub const PREMIER_COLUMNS: [&str; 7] = [
    "male",
    "age_40_49",
    "age_50_plus",
    "bmi",
    "black",
    "edu_some_college",
    "edu_college",
];

/// Synthetic stand-in for a trial stacked with an external validation study.
///
/// Trial members skew heavier, older, more often black and less educated.
/// The reporting error mean rises with BMI and is lower for black and
/// college-educated subjects, so the validation error mean is biased for the
/// trial unless reweighted.
#[derive(Debug, Clone)]
pub struct PremierFixture {
    /// Log-odds of trial membership: intercept then one per column.
    pub membership: [f64; 8],
    /// Error mean: intercept then one per column.
    pub error: [f64; 8],
    pub error_sd: f64,
    pub treatment_effect: f64,
}

impl PremierFixture {
    pub fn shifted() -> Self {
        Self {
            membership: [-4.2, -0.3, 0.4, 0.8, 0.12, 0.9, -0.2, -0.6],
            error: [-1.2, 0.25, 0.0, 0.1, 0.05, 0.3, 0.0, -0.3],
            error_sd: 0.5,
            treatment_effect: -0.4,
        }
    }

    /// Same error model, membership independent of covariates.
    pub fn unshifted() -> Self {
        let mut f = Self::shifted();
        f.membership = [0.0; 8];
        f
    }

    fn covariates(r: &mut impl Rng) -> Vec<f64> {
        let u: f64 = r.random();
        let (a40, a50) = if u < 0.3 {
            (0.0, 0.0)
        } else if u < 0.65 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let e: f64 = r.random();
        let (some, coll) = if e < 0.3 {
            (0.0, 0.0)
        } else if e < 0.6 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let bmi: f64 = Normal::new(31.0, 4.5).unwrap().sample(r);
        vec![
            f64::from(r.random::<f64>() < 0.4),
            a40,
            a50,
            (bmi * 10.0).round() / 10.0,
            f64::from(r.random::<f64>() < 0.3),
            some,
            coll,
        ]
    }

    fn linear(coefs: &[f64; 8], x: &[f64]) -> f64 {
        coefs[0] + coefs[1..].iter().zip(x).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Draw subjects until both samples are full. Trial rows first.
    pub fn draw(&self, n_val: usize, n_trial: usize, r: &mut impl Rng) -> Dataset {
        let noise = Normal::new(0.0, self.error_sd).unwrap();
        let mut trial = Vec::new();
        let mut val = Vec::new();
        while trial.len() < n_trial || val.len() < n_val {
            let x = Self::covariates(r);
            let in_trial = r.random::<f64>() < expit(Self::linear(&self.membership, &x));
            let z0 = 3.6 + 0.03 * (x[3] - 31.0) + Normal::new(0.0, 0.8).unwrap().sample(r);
            let err = Self::linear(&self.error, &x) + noise.sample(r);
            if in_trial && trial.len() < n_trial {
                let treated = r.random::<bool>();
                let z = if treated { z0 + self.treatment_effect } else { z0 };
                trial.push(Row::trial(treated, z + err, Some(z), x));
            } else if !in_trial && val.len() < n_val {
                val.push(Row::validation(z0 + err, z0, x));
            }
        }
        trial.extend(val);
        Dataset::new(trial, PREMIER_COLUMNS.map(String::from).to_vec())
    }
}

pub fn write_dataset(dir: &Path, name: &str, d: &Dataset, probs: Option<&[f64]>) -> PathBuf {
    let path = dir.join(name);
    let f = std::fs::File::create(&path).unwrap();
    write_stacked_csv(d, probs, f).unwrap();
    path
}

/// Two-sample logistic fixture on N(0,1) covariates, `theta[0]` the intercept.
pub fn logistic_fixture(theta: &[f64], n: usize, r: &mut impl Rng) -> Dataset {
    let std = Normal::new(0.0, 1.0).unwrap();
    let p = theta.len() - 1;
    let rows = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| std.sample(r)).collect();
            let eta = theta[0] + theta[1..].iter().zip(&x).map(|(t, x)| t * x).sum::<f64>();
            if r.random::<f64>() < expit(eta) {
                Row::trial(false, 0.0, None, x)
            } else {
                Row::validation(0.0, 0.0, x)
            }
        })
        .collect();
    Dataset::with_default_names(rows)
}

/// Full Newton-Raphson on the Bernoulli log-likelihood, with its own design
/// and a Gauss-Jordan solve.
pub fn newton_oracle(d: &Dataset, quad: &[usize], inter: &[(usize, usize)]) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = d
        .rows()
        .iter()
        .map(|r| {
            let x = &r.covariates;
            let mut v = vec![1.0];
            v.extend(x.iter().copied());
            v.extend(quad.iter().map(|&i| x[i] * x[i]));
            v.extend(inter.iter().map(|&(i, j)| x[i] * x[j]));
            v
        })
        .collect();
    let s: Vec<f64> = d
        .rows()
        .iter()
        .map(|r| if r.is_validation() { 0.0 } else { 1.0 })
        .collect();
    let k = rows[0].len();
    let mut theta = vec![0.0; k];
    for _ in 0..200 {
        let mut g = vec![0.0; k];
        let mut h = vec![vec![0.0; k]; k];
        for (x, &si) in rows.iter().zip(&s) {
            let eta: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
            let p = expit(eta);
            for a in 0..k {
                g[a] += x[a] * (si - p);
                for b in 0..k {
                    h[a][b] += p * (1.0 - p) * x[a] * x[b];
                }
            }
        }
        let step = gauss_jordan(h, g);
        let size = step.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (t, d) in theta.iter_mut().zip(&step) {
            *t += d;
        }
        if size < 1e-14 {
            break;
        }
    }
    theta
}

fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}
