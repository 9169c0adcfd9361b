use serde::Serialize;

use super::design::{build_design, DesignMatrix, TermSet};
use crate::data::StackedDataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::scalar::{expit, Scalar};

const MAX_HALVINGS: usize = 30;
const EXTREME_PROB: f64 = 1e-10;
const DIVERGENT_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions<F> {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the score `Xᵗ(s − p̂)`.
    pub tol: F,
}

impl<F: Scalar> Default for FitOptions<F> {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: F::lit(1e-8),
        }
    }
}

/// Logistic model of trial membership, `logit P(S = rct | X) = θᵗ x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipModel<F> {
    pub terms: TermSet,
    pub column_names: Vec<String>,
    pub theta: Vec<F>,
    /// Model-based standard errors, `√diag((XᵗWX)⁻¹)` at the solution.
    pub std_errors: Vec<F>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: F,
    /// Log-likelihood at the start and after every accepted step.
    pub log_likelihood_trace: Vec<F>,
}

/// Bernoulli log-likelihood `Σ sᵢηᵢ − log(1 + e^ηᵢ)`.
pub fn log_likelihood<F: Scalar>(eta: &[F], s: &[F]) -> F {
    eta.iter()
        .zip(s)
        .map(|(&e, &s)| {
            // log(1 + e^η) without overflow
            let softplus = if e > F::zero() {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            s * e - softplus
        })
        .sum()
}

fn score<F: Scalar>(x: &DesignMatrix<F>, s: &[F], p: &[F]) -> Vec<F> {
    let mut g = vec![F::zero(); x.n_cols];
    for i in 0..x.n_rows {
        let r = s[i] - p[i];
        for (gj, &xij) in g.iter_mut().zip(x.row(i)) {
            *gj = *gj + xij * r;
        }
    }
    g
}

fn information<F: Scalar>(x: &DesignMatrix<F>, p: &[F]) -> Vec<F> {
    let k = x.n_cols;
    let mut h = vec![F::zero(); k * k];
    for i in 0..x.n_rows {
        let w = p[i] * (F::one() - p[i]);
        let row = x.row(i);
        for a in 0..k {
            let wa = w * row[a];
            for b in 0..=a {
                h[a * k + b] = h[a * k + b] + wa * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            h[b * k + a] = h[a * k + b];
        }
    }
    h
}

fn max_abs<F: Scalar>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
}

fn check_separation<F: Scalar>(
    s: &[F],
    p: &[F],
    theta: &[F],
    iterations: usize,
) -> Result<()> {
    let half = F::lit(0.5);
    let perfect = s
        .iter()
        .zip(p)
        .all(|(&si, &pi)| if si == F::one() { pi > half } else { pi < half });
    if perfect {
        // the hyperplane η = 0 splits the samples, so no finite MLE exists
        return Err(Error::SeparationDetected {
            iterations,
            detail: "the fitted linear predictor classifies every row correctly".into(),
        });
    }
    let eps = F::lit(EXTREME_PROB);
    let one = F::one();
    let class_fit = |label: F| {
        let mut any = false;
        let all = s.iter().zip(p).filter(|(&si, _)| si == label).all(|(_, &pi)| {
            any = true;
            (pi - label).abs() <= eps
        });
        any && all
    };
    if class_fit(one) || class_fit(F::zero()) {
        return Err(Error::SeparationDetected {
            iterations,
            detail: "every row of one sample is fitted with probability within 1e-10 of its label"
                .into(),
        });
    }
    let extreme = p.iter().any(|&pi| pi < eps || pi > one - eps);
    let norm = theta.iter().map(|&t| t * t).sum::<F>().sqrt();
    if extreme && norm > F::lit(DIVERGENT_NORM) {
        return Err(Error::SeparationDetected {
            iterations,
            detail: format!("coefficient norm {norm} with extreme fitted probabilities"),
        });
    }
    Ok(())
}

/// Fit a logistic regression of `1[S = rct]` on the design by iteratively
/// reweighted least squares, halving any step that lowers the likelihood.
pub fn fit_membership<F: Scalar>(
    d: &StackedDataset<F>,
    terms: &TermSet,
    opts: &FitOptions<F>,
) -> Result<MembershipModel<F>> {
    let n_trial = d.n_trial();
    if n_trial == 0 || n_trial == d.len() {
        return Err(Error::InvalidDataset(
            "membership fitting needs rows from both samples".into(),
        ));
    }
    let x = build_design(d, terms)?;
    let s: Vec<F> = d
        .rows()
        .iter()
        .map(|r| if r.is_validation() { F::zero() } else { F::one() })
        .collect();
    fit_design(&x, &s, terms, opts)
}

pub(crate) fn fit_design<F: Scalar>(
    x: &DesignMatrix<F>,
    s: &[F],
    terms: &TermSet,
    opts: &FitOptions<F>,
) -> Result<MembershipModel<F>> {
    let k = x.n_cols;
    let rank_tol = F::epsilon().sqrt() * F::lit(1e-3);
    let mut theta = vec![F::zero(); k];
    let mut eta = x.mul_vec(&theta);
    let mut ll = log_likelihood(&eta, s);
    let mut trace = vec![ll];

    let mut iterations = 0;
    loop {
        let p: Vec<F> = eta.iter().map(|&e| expit(e)).collect();
        let g = score(x, s, &p);
        let gnorm = max_abs(&g);
        if iterations > 0 {
            check_separation(s, &p, &theta, iterations)?;
        }
        if gnorm <= opts.tol {
            let chol = Cholesky::factor(&information(x, &p), k, rank_tol)?;
            let std_errors = chol.inverse_diagonal().into_iter().map(|v| v.sqrt()).collect();
            return Ok(MembershipModel {
                terms: terms.clone(),
                column_names: x.column_names.clone(),
                theta,
                std_errors,
                converged: true,
                iterations,
                final_gradient_norm: gnorm,
                log_likelihood_trace: trace,
            });
        }
        if iterations == opts.max_iter {
            let extreme = p
                .iter()
                .any(|&pi| pi < F::lit(EXTREME_PROB) || pi > F::one() - F::lit(EXTREME_PROB));
            if extreme {
                return Err(Error::SeparationDetected {
                    iterations,
                    detail: "iteration cap reached with extreme fitted probabilities".into(),
                });
            }
            return Err(Error::NotConverged {
                iterations,
                score_norm: gnorm.as_f64(),
            });
        }

        let chol = Cholesky::factor(&information(x, &p), k, rank_tol)?;
        let step = chol.solve(&g);
        let slack = F::lit(1e-12) * (F::one() + ll.abs());
        let mut t = F::one();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<F> = theta.iter().zip(&step).map(|(&a, &b)| a + t * b).collect();
            let cand_eta = x.mul_vec(&cand);
            let cand_ll = log_likelihood(&cand_eta, s);
            if cand_ll >= ll - slack {
                accepted = Some((cand, cand_eta, cand_ll));
                break;
            }
            t = t / F::lit(2.0);
        }
        let Some((cand, cand_eta, cand_ll)) = accepted else {
            return Err(Error::NotConverged {
                iterations,
                score_norm: gnorm.as_f64(),
            });
        };
        theta = cand;
        eta = cand_eta;
        ll = cand_ll;
        trace.push(ll);
        iterations += 1;
    }
}

/// Fitted probabilities of trial membership for every row, clamped into
/// `[ε, 1 − ε]` with ε the scalar's machine epsilon.
pub fn predict_prob<F: Scalar>(m: &MembershipModel<F>, d: &StackedDataset<F>) -> Result<Vec<F>> {
    let x = build_design(d, &m.terms)?;
    if x.n_cols != m.theta.len() {
        return Err(Error::DimensionMismatch {
            expected: m.theta.len(),
            found: x.n_cols,
            context: "design columns vs coefficients",
        });
    }
    Ok(probabilities(&x, &m.theta))
}

pub(crate) fn probabilities<F: Scalar>(x: &DesignMatrix<F>, theta: &[F]) -> Vec<F> {
    let lo = F::epsilon();
    let hi = F::one() - F::epsilon();
    x.mul_vec(theta)
        .into_iter()
        .map(|e| expit(e).max(lo).min(hi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::StackedRow;

    fn rows(points: &[(bool, f64)]) -> StackedDataset<f64> {
        StackedDataset::with_default_names(
            points
                .iter()
                .map(|&(trial, x)| {
                    if trial {
                        StackedRow::trial(false, 0.0, None, vec![x])
                    } else {
                        StackedRow::validation(0.0, 0.0, vec![x])
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn intercept_only_recovers_logit_of_share() {
        let d = rows(&[(true, 0.0), (true, 1.0), (true, 2.0), (false, 0.5)]);
        let m = fit_membership(&d, &TermSet::main_effects(0), &FitOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.theta[0] - 3.0_f64.ln()).abs() < 1e-10);
        let p = predict_prob(&m, &d).unwrap();
        assert!(p.iter().all(|&p| (p - 0.75).abs() < 1e-10));
    }

    #[test]
    fn complete_separation_is_reported() {
        let d = rows(&[(true, 1.0), (true, 2.0), (false, -1.0), (false, -2.0)]);
        let err = fit_membership(&d, &TermSet::main_effects(1), &FitOptions::default());
        assert!(matches!(err, Err(Error::SeparationDetected { .. })), "{err:?}");
    }

    #[test]
    fn collinear_design_is_rank_deficient() {
        let d = StackedDataset::with_default_names(vec![
            StackedRow::trial(false, 0.0, None, vec![1.0, 2.0]),
            StackedRow::trial(false, 0.0, None, vec![2.0, 4.0]),
            StackedRow::validation(0.0, 0.0, vec![3.0, 6.0]),
            StackedRow::validation(0.0, 0.0, vec![1.5, 3.0]),
            StackedRow::trial(true, 0.0, None, vec![0.5, 1.0]),
        ]);
        let err = fit_membership(&d, &TermSet::main_effects(2), &FitOptions::default());
        assert!(matches!(err, Err(Error::RankDeficient { .. })), "{err:?}");
    }

    #[test]
    fn single_sample_is_rejected() {
        let d = rows(&[(true, 0.0), (true, 1.0)]);
        assert!(fit_membership(&d, &TermSet::main_effects(1), &FitOptions::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let d = rows(&[(true, 0.0), (true, 1.0), (false, 0.3), (true, -1.0), (false, 2.0)]);
        let opts = FitOptions {
            max_iter: 1,
            tol: 1e-14,
        };
        let err = fit_membership(&d, &TermSet::main_effects(1), &opts);
        assert!(matches!(err, Err(Error::NotConverged { iterations: 1, .. })), "{err:?}");
    }

    #[test]
    fn predict_with_zero_theta_is_half() {
        let d = rows(&[(true, 0.3), (false, -7.0)]);
        let m = MembershipModel {
            terms: TermSet::main_effects(1),
            column_names: vec![],
            theta: vec![0.0, 0.0],
            std_errors: vec![],
            converged: true,
            iterations: 0,
            final_gradient_norm: 0.0,
            log_likelihood_trace: vec![],
        };
        assert_eq!(predict_prob(&m, &d).unwrap(), vec![0.5, 0.5]);
        let m3 = MembershipModel {
            theta: vec![0.0, 3.0_f64.ln()],
            terms: TermSet::main_effects(1),
            ..m.clone()
        };
        let d1 = rows(&[(true, 1.0)]);
        assert!((predict_prob(&m3, &d1).unwrap()[0] - 0.75).abs() < 1e-15);
        let bad = MembershipModel {
            theta: vec![0.0],
            ..m
        };
        assert!(matches!(
            predict_prob(&bad, &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let d: StackedDataset<f32> = StackedDataset::with_default_names(
            [(1, 0.1_f32), (1, 0.9), (0, 0.2), (1, 0.5), (0, -0.4), (0, 0.3)]
                .iter()
                .map(|&(s, x)| {
                    if s == 1 {
                        StackedRow::trial(false, 0.0, None, vec![x])
                    } else {
                        StackedRow::validation(0.0, 0.0, vec![x])
                    }
                })
                .collect(),
        );
        let opts = FitOptions {
            max_iter: 50,
            tol: 1e-4_f32,
        };
        let m = fit_membership(&d, &TermSet::main_effects(1), &opts).unwrap();
        assert!(m.converged && m.theta[1] > 0.0);
    }
}
