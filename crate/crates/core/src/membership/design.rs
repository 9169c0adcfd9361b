use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::data::StackedDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One column of the membership design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    Intercept,
    Main(usize),
    Quadratic(usize),
    /// Product of two distinct covariates, stored with the smaller index first.
    Interaction(usize, usize),
}

impl Term {
    fn eval<F: Scalar>(self, x: &[F]) -> F {
        match self {
            Term::Intercept => F::one(),
            Term::Main(i) => x[i],
            Term::Quadratic(i) => x[i] * x[i],
            Term::Interaction(i, j) => x[i] * x[j],
        }
    }

    pub fn name(self, covariates: &[String]) -> String {
        let n = |i: usize| {
            covariates
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("x{}", i + 1))
        };
        match self {
            Term::Intercept => "(intercept)".into(),
            Term::Main(i) => n(i),
            Term::Quadratic(i) => format!("{}^2", n(i)),
            Term::Interaction(i, j) => format!("{}:{}", n(i), n(j)),
        }
    }
}

/// Set of terms in a membership model. Column order is fixed: intercept,
/// main effects, quadratics, then interactions, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermSet {
    pub main_effects: Vec<usize>,
    pub quadratics: Vec<usize>,
    pub interactions: Vec<(usize, usize)>,
    pub include_intercept: bool,
}

impl TermSet {
    /// Intercept plus a main effect for each of the first `p` covariates.
    pub fn main_effects(p: usize) -> Self {
        Self {
            main_effects: (0..p).collect(),
            quadratics: Vec::new(),
            interactions: Vec::new(),
            include_intercept: true,
        }
    }

    pub fn with_quadratic(mut self, i: usize) -> Self {
        self.quadratics.push(i);
        self
    }

    pub fn with_interaction(mut self, i: usize, j: usize) -> Self {
        self.interactions.push((i, j));
        self
    }

    pub fn without_intercept(mut self) -> Self {
        self.include_intercept = false;
        self
    }

    /// Check for duplicates and out-of-range indices.
    pub fn validate(&self, p: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        let raw = self
            .main_effects
            .iter()
            .map(|&i| Term::Main(i))
            .chain(self.quadratics.iter().map(|&i| Term::Quadratic(i)))
            .chain(self.interactions.iter().map(|&(i, j)| {
                if i == j {
                    Term::Quadratic(i)
                } else {
                    Term::Interaction(i.min(j), i.max(j))
                }
            }));
        for t in raw {
            let max_index = match t {
                Term::Intercept => 0,
                Term::Main(i) | Term::Quadratic(i) => i,
                Term::Interaction(i, j) => i.max(j),
            };
            if max_index >= p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: max_index + 1,
                    context: "term references a covariate past the end",
                });
            }
            if !seen.insert(t) {
                return Err(Error::InvalidArgument(format!("duplicate term {t:?}")));
            }
        }
        Ok(())
    }

    /// Columns in canonical order.
    pub fn terms(&self) -> Vec<Term> {
        let mut mains: Vec<_> = self.main_effects.clone();
        mains.sort_unstable();
        let mut quads: Vec<_> = self.quadratics.clone();
        quads.sort_unstable();
        let mut inter: Vec<_> = self
            .interactions
            .iter()
            .map(|&(i, j)| (i.min(j), i.max(j)))
            .collect();
        inter.sort_unstable();
        let mut out = Vec::with_capacity(self.n_columns());
        if self.include_intercept {
            out.push(Term::Intercept);
        }
        out.extend(mains.into_iter().map(Term::Main));
        out.extend(quads.into_iter().map(Term::Quadratic));
        out.extend(inter.into_iter().map(|(i, j)| Term::Interaction(i, j)));
        out
    }

    pub fn n_columns(&self) -> usize {
        self.include_intercept as usize
            + self.main_effects.len()
            + self.quadratics.len()
            + self.interactions.len()
    }

    pub fn column_names(&self, covariates: &[String]) -> Vec<String> {
        self.terms().iter().map(|t| t.name(covariates)).collect()
    }
}

impl fmt::Display for TermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self
            .terms()
            .into_iter()
            .filter(|t| *t != Term::Intercept)
            .map(|t| t.name(&[]))
            .collect();
        f.write_str(&names.join("+"))
    }
}

/// Row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<F> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<F>,
    pub column_names: Vec<String>,
}

impl<F: Scalar> DesignMatrix<F> {
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.n_rows).map(|i| self.data[i * self.n_cols + j]).collect()
    }

    /// Linear predictor `X θ`.
    pub fn mul_vec(&self, theta: &[F]) -> Vec<F> {
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(theta).map(|(&x, &t)| x * t).sum())
            .collect()
    }
}

/// Design from raw covariate rows of width `p`. No standardization.
pub fn design_from_rows<'a, F, I>(rows: I, p: usize, terms: &TermSet) -> Result<DesignMatrix<F>>
where
    F: Scalar,
    I: IntoIterator<Item = &'a [F]>,
{
    terms.validate(p)?;
    let cols = terms.terms();
    let mut data = Vec::new();
    let mut n_rows = 0;
    for x in rows {
        if x.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: x.len(),
                context: "covariate row width",
            });
        }
        data.extend(cols.iter().map(|t| t.eval(x)));
        n_rows += 1;
    }
    let names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    Ok(DesignMatrix {
        n_rows,
        n_cols: cols.len(),
        data,
        column_names: terms.column_names(&names),
    })
}

/// Design matrix over every row of the stacked dataset.
pub fn build_design<F: Scalar>(d: &StackedDataset<F>, terms: &TermSet) -> Result<DesignMatrix<F>> {
    let mut m = design_from_rows(
        d.rows().iter().map(|r| r.covariates.as_slice()),
        d.n_covariates(),
        terms,
    )?;
    m.column_names = terms.column_names(d.covariate_names());
    Ok(m)
}
