//! Term grammar for membership models: `x1+x2+x3:x4+x3^2`.
//!
//! Each `+`-separated token is a covariate name, `name^2` for a square, or
//! `a:b` for a product. The intercept is always included.

use xportme::membership::Term;
use xportme::TermSet;

use crate::error::{CliError, Result};

fn lookup(token: &str, name: &str, covariates: &[String]) -> Result<usize> {
    covariates
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| CliError::BadTerm {
            term: token.to_string(),
            reason: format!("unknown covariate `{name}`"),
        })
}

pub fn parse_terms(spec: &str, covariates: &[String]) -> Result<TermSet> {
    let mut set = TermSet::main_effects(0);
    for raw in spec.split('+') {
        let token = raw.trim();
        if token.is_empty() {
            return Err(CliError::BadTerm {
                term: spec.to_string(),
                reason: "empty term".into(),
            });
        }
        if let Some(base) = token.strip_suffix("^2") {
            set.quadratics.push(lookup(token, base.trim(), covariates)?);
        } else if let Some((a, b)) = token.split_once(':') {
            let i = lookup(token, a.trim(), covariates)?;
            let j = lookup(token, b.trim(), covariates)?;
            if i == j {
                set.quadratics.push(i);
            } else {
                set.interactions.push((i.min(j), i.max(j)));
            }
        } else {
            set.main_effects.push(lookup(token, token, covariates)?);
        }
    }
    set.validate(covariates.len()).map_err(|e| CliError::BadTerm {
        term: spec.to_string(),
        reason: e.to_string(),
    })?;
    Ok(set)
}

/// Render a term set in the same grammar, using covariate names.
pub fn describe_terms(set: &TermSet, covariates: &[String]) -> String {
    set.terms()
        .into_iter()
        .filter(|t| *t != Term::Intercept)
        .map(|t| t.name(covariates))
        .collect::<Vec<_>>()
        .join("+")
}
