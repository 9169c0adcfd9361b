//! Sample-membership modelling: design construction, logistic fitting,
//! inverse-odds weights, and balance diagnostics.

mod design;
mod diagnostics;
mod irls;
mod weights;

pub use design::{build_design, design_from_rows, DesignMatrix, Term, TermSet};
pub use diagnostics::{
    asmd, asmd_of_probabilities, balance_table, dom, BalanceRow, BalanceTable,
    ASMD_CONVENTION,
};
pub use irls::{fit_membership, log_likelihood, predict_prob, FitOptions, MembershipModel};
pub use weights::{make_weights, trim_weights, WeightSet, QUANTILE_RULE};
