//! Numerical checks of the inequalities and equivalences relating operator means.
//!
//! "For all sufficiently small `lambda`" is read as "for every grid value at or
//! below the threshold" of a [`LambdaGrid`]. Every verifier returns a
//! [`VerdictReport`](crate::report::VerdictReport) whose directions name the
//! implication they test.

mod chains;
mod extension;
mod functional;
mod search;
mod two_variable;

pub use chains::{verify_log_euclidean_sandwich, verify_power_mean_chain, verify_y2013_and_f1997};
pub use extension::{
    hermitian_instance, sandwich_slacks, verify_extension_theorem, ExtensionCase, SandwichSlack,
};
pub use functional::Functional;
pub use search::{
    search_p4_violation, search_p4_violation_log_euclidean, stored_p4_witness, P4Search, P4Witness,
    STORED_P4_MIN_EIGENVALUE,
};
pub use two_variable::{
    theorem31_instance, verify_lemma2, verify_limit_formulas, verify_prop_converse, verify_theorem31,
    weight_criterion_pair,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kubo_ando::ReprFunction;
use crate::spd::{EigDecomp, SpdMatrix, SymMatrix};

/// Decreasing positive `lambda` values and the "sufficiently small" threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
    threshold: f64,
}

impl Default for LambdaGrid {
    /// `2^-k` for `k = 4..=20`, threshold `2^-8`.
    fn default() -> Self {
        LambdaGrid::dyadic(4, 20, 8).expect("default grid is valid")
    }
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>, threshold: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("lambda grid is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter("lambda grid values must be positive".into()));
        }
        if values.windows(2).any(|p| p[1] >= p[0]) {
            return Err(Error::InvalidParameter("lambda grid must be strictly decreasing".into()));
        }
        if !(threshold > 0.0) || values.iter().all(|v| *v > threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold {threshold} leaves no grid value below it"
            )));
        }
        Ok(LambdaGrid { values, threshold })
    }

    /// `2^-k` for `k = k_min..=k_max`, threshold `2^-k_threshold`.
    pub fn dyadic(k_min: i32, k_max: i32, k_threshold: i32) -> Result<Self> {
        if k_max < k_min {
            return Err(Error::InvalidParameter(format!("empty exponent range {k_min}..={k_max}")));
        }
        let values = (k_min..=k_max).map(|k| 2f64.powi(-k)).collect();
        LambdaGrid::new(values, 2f64.powi(-k_threshold))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Grid values at or below the threshold, decreasing.
    pub fn small(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(move |v| *v <= self.threshold)
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("grid is nonempty")
    }
}

/// `f(I + lambda T)` through a precomputed decomposition of `T`; `None` when
/// `I + lambda T` is not positive definite.
pub(crate) fn perturbed_identity(f: &ReprFunction, t: &EigDecomp, lambda: f64) -> Result<Option<SpdMatrix>> {
    if t.eigenvalues.iter().any(|&v| 1.0 + lambda * v <= 0.0) {
        return Ok(None);
    }
    let s: SymMatrix = t.map_named(f.name(), |v| f.eval(1.0 + lambda * v))?;
    SpdMatrix::from_sym(s).map(Some)
}
