//! Weighted means of `n`-tuples and their basic properties.

mod means;
mod properties;
mod weights;

pub use means::{
    alm_mean, arithmetic_mean, bmp_mean, harmonic_mean, karcher_mean, log_euclidean_mean,
    max_pairwise_thompson, power_mean, Mean, MeanKind, MeanOutcome, SolverConfig,
};
pub use properties::{check_property, commuting_companion, Property, PropertyAux};
pub use weights::WeightVector;
