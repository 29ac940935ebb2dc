//! Operator means of positive definite matrices.
//!
//! Two-variable Kubo-Ando means, multivariable geometric-type means (ALM,
//! BMP, power, Karcher, log-Euclidean), M-logarithmic means integrated over
//! the probability simplex, and a lab of numerical checks for the
//! inequalities relating them.

pub mod error;
pub mod io;
pub mod kubo_ando;
pub mod lab;
pub mod log_mean;
pub mod multi;
pub mod quadrature;
pub mod report;
pub mod spd;
pub mod tol;

pub use error::{Error, Result};
pub use io::MatrixTuple;
pub use kubo_ando::ReprFunction;
pub use multi::{Mean, MeanKind, SolverConfig, WeightVector};
pub use report::VerdictReport;
pub use spd::{EigDecomp, SpdMatrix, SymMatrix};
