//! Dense symmetric matrix primitives.
//!
//! Everything here goes through a full symmetric eigendecomposition: matrix
//! functions are `Q diag(phi(lambda)) Q^T`, Loewner comparisons look at the
//! smallest eigenvalue of a difference, and the Thompson distance is the
//! largest absolute log-eigenvalue of the relative matrix `A^{-1/2} B A^{-1/2}`.
//!
//! [`SymMatrix`] holds any real symmetric matrix; [`SpdMatrix`] additionally
//! guarantees positive definiteness and dereferences to [`SymMatrix`], so every
//! symmetric operation is available on it.

use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::tol;

/// Real symmetric `d x d` matrix. Eigenvalues unrestricted.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

/// Real symmetric positive definite `d x d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(SymMatrix);

/// Eigenvalues in nondecreasing order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}

impl SymMatrix {
    /// Builds a symmetric matrix, averaging `m` with its transpose.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SymMatrix(symmetrize(m)))
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        SymMatrix(symmetrize(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::NotSquare {
                rows: d,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn eig(&self) -> Result<EigDecomp> {
        sym_eig(self)
    }

    pub fn eigenvalues(&self) -> Result<DVector<f64>> {
        Ok(sym_eig(self)?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(sym_eig(self)?.eigenvalues[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        let ev = sym_eig(self)?.eigenvalues;
        Ok(ev[ev.len() - 1])
    }

    /// Spectral norm, i.e. the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        let ev = sym_eig(self)?.eigenvalues;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }

    /// `X^T S X` for a square `X` of matching size.
    pub fn congruence(&self, x: &DMatrix<f64>) -> Result<SymMatrix> {
        check_square_dim(x, self.dim())?;
        Ok(SymMatrix::from_raw(x.transpose() * &self.0 * x))
    }

    /// `<S x, x>`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }

    pub fn commutator_norm(&self, other: &SymMatrix) -> f64 {
        let ab = &self.0 * &other.0;
        let ba = &other.0 * &self.0;
        (ab - ba).norm()
    }

    /// Matrix exponential. The result is positive definite whenever it is finite.
    pub fn exp(&self) -> Result<SpdMatrix> {
        let m = matrix_map_named(self, "exp", f64::exp)?;
        Ok(SpdMatrix::from_trusted(m))
    }

    /// Converts to a positive definite matrix, checking positivity.
    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(self.clone())
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.0 - &other.0).amax()
    }
}

fn check_square_dim(x: &DMatrix<f64>, dim: usize) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    if x.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.nrows(),
        });
    }
    Ok(())
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in addition");
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in subtraction");
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl SpdMatrix {
    /// Builds a positive definite matrix from a dense one. The input is
    /// symmetrized by averaging and rejected unless its smallest eigenvalue is
    /// positive.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::from_sym(SymMatrix::new(m)?)
    }

    pub fn from_sym(s: SymMatrix) -> Result<Self> {
        let min = s.min_eigenvalue()?;
        if min > 0.0 && s.0.clone().cholesky().is_some() {
            Ok(SpdMatrix(s))
        } else {
            Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            })
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_rows(rows)?)
    }

    /// Wraps a matrix that is positive definite by construction (for instance
    /// `Q diag(positive) Q^T`, or a positive combination of such matrices).
    pub(crate) fn from_trusted(s: SymMatrix) -> Self {
        SpdMatrix(s)
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix(SymMatrix::identity(dim))
    }

    pub fn scalar(dim: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scalar {c} must be positive")));
        }
        Ok(SpdMatrix(SymMatrix::identity(dim).scale(c)))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::diag(values))
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    /// Multiplies by a positive scalar.
    pub fn scale_pos(&self, c: f64) -> Result<SpdMatrix> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scalar {c} must be positive")));
        }
        Ok(SpdMatrix(self.0.scale(c)))
    }

    /// `X^T A X` for invertible `X`.
    pub fn congruence_spd(&self, x: &DMatrix<f64>) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(self.0.congruence(x)?)
    }

    /// Positive combination `sum c_i A_i`.
    pub fn positive_combination(coeffs: &[f64], mats: &[SpdMatrix]) -> Result<SpdMatrix> {
        if coeffs.len() != mats.len() || mats.is_empty() {
            return Err(Error::LengthMismatch {
                what: "coefficients",
                expected: mats.len(),
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidParameter(
                "combination coefficients must be positive".into(),
            ));
        }
        let dim = mats[0].dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for (c, m) in coeffs.iter().zip(mats) {
            check_square_dim(m.matrix(), dim)?;
            acc += m.matrix() * *c;
        }
        Ok(SpdMatrix(SymMatrix::from_raw(acc)))
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        let inv = self
            .matrix()
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite {
                min_eigenvalue: self.min_eigenvalue()?,
            })?
            .inverse();
        Ok(SpdMatrix(SymMatrix::from_raw(inv)))
    }

    pub fn sqrt(&self) -> Result<SpdMatrix> {
        Ok(SpdMatrix(matrix_map_named(self, "sqrt", f64::sqrt)?))
    }

    pub fn inv_sqrt(&self) -> Result<SpdMatrix> {
        Ok(SpdMatrix(matrix_map_named(self, "inverse sqrt", |x| 1.0 / x.sqrt())?))
    }

    /// `(A^{1/2}, A^{-1/2})` from a single eigendecomposition.
    pub fn sqrt_pair(&self) -> Result<(SpdMatrix, SpdMatrix)> {
        let eig = sym_eig(self)?;
        let s = eig.map_named("sqrt", f64::sqrt)?;
        let is = eig.map_named("inverse sqrt", |x| 1.0 / x.sqrt())?;
        Ok((SpdMatrix(s), SpdMatrix(is)))
    }

    pub fn log(&self) -> Result<SymMatrix> {
        matrix_map_named(self, "log", f64::ln)
    }

    pub fn powf(&self, p: f64) -> Result<SpdMatrix> {
        Ok(SpdMatrix(matrix_map_named(self, "power", |x| x.powf(p))?))
    }

    pub fn det(&self) -> Result<f64> {
        Ok(sym_eig(self)?.eigenvalues.iter().product())
    }

    /// `log det A`, summed over eigenvalues to avoid overflow.
    pub fn log_det(&self) -> Result<f64> {
        Ok(sym_eig(self)?.eigenvalues.iter().map(|x| x.ln()).sum())
    }
}

impl Deref for SpdMatrix {
    type Target = SymMatrix;
    fn deref(&self) -> &SymMatrix {
        &self.0
    }
}

impl From<SpdMatrix> for SymMatrix {
    fn from(a: SpdMatrix) -> SymMatrix {
        a.0
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    let d = a.dim();
    if d == 1 {
        return Ok(EigDecomp {
            eigenvalues: DVector::from_element(1, a.0[(0, 0)]),
            eigenvectors: DMatrix::identity(1, 1),
        });
    }
    let raw = a
        .0
        .clone()
        .try_symmetric_eigen(f64::EPSILON, tol::EIG_MAX_SWEEPS * d)
        .ok_or(Error::EigenNonConvergence { dim: d })?;
    if raw.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNonConvergence { dim: d });
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| raw.eigenvalues[i].total_cmp(&raw.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| raw.eigenvalues[i]));
    let eigenvectors = DMatrix::from_fn(d, d, |r, c| raw.eigenvectors[(r, order[c])]);
    Ok(EigDecomp {
        eigenvalues,
        eigenvectors,
    })
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Q diag(phi(lambda)) Q^T`.
    pub fn map<F: Fn(f64) -> f64>(&self, phi: F) -> Result<SymMatrix> {
        self.map_named("matrix function", phi)
    }

    pub fn map_named<F: Fn(f64) -> f64>(&self, name: &str, phi: F) -> Result<SymMatrix> {
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in self.eigenvalues.iter() {
            let v = phi(lambda);
            if !v.is_finite() {
                return Err(Error::Domain {
                    function: name.to_string(),
                    eigenvalue: lambda,
                });
            }
            values.push(v);
        }
        Ok(self.reassemble(&values))
    }

    pub(crate) fn reassemble(&self, values: &[f64]) -> SymMatrix {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*v);
        }
        SymMatrix::from_raw(scaled * q.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().copied().collect();
        self.reassemble(&values)
    }
}

/// Applies a scalar function through the spectral decomposition.
pub fn matrix_map<F: Fn(f64) -> f64>(a: &SymMatrix, phi: F) -> Result<SymMatrix> {
    sym_eig(a)?.map(phi)
}

pub fn matrix_map_named<F: Fn(f64) -> f64>(a: &SymMatrix, name: &str, phi: F) -> Result<SymMatrix> {
    sym_eig(a)?.map_named(name, phi)
}

fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `max(1, ||A||, ||B||)`, the scale Loewner tolerances are measured against.
pub fn loewner_scale(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    Ok(1f64.max(a.spectral_norm()?).max(b.spectral_norm()?))
}

/// Smallest eigenvalue of `B - A` divided by [`loewner_scale`]. Nonnegative iff `A <= B`.
pub fn loewner_margin(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let diff = b - a;
    Ok(diff.min_eigenvalue()? / loewner_scale(a, b)?)
}

/// `A <= B` in the Loewner order, up to `tol` relative to [`loewner_scale`].
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be nonnegative")));
    }
    Ok(loewner_margin(a, b)? >= -tol)
}

/// Thompson part metric `d(A, B) = || log(A^{-1/2} B A^{-1/2}) ||`.
///
/// Evaluated as `max |log1p(mu_i)|` over the eigenvalues of
/// `A^{-1/2} (B - A) A^{-1/2}`, which keeps full relative accuracy when the
/// two arguments are close.
pub fn thompson_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let (_, a_is) = a.sqrt_pair()?;
    let diff = b.as_sym() - a.as_sym();
    let rel = diff.congruence(a_is.matrix())?;
    let ev = rel.eigenvalues()?;
    Ok(ev
        .iter()
        .map(|&mu| (mu.max(-1.0 + f64::EPSILON)).ln_1p().abs())
        .fold(0.0, f64::max))
}

/// Relative spectral-norm distance `||A - B|| / max(1, ||A||, ||B||)`.
pub fn relative_diff(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok((a - b).spectral_norm()? / loewner_scale(a, b)?)
}

/// Seeded SPD matrix with condition number exactly `cond`.
///
/// The spectrum is log-uniform on `[1, cond]` with both endpoints pinned,
/// multiplied by a log-uniform overall scale in `[1/2, 2]` and conjugated by a
/// Haar-random orthogonal matrix.
pub fn random_spd(dim: usize, cond: f64, seed: u64) -> Result<SpdMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random::spd(&mut rng, dim, cond)
}

/// Generators drawing from a caller-supplied RNG.
pub mod random {
    use super::*;

    pub fn spd<R: Rng + ?Sized>(rng: &mut R, dim: usize, cond: f64) -> Result<SpdMatrix> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(cond >= 1.0 && cond.is_finite()) {
            return Err(Error::InvalidParameter(format!("condition number {cond} must be >= 1")));
        }
        if dim == 1 && cond != 1.0 {
            return Err(Error::InvalidParameter(
                "a 1x1 matrix always has condition number 1".into(),
            ));
        }
        let scale = (rng.random_range(-1.0..=1.0) * std::f64::consts::LN_2).exp();
        let log_cond = cond.ln();
        let mut spectrum = vec![0.0; dim];
        for (k, s) in spectrum.iter_mut().enumerate() {
            let e = if k == 0 {
                0.0
            } else if k == dim - 1 {
                log_cond
            } else {
                rng.random::<f64>() * log_cond
            };
            *s = scale * e.exp();
        }
        let q = orthogonal(rng, dim);
        let eig = EigDecomp {
            eigenvalues: DVector::from_column_slice(&spectrum),
            eigenvectors: q,
        };
        Ok(SpdMatrix(eig.reassemble(&spectrum)))
    }

    /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
    pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
        let g = gaussian_matrix(rng, dim, dim);
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..dim {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        q
    }

    pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    /// `ChaCha8(seed)` positioned on `stream`, for independent per-item draws.
    pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    /// Uniform point of the open simplex (normalized exponentials), each
    /// coordinate at least `1e-3` before normalization.
    pub fn simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1).max(1e-3)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    /// Uniformly distributed unit vector.
    pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 1e-8 {
                return v / n;
            }
        }
    }

    /// Symmetric matrix with spectrum uniform in `[-radius, radius]`.
    pub fn sym<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> SymMatrix {
        let values: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
        let q = orthogonal(rng, dim);
        let eig = EigDecomp {
            eigenvalues: DVector::from_column_slice(&values),
            eigenvectors: q,
        };
        eig.reassemble(&values)
    }

    /// Positive semidefinite matrix `G G^T / rank` with `G` Gaussian `dim x rank`.
    pub fn psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize, scale: f64) -> SymMatrix {
        let g = gaussian_matrix(rng, dim, rank.max(1));
        SymMatrix::from_raw(&g * g.transpose() * (scale / rank.max(1) as f64))
    }

    /// Invertible matrix with singular values log-uniform in `[1/sqrt(cond), sqrt(cond)]`.
    pub fn invertible<R: Rng + ?Sized>(rng: &mut R, dim: usize, cond: f64) -> DMatrix<f64> {
        let u = orthogonal(rng, dim);
        let v = orthogonal(rng, dim);
        let half = 0.5 * cond.max(1.0).ln();
        let s = DMatrix::from_diagonal(&DVector::from_fn(dim, |_, _| {
            rng.random_range(-half..=half).exp()
        }));
        u * s * v.transpose()
    }

    /// Tuple of `n` random SPD matrices with condition numbers log-uniform in `[1, max_cond]`.
    pub fn spd_tuple<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        n: usize,
        max_cond: f64,
    ) -> Result<Vec<SpdMatrix>> {
        (0..n)
            .map(|_| {
                let cond = if dim == 1 {
                    1.0
                } else {
                    (rng.random::<f64>() * max_cond.ln()).exp()
                };
                spd(rng, dim, cond)
            })
            .collect()
    }
}
