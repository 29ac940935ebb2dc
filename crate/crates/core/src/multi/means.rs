//! Multivariable means of positive definite tuples.
//!
//! Closed forms: arithmetic, harmonic, log-Euclidean. Iterative: ALM and BMP
//! (symmetrization recursions over `n - 1` means), the power mean `P_t`
//! (fixed point of `X = sum w_k X #_t A_k`) and the Karcher mean (zero of
//! `sum w_i log(X^{-1/2} A_i X^{-1/2})`).
//!
//! Iterative solvers report `iterations` as the number of residual
//! evaluations, so an input that is already at the fixed point reports 1.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weights::WeightVector;
use crate::error::{Error, Result};
use crate::kubo_ando::weighted_geometric;
use crate::spd::{thompson_distance, SpdMatrix, SymMatrix};
use crate::tol;

/// Stopping rule shared by the iterative means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Thompson-metric threshold (gradient-norm threshold for Karcher).
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step of the Karcher gradient iteration, in `(0, 1]`.
    pub karcher_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: tol::SOLVER,
            max_iter: tol::SOLVER_MAX_ITER,
            karcher_step: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("solver tol {} must be > 0", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if !(self.karcher_step > 0.0 && self.karcher_step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "karcher_step {} outside (0, 1]",
                self.karcher_step
            )));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanKind {
    Alm,
    Bmp,
    Power(f64),
    Karcher,
    LogEuclidean,
    Arithmetic,
    Harmonic,
}

impl MeanKind {
    pub fn validate(&self) -> Result<()> {
        if let MeanKind::Power(t) = self {
            if !(*t >= -1.0 && *t <= 1.0 && *t != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "power mean exponent {t} outside [-1, 1] \\ {{0}}"
                )));
            }
        }
        Ok(())
    }

    /// Parses `alm`, `bmp`, `karcher`, `log-euclidean`, `arithmetic`,
    /// `harmonic` or `power:T`.
    pub fn parse_with_t(name: &str, t: Option<f64>) -> Result<Self> {
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "alm" => MeanKind::Alm,
            "bmp" | "geometric" => MeanKind::Bmp,
            "karcher" => MeanKind::Karcher,
            "log-euclidean" | "logeuclidean" | "log_euclidean" => MeanKind::LogEuclidean,
            "arithmetic" => MeanKind::Arithmetic,
            "harmonic" => MeanKind::Harmonic,
            "power" => MeanKind::Power(t.ok_or_else(|| {
                Error::InvalidParameter("power mean needs an exponent t".into())
            })?),
            other => {
                if let Some(v) = other.strip_prefix("power:") {
                    MeanKind::Power(v.parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad power exponent in `{name}`"))
                    })?)
                } else {
                    return Err(Error::InvalidParameter(format!("unknown mean kind `{name}`")));
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl FromStr for MeanKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MeanKind::parse_with_t(s, None)
    }
}

impl fmt::Display for MeanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanKind::Alm => write!(f, "alm"),
            MeanKind::Bmp => write!(f, "bmp"),
            MeanKind::Power(t) => write!(f, "power:{t}"),
            MeanKind::Karcher => write!(f, "karcher"),
            MeanKind::LogEuclidean => write!(f, "log-euclidean"),
            MeanKind::Arithmetic => write!(f, "arithmetic"),
            MeanKind::Harmonic => write!(f, "harmonic"),
        }
    }
}

/// A mean selector together with its solver configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mean {
    pub kind: MeanKind,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug)]
pub struct MeanOutcome {
    pub value: SpdMatrix,
    pub iterations: usize,
    pub residual: f64,
}

impl MeanOutcome {
    fn exact(value: SpdMatrix) -> Self {
        MeanOutcome {
            value,
            iterations: 1,
            residual: 0.0,
        }
    }
}

impl Mean {
    pub fn new(kind: MeanKind) -> Self {
        Mean {
            kind,
            solver: SolverConfig::default(),
        }
    }

    pub fn with_solver(kind: MeanKind, solver: SolverConfig) -> Self {
        Mean { kind, solver }
    }

    pub fn evaluate(&self, w: &WeightVector, a: &[SpdMatrix]) -> Result<MeanOutcome> {
        self.kind.validate()?;
        self.solver.validate()?;
        match self.kind {
            MeanKind::Alm => {
                check_tuple(w, a)?;
                if !w.is_uniform() {
                    return Err(Error::InvalidWeights(
                        "the ALM mean is defined for uniform weights only".into(),
                    ));
                }
                alm_mean(a, &self.solver)
            }
            MeanKind::Bmp => bmp_mean(w, a, &self.solver),
            MeanKind::Power(t) => power_mean(t, w, a, &self.solver),
            MeanKind::Karcher => karcher_mean(w, a, &self.solver),
            MeanKind::LogEuclidean => log_euclidean_mean(w, a).map(MeanOutcome::exact),
            MeanKind::Arithmetic => arithmetic_mean(w, a).map(MeanOutcome::exact),
            MeanKind::Harmonic => harmonic_mean(w, a).map(MeanOutcome::exact),
        }
    }

    pub fn compute(&self, w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
        Ok(self.evaluate(w, a)?.value)
    }
}

pub(crate) fn check_tuple(w: &WeightVector, a: &[SpdMatrix]) -> Result<()> {
    if w.len() != a.len() {
        return Err(Error::LengthMismatch {
            what: "tuple",
            expected: w.len(),
            found: a.len(),
        });
    }
    check_dims(a)
}

pub(crate) fn check_dims(a: &[SpdMatrix]) -> Result<()> {
    let Some(first) = a.first() else {
        return Err(Error::InvalidParameter("empty tuple".into()));
    };
    for m in a {
        if m.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: m.dim(),
            });
        }
    }
    Ok(())
}

fn weighted_sum(w: &[f64], mats: impl Iterator<Item = DMatrix<f64>>, dim: usize) -> SymMatrix {
    let mut acc = DMatrix::zeros(dim, dim);
    for (wi, m) in w.iter().zip(mats) {
        acc += m * *wi;
    }
    SymMatrix::from_raw(acc)
}

/// `sum w_i A_i`.
pub fn arithmetic_mean(w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
    check_tuple(w, a)?;
    let s = weighted_sum(w.as_slice(), a.iter().map(|m| m.matrix().clone()), a[0].dim());
    Ok(SpdMatrix::from_trusted(s))
}

/// `(sum w_i A_i^{-1})^{-1}`.
pub fn harmonic_mean(w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
    check_tuple(w, a)?;
    let inv = a.iter().map(|m| m.inverse()).collect::<Result<Vec<_>>>()?;
    arithmetic_mean(w, &inv)?.inverse()
}

/// `exp(sum w_i log A_i)`.
pub fn log_euclidean_mean(w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
    check_tuple(w, a)?;
    let logs = a.iter().map(|m| m.log()).collect::<Result<Vec<_>>>()?;
    weighted_sum(w.as_slice(), logs.into_iter().map(SymMatrix::into_matrix), a[0].dim()).exp()
}

fn others(a: &[SpdMatrix], i: usize) -> Vec<SpdMatrix> {
    a.iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, m)| m.clone())
        .collect()
}

/// Largest Thompson distance between any two members of the tuple.
pub fn max_pairwise_thompson(a: &[SpdMatrix]) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            worst = worst.max(thompson_distance(&a[i], &a[j])?);
        }
    }
    Ok(worst)
}

/// Evaluates `step(i)` for every index, in parallel when each step is itself a
/// nested mean. Output order is the index order either way.
fn map_indices<F>(n: usize, nested: bool, step: F) -> Result<Vec<SpdMatrix>>
where
    F: Fn(usize) -> Result<SpdMatrix> + Sync + Send,
{
    if nested {
        let all: Vec<Result<SpdMatrix>> = (0..n).into_par_iter().map(step).collect();
        all.into_iter().collect()
    } else {
        (0..n).map(step).collect()
    }
}

/// Runs a symmetrization recursion until the spread of the tuple drops below
/// tol, or stalls at roundoff level.
fn symmetrize_until_converged<F>(
    method: &'static str,
    start: &[SpdMatrix],
    cfg: &SolverConfig,
    step: F,
) -> Result<MeanOutcome>
where
    F: Fn(&[SpdMatrix]) -> Result<Vec<SpdMatrix>>,
{
    let mut cur = start.to_vec();
    let mut prev = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let spread = max_pairwise_thompson(&cur)?;
        if spread <= cfg.tol || (spread >= prev && spread <= roundoff_floor(&cur)?) {
            return Ok(MeanOutcome {
                value: cur.swap_remove(0),
                iterations: it,
                residual: spread,
            });
        }
        if it == cfg.max_iter {
            return Err(Error::NonConvergence {
                method,
                iterations: it,
                residual: spread,
                last: Box::new(cur.swap_remove(0)),
            });
        }
        prev = spread;
        cur = step(&cur)?;
    }
    unreachable!("loop returns on its last iteration")
}

fn roundoff_floor(a: &[SpdMatrix]) -> Result<f64> {
    let mut cond = 1.0f64;
    for m in a {
        let e = m.as_sym().eigenvalues()?;
        cond = cond.max(e.max() / e.min());
    }
    Ok(tol::ROUNDOFF_ULPS * f64::EPSILON * cond)
}

/// Ando-Li-Mathias mean (uniform weights).
///
/// `n = 2` is `A_1 #_{1/2} A_2`; for larger `n` every member is replaced by
/// the ALM mean of the others until the tuple collapses.
pub fn alm_mean(a: &[SpdMatrix], cfg: &SolverConfig) -> Result<MeanOutcome> {
    check_dims(a)?;
    cfg.validate()?;
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter("ALM mean needs at least two matrices".into()));
    }
    if n == 2 {
        return weighted_geometric(&a[0], &a[1], 0.5).map(MeanOutcome::exact);
    }
    let inner = cfg.with_tol(cfg.tol * tol::NESTED_TOL_FACTOR);
    symmetrize_until_converged("ALM mean", a, cfg, |cur| {
        map_indices(n, n > 3, |i| Ok(alm_mean(&others(cur, i), &inner)?.value))
    })
}

/// Bini-Meini-Poloni weighted geometric mean.
///
/// `n = 2` is `A_1 #_{w_2} A_2`; otherwise
/// `A_i <- BMP(w_hat_{!=i}; others) #_{w_i} A_i` until the tuple collapses.
pub fn bmp_mean(w: &WeightVector, a: &[SpdMatrix], cfg: &SolverConfig) -> Result<MeanOutcome> {
    check_tuple(w, a)?;
    cfg.validate()?;
    let n = a.len();
    if n == 2 {
        return weighted_geometric(&a[0], &a[1], w.as_slice()[1]).map(MeanOutcome::exact);
    }
    let reduced = (0..n).map(|i| w.without(i)).collect::<Result<Vec<_>>>()?;
    let inner_cfg = cfg.with_tol(cfg.tol * tol::NESTED_TOL_FACTOR);
    symmetrize_until_converged("BMP mean", a, cfg, |cur| {
        map_indices(n, n > 3, |i| {
            let inner = bmp_mean(&reduced[i], &others(cur, i), &inner_cfg)?.value;
            weighted_geometric(&inner, &cur[i], w.as_slice()[i])
        })
    })
}

/// Power mean `P_t(w; A)`.
///
/// For `t in (0, 1]`, plain fixed-point iteration of
/// `X -> sum w_k X #_t A_k` from the arithmetic mean; for `t in [-1, 0)`,
/// `P_t(w; A) = P_{-t}(w; A^{-1})^{-1}`.
pub fn power_mean(t: f64, w: &WeightVector, a: &[SpdMatrix], cfg: &SolverConfig) -> Result<MeanOutcome> {
    MeanKind::Power(t).validate()?;
    check_tuple(w, a)?;
    cfg.validate()?;
    if t < 0.0 {
        let inv = a.iter().map(|m| m.inverse()).collect::<Result<Vec<_>>>()?;
        let out = power_mean(-t, w, &inv, cfg).map_err(|e| match e {
            Error::NonConvergence {
                method,
                iterations,
                residual,
                last,
            } => match last.inverse() {
                Ok(l) => Error::NonConvergence {
                    method,
                    iterations,
                    residual,
                    last: Box::new(l),
                },
                Err(e) => e,
            },
            other => other,
        })?;
        return Ok(MeanOutcome {
            value: out.value.inverse()?,
            ..out
        });
    }
    let mut x = arithmetic_mean(w, a)?;
    if t == 1.0 {
        // X #_1 A_k = A_k, so the map is constant and the arithmetic mean is its fixed point
        return Ok(MeanOutcome::exact(x));
    }
    let dim = x.dim();
    for it in 1..=cfg.max_iter {
        let (xs, xis) = x.sqrt_pair()?;
        let mut inner = DMatrix::zeros(dim, dim);
        for (wk, ak) in w.as_slice().iter().zip(a) {
            let rel = ak.as_sym().congruence(xis.matrix())?;
            inner += rel.eig()?.map_named("power", |s| s.powf(t))?.into_matrix() * *wk;
        }
        let next = SpdMatrix::from_trusted(SymMatrix::from_raw(inner).congruence(xs.matrix())?);
        let residual = thompson_distance(&x, &next)?;
        if residual <= cfg.tol {
            return Ok(MeanOutcome {
                value: x,
                iterations: it,
                residual,
            });
        }
        if it == cfg.max_iter {
            return Err(Error::NonConvergence {
                method: "power mean",
                iterations: it,
                residual,
                last: Box::new(x),
            });
        }
        x = next;
    }
    unreachable!("loop returns on its last iteration")
}

struct KarcherState {
    x: SpdMatrix,
    sqrt: SpdMatrix,
    gradient: SymMatrix,
    norm: f64,
}

fn karcher_state(w: &WeightVector, a: &[SpdMatrix], x: SpdMatrix) -> Result<KarcherState> {
    let (xs, xis) = x.sqrt_pair()?;
    let dim = x.dim();
    let mut g = DMatrix::zeros(dim, dim);
    for (wi, ai) in w.as_slice().iter().zip(a) {
        let rel = ai.as_sym().congruence(xis.matrix())?;
        g += rel.eig()?.map_named("log", f64::ln)?.into_matrix() * *wi;
    }
    let gradient = SymMatrix::from_raw(g);
    let norm = gradient.spectral_norm()?;
    Ok(KarcherState {
        x,
        sqrt: xs,
        gradient,
        norm,
    })
}

/// Weighted Karcher mean, the zero of `sum w_i log(X^{-1/2} A_i X^{-1/2})`.
///
/// Starts at the log-Euclidean mean and updates
/// `X <- X^{1/2} exp(s * grad) X^{1/2}`, halving `s` (at most
/// [`tol::KARCHER_MAX_HALVINGS`] times) whenever the gradient norm would not
/// decrease. Stops when the spectral norm of the gradient is below `cfg.tol`.
pub fn karcher_mean(w: &WeightVector, a: &[SpdMatrix], cfg: &SolverConfig) -> Result<MeanOutcome> {
    check_tuple(w, a)?;
    cfg.validate()?;
    let mut state = karcher_state(w, a, log_euclidean_mean(w, a)?)?;
    for it in 1..=cfg.max_iter {
        if state.norm <= cfg.tol {
            return Ok(MeanOutcome {
                value: state.x,
                iterations: it,
                residual: state.norm,
            });
        }
        if it == cfg.max_iter {
            break;
        }
        let mut step = cfg.karcher_step;
        let mut accepted = None;
        for _ in 0..=tol::KARCHER_MAX_HALVINGS {
            let update = state.gradient.scale(step).exp()?;
            let trial = SpdMatrix::from_trusted(update.congruence(state.sqrt.matrix())?);
            let next = karcher_state(w, a, trial)?;
            if next.norm < state.norm {
                accepted = Some(next);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => state = next,
            None => {
                return Err(Error::NonConvergence {
                    method: "Karcher mean",
                    iterations: it,
                    residual: state.norm,
                    last: Box::new(state.x),
                })
            }
        }
    }
    Err(Error::NonConvergence {
        method: "Karcher mean",
        iterations: cfg.max_iter,
        residual: state.norm,
        last: Box::new(state.x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::{loewner_leq, random_spd, relative_diff};
    use std::f64::consts::E;

    fn scalars(v: &[f64]) -> Vec<SpdMatrix> {
        v.iter().map(|&x| SpdMatrix::scalar(1, x).unwrap()).collect()
    }

    fn value(m: &SpdMatrix) -> f64 {
        m.matrix()[(0, 0)]
    }

    fn triple(seed: u64, dim: usize, cond: f64) -> Vec<SpdMatrix> {
        (0..3).map(|k| random_spd(dim, cond, seed * 10 + k).unwrap()).collect()
    }

    #[test]
    fn closed_form_examples() {
        let w2 = WeightVector::uniform(2).unwrap();
        let a = random_spd(3, 10.0, 1).unwrap();
        let same = vec![a.clone(), a.clone()];
        assert!(relative_diff(&arithmetic_mean(&w2, &same).unwrap(), &a).unwrap() < 1e-15);
        assert!(relative_diff(&harmonic_mean(&w2, &same).unwrap(), &a).unwrap() < 1e-14);

        let m = arithmetic_mean(
            &w2,
            &[SpdMatrix::diag(&[1.0, 1.0]).unwrap(), SpdMatrix::diag(&[3.0, 3.0]).unwrap()],
        )
        .unwrap();
        assert!(m.max_abs_diff(&SymMatrix::diag(&[2.0, 2.0])) < 1e-15);

        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((value(&arithmetic_mean(&w, &scalars(&[1.0, 2.0, 3.0])).unwrap()) - 2.3).abs() < 1e-15);
        assert!((value(&harmonic_mean(&w2, &scalars(&[1.0, 1.0 / 3.0])).unwrap()) - 0.5).abs() < 1e-15);
        assert!(arithmetic_mean(&w, &scalars(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn log_euclidean_examples() {
        let w2 = WeightVector::uniform(2).unwrap();
        let g = log_euclidean_mean(
            &w2,
            &[SpdMatrix::diag(&[1.0, 4.0]).unwrap(), SpdMatrix::diag(&[4.0, 1.0]).unwrap()],
        )
        .unwrap();
        assert!(g.max_abs_diff(&SymMatrix::diag(&[2.0, 2.0])) < 1e-14);
        let s = log_euclidean_mean(&w2, &scalars(&[1.0, E * E])).unwrap();
        assert!((value(&s) - E).abs() < 1e-15);

        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        for seed in 0..10 {
            let t = triple(seed, 3, 50.0);
            let g = log_euclidean_mean(&w, &t).unwrap();
            let expect: f64 = t.iter().zip(w.as_slice()).map(|(m, wi)| wi * m.log_det().unwrap()).sum();
            let rel = (g.log_det().unwrap() - expect).exp_m1().abs();
            assert!(rel <= 1e-10, "seed {seed}: {rel}");
        }
    }

    #[test]
    fn alm_examples() {
        let cfg = SolverConfig::default();
        let a = random_spd(3, 20.0, 3).unwrap();
        let out = alm_mean(&[a.clone(), a.clone(), a.clone()], &cfg).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.value, a);

        let out = alm_mean(&scalars(&[1.0, 8.0, 27.0]), &cfg).unwrap();
        assert!((value(&out.value) / 6.0).ln().abs() <= cfg.tol, "{}", value(&out.value));

        let t: Vec<_> = (1..=3).map(|s| random_spd(2, 10.0, s).unwrap()).collect();
        let coarse = alm_mean(&t, &cfg).unwrap();
        let fine = alm_mean(&t, &cfg.with_tol(1e-14)).unwrap();
        assert!(coarse.residual <= cfg.tol);
        assert!(thompson_distance(&coarse.value, &fine.value).unwrap() <= 1e-11);
        let u = WeightVector::uniform(3).unwrap();
        let h = harmonic_mean(&u, &t).unwrap();
        let ar = arithmetic_mean(&u, &t).unwrap();
        assert!(loewner_leq(&h, &fine.value, 1e-10).unwrap());
        assert!(loewner_leq(&fine.value, &ar, 1e-10).unwrap());
    }

    #[test]
    fn nested_alm_reaches_default_tol() {
        let mut rng = crate::spd::random::stream(5, 6);
        let a = crate::spd::random::spd_tuple(&mut rng, 2, 4, 100.0).unwrap();
        let out = alm_mean(&a, &SolverConfig::default()).unwrap();
        assert!(out.residual <= tol::SOLVER, "{}", out.residual);
        let det: f64 = a.iter().map(|m| m.log_det().unwrap()).sum::<f64>() / 4.0;
        assert!((out.value.log_det().unwrap() - det).abs() < 1e-11);
    }

    #[test]
    fn alm_rejects_nonuniform_weights() {
        let t = triple(1, 2, 5.0);
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            Mean::new(MeanKind::Alm).evaluate(&w, &t),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn bmp_examples() {
        let cfg = SolverConfig::default();
        let a = random_spd(2, 10.0, 1).unwrap();
        let b = random_spd(2, 10.0, 2).unwrap();
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        let out = bmp_mean(&w, &[a.clone(), b.clone()], &cfg).unwrap();
        assert_eq!(out.value, weighted_geometric(&a, &b, 0.75).unwrap());

        let out = bmp_mean(&WeightVector::uniform(3).unwrap(), &[a.clone(), a.clone(), a.clone()], &cfg)
            .unwrap();
        assert_eq!(out.value, a);

        let w = WeightVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let out = bmp_mean(&w, &scalars(&[1.0, 2.0, 4.0]), &cfg).unwrap();
        assert!((value(&out.value) - 2f64.powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn two_member_alm_and_bmp_are_geometric_means() {
        let a = random_spd(3, 30.0, 5).unwrap();
        let b = random_spd(3, 30.0, 6).unwrap();
        let g = weighted_geometric(&a, &b, 0.5).unwrap();
        let cfg = SolverConfig::default();
        let alm = alm_mean(&[a.clone(), b.clone()], &cfg).unwrap().value;
        let bmp = bmp_mean(&WeightVector::uniform(2).unwrap(), &[a, b], &cfg).unwrap().value;
        assert!(alm.max_abs_diff(&g) <= 1e-13);
        assert!(bmp.max_abs_diff(&g) <= 1e-13);
    }

    #[test]
    fn power_mean_examples() {
        let cfg = SolverConfig::default();
        let t = triple(2, 3, 30.0);
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let p1 = power_mean(1.0, &w, &t, &cfg).unwrap();
        assert_eq!(p1.value, arithmetic_mean(&w, &t).unwrap());
        assert_eq!(p1.residual, 0.0);
        let pm1 = power_mean(-1.0, &w, &t, &cfg).unwrap();
        assert!(relative_diff(&pm1.value, &harmonic_mean(&w, &t).unwrap()).unwrap() <= 1e-12);

        let w2 = WeightVector::uniform(2).unwrap();
        let s = power_mean(0.5, &w2, &scalars(&[1.0, 9.0]), &cfg).unwrap();
        assert!((value(&s.value) - 4.0).abs() < 1e-10);

        let a = random_spd(2, 10.0, 8).unwrap();
        let s = power_mean(0.3, &w2, &[a.clone(), a.clone()], &cfg).unwrap();
        assert!(relative_diff(&s.value, &a).unwrap() < 1e-13);
        assert!(power_mean(0.0, &w2, &[a.clone(), a.clone()], &cfg).is_err());
        assert!(power_mean(1.5, &w2, &[a.clone(), a], &cfg).is_err());
    }

    #[test]
    fn power_mean_residual_contract() {
        let cfg = SolverConfig::default();
        let t = triple(4, 3, 50.0);
        let w = WeightVector::new(vec![0.3, 0.3, 0.4]).unwrap();
        for p in [0.1, 0.5, 0.9] {
            let out = power_mean(p, &w, &t, &cfg).unwrap();
            let x = &out.value;
            let mapped = SpdMatrix::positive_combination(
                w.as_slice(),
                &t.iter().map(|ak| weighted_geometric(x, ak, p).unwrap()).collect::<Vec<_>>(),
            )
            .unwrap();
            assert!(thompson_distance(x, &mapped).unwrap() <= 1e-11, "t={p}");
        }
    }

    #[test]
    fn karcher_examples() {
        let cfg = SolverConfig::default();
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let commuting = vec![
            SpdMatrix::diag(&[1.0, 2.0]).unwrap(),
            SpdMatrix::diag(&[3.0, 5.0]).unwrap(),
            SpdMatrix::diag(&[0.5, 7.0]).unwrap(),
        ];
        let out = karcher_mean(&w, &commuting, &cfg).unwrap();
        assert_eq!(out.iterations, 1);
        let le = log_euclidean_mean(&w, &commuting).unwrap();
        assert!(relative_diff(&out.value, &le).unwrap() < 1e-14);

        let a = random_spd(3, 10.0, 2).unwrap();
        let w2 = WeightVector::new(vec![0.3, 0.7]).unwrap();
        let out = karcher_mean(&w2, &[a.clone(), a.clone()], &cfg).unwrap();
        assert!(relative_diff(&out.value, &a).unwrap() < 1e-13);

        let t = triple(7, 3, 40.0);
        let u = WeightVector::uniform(3).unwrap();
        let k = karcher_mean(&u, &t, &cfg).unwrap();
        assert!(k.residual <= cfg.tol);
        let lo = power_mean(-0.01, &u, &t, &cfg).unwrap().value;
        let hi = power_mean(0.01, &u, &t, &cfg).unwrap().value;
        assert!(loewner_leq(&lo, &k.value, 1e-8).unwrap());
        assert!(loewner_leq(&k.value, &hi, 1e-8).unwrap());
    }

    #[test]
    fn mean_kind_parsing() {
        assert_eq!("karcher".parse::<MeanKind>().unwrap(), MeanKind::Karcher);
        assert_eq!("power:-0.5".parse::<MeanKind>().unwrap(), MeanKind::Power(-0.5));
        assert_eq!(MeanKind::parse_with_t("power", Some(0.25)).unwrap(), MeanKind::Power(0.25));
        assert!("power".parse::<MeanKind>().is_err());
        assert!("power:0".parse::<MeanKind>().is_err());
        assert!("median".parse::<MeanKind>().is_err());
        for k in [MeanKind::Alm, MeanKind::Power(0.5), MeanKind::LogEuclidean] {
            assert_eq!(k.to_string().parse::<MeanKind>().unwrap(), k);
        }
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::default()
        };
        let t = triple(3, 3, 100.0);
        let u = WeightVector::uniform(3).unwrap();
        match power_mean(0.05, &u, &t, &cfg) {
            Err(Error::NonConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 2);
                assert!(residual > cfg.tol);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(alm_mean(&t, &cfg).unwrap_err().is_non_convergence());
    }
}
