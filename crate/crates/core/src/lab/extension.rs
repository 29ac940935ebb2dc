//! The extension theorem: for a functional `Phi` squeezed between the norms
//! of the harmonic and arithmetic means,
//! `sum w_i T_i <= 0` iff `Phi(w; f(I + l T_1), ..., f(I + l T_n); x) <= 1`
//! for all unit `x` and all small `l`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::functional::{Evaluated, Functional};
use super::{perturbed_identity, LambdaGrid};
use crate::error::{Error, Result};
use crate::kubo_ando::ReprFunction;
use crate::multi::{arithmetic_mean, harmonic_mean, SolverConfig, WeightVector};
use crate::report::VerdictReport;
use crate::spd::{random, SpdMatrix, SymMatrix};
use crate::tol;

/// Position of `sum w_i T_i` relative to the negative cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionCase {
    Negative,
    Boundary,
    Positive,
}

impl ExtensionCase {
    pub fn classify(top_eigenvalue: f64) -> Self {
        if top_eigenvalue.abs() <= tol::BOUNDARY {
            ExtensionCase::Boundary
        } else if top_eigenvalue < 0.0 {
            ExtensionCase::Negative
        } else {
            ExtensionCase::Positive
        }
    }
}

/// Seeded Hermitian tuple whose weighted sum has top eigenvalue `-delta`,
/// `0` or `+delta` (`delta` uniform in `[0.1, 1]`) according to `case`.
pub fn hermitian_instance(seed: u64, dim: usize, w: &WeightVector, case: ExtensionCase) -> Result<Vec<SymMatrix>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<SymMatrix> = (0..w.len()).map(|_| random::sym(&mut rng, dim, 1.0)).collect();
    let top = weighted_sum(w, &t).max_eigenvalue()?;
    let delta = rng.random_range(0.1..=1.0);
    let target = match case {
        ExtensionCase::Negative => -delta,
        ExtensionCase::Boundary => 0.0,
        ExtensionCase::Positive => delta,
    };
    let shift = SymMatrix::identity(dim).scale(target - top);
    Ok(t.iter().map(|ti| ti + &shift).collect())
}

fn weighted_sum(w: &WeightVector, t: &[SymMatrix]) -> SymMatrix {
    let mut s = SymMatrix::zeros(t[0].dim());
    for (wi, ti) in w.as_slice().iter().zip(t) {
        s = &s + &ti.scale(*wi);
    }
    s
}

/// Relative slacks of `||H|| <= sup_x Phi <= ||A||` on one tuple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichSlack {
    pub lower: f64,
    pub upper: f64,
}

fn columns(m: &nalgebra::DMatrix<f64>) -> impl Iterator<Item = DVector<f64>> + '_ {
    m.column_iter().map(|c| c.into_owned())
}

/// Sampled `sup_x Phi`: the given vectors plus every eigenvector of the
/// arithmetic mean, the harmonic mean and (for quadratic forms) the mean itself.
fn sampled_sup(e: &Evaluated, h: &SpdMatrix, a: &SpdMatrix, xs: &[DVector<f64>]) -> Result<f64> {
    let mut cands: Vec<DVector<f64>> = xs.to_vec();
    cands.extend(columns(&h.as_sym().eig()?.eigenvectors));
    cands.extend(columns(&a.as_sym().eig()?.eigenvectors));
    if let Some(m) = e.mean() {
        cands.extend(columns(&m.as_sym().eig()?.eigenvectors));
    }
    Ok(cands.iter().map(|x| e.at(x)).fold(f64::NEG_INFINITY, f64::max))
}

/// Sandwich slacks of `phi` on `a`, with `x_samples` Haar vectors drawn from `seed`.
pub fn sandwich_slacks(
    phi: &Functional,
    w: &WeightVector,
    a: &[SpdMatrix],
    x_samples: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<SandwichSlack> {
    let e = phi.evaluate(w, a, solver)?;
    let h = harmonic_mean(w, a)?;
    let ar = arithmetic_mean(w, a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<DVector<f64>> = (0..x_samples).map(|_| random::unit_vector(&mut rng, a[0].dim())).collect();
    let sup = sampled_sup(&e, &h, &ar, &xs)?;
    let hn = h.as_sym().spectral_norm()?;
    let an = ar.as_sym().spectral_norm()?;
    Ok(SandwichSlack {
        lower: (sup - hn) / hn.max(1.0),
        upper: (an - sup) / an.max(1.0),
    })
}

const SANDWICH_TUPLES: usize = 3;
const SANDWICH_COND: f64 = 100.0;

#[derive(Clone, Copy, Debug)]
struct LambdaExcess {
    lambda: f64,
    excess: f64,
}

/// Checks the sandwich hypothesis of `phi` on seeded random tuples, then the
/// equivalence on `t` over the grid values at or below the threshold.
///
/// Forward: when `S = sum w_i T_i <= 0`, `max_x Phi - 1` must stay at most
/// [`tol::FUNCTIONAL`] ([`tol::BOUNDARY`] when the top eigenvalue of `S` is
/// within [`tol::BOUNDARY`] of 0). Converse: when `S` has a positive
/// eigenvalue, some grid value must push `Phi` above `1 + `[`tol::FUNCTIONAL`]
/// and the excess at the smallest `l` must match `l f'(1) lambda_max(S)`
/// within [`tol::RATE_FACTOR`]. Unit vectors are `x_samples` Haar samples,
/// the eigenvectors of `S` and those of the evaluated means.
pub fn verify_extension_theorem(
    phi: &Functional,
    f: &ReprFunction,
    t: &[SymMatrix],
    w: &WeightVector,
    grid: &LambdaGrid,
    x_samples: usize,
    seed: u64,
) -> Result<VerdictReport> {
    phi.validate(w)?;
    if t.len() != w.len() {
        return Err(Error::LengthMismatch {
            what: "tuple",
            expected: w.len(),
            found: t.len(),
        });
    }
    let dim = t[0].dim();
    if let Some(m) = t.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        });
    }
    let slope = f.weight();
    if !(slope > 0.0) {
        return Err(Error::InvalidParameter(format!("{} must have f'(1) > 0", f.name())));
    }
    let solver = SolverConfig::default();
    let mut report = VerdictReport::new(format!("extension/{phi}/{}", f.name()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for k in 0..SANDWICH_TUPLES {
        let a = random::spd_tuple(&mut rng, dim, w.len(), SANDWICH_COND)?;
        let s = sandwich_slacks(phi, w, &a, x_samples, seed ^ (k as u64 + 1), &solver)?;
        lower = lower.min(s.lower);
        upper = upper.min(s.upper);
    }
    report.direction("||H|| <= sup Phi", lower >= -tol::FUNCTIONAL, lower);
    report.direction("sup Phi <= ||A||", upper >= -tol::FUNCTIONAL, upper);

    let s = weighted_sum(w, t);
    let es = s.eig()?;
    let top = es.eigenvalues.max();
    let case = ExtensionCase::classify(top);
    let mut xs: Vec<DVector<f64>> = (0..x_samples).map(|_| random::unit_vector(&mut rng, dim)).collect();
    xs.extend(columns(&es.eigenvectors));
    let decomps = t.iter().map(|ti| ti.eig()).collect::<Result<Vec<_>>>()?;
    let small: Vec<f64> = grid.small().collect();
    let samples: Vec<Result<Option<LambdaExcess>>> = small
        .par_iter()
        .map(|&lambda| {
            let wrap = |e| Error::AtLambda {
                lambda,
                source: Box::new(e),
            };
            let mut tuple = Vec::with_capacity(decomps.len());
            for d in &decomps {
                match perturbed_identity(f, d, lambda).map_err(wrap)? {
                    Some(m) => tuple.push(m),
                    None => return Ok(None),
                }
            }
            let e = phi.evaluate(w, &tuple, &solver).map_err(wrap)?;
            let h = harmonic_mean(w, &tuple).map_err(wrap)?;
            let a = arithmetic_mean(w, &tuple).map_err(wrap)?;
            let sup = sampled_sup(&e, &h, &a, &xs).map_err(wrap)?;
            Ok(Some(LambdaExcess {
                lambda,
                excess: sup - 1.0,
            }))
        })
        .collect();
    let samples: Vec<LambdaExcess> = samples
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if samples.len() < small.len() {
        report.note(format!("{} grid values skipped: argument not positive definite", small.len() - samples.len()));
    }
    let Some(last) = samples.last().copied() else {
        return Err(Error::InvalidParameter("no grid value keeps every argument positive definite".into()));
    };
    for s in &samples {
        report.grid("max Phi - 1", s.lambda, s.excess);
    }
    let max_excess = samples.iter().map(|s| s.excess).fold(f64::NEG_INFINITY, f64::max);
    report.note(format!("top eigenvalue of sum w_i T_i: {top:.6e} ({case:?})"));

    const FORWARD: &str = "sum w T <= 0 => Phi <= 1";
    const CONVERSE: &str = "Phi <= 1 => sum w T <= 0";
    match case {
        ExtensionCase::Negative | ExtensionCase::Boundary => {
            let bound = if case == ExtensionCase::Boundary {
                tol::BOUNDARY
            } else {
                tol::FUNCTIONAL
            };
            report.direction(FORWARD, max_excess <= bound, bound - max_excess);
            report.direction(CONVERSE, true, (-top).max(0.0));
        }
        ExtensionCase::Positive => {
            report.vacuous_direction(FORWARD);
            report.direction(CONVERSE, max_excess > tol::FUNCTIONAL, max_excess - tol::FUNCTIONAL);
            let ratio = (last.excess / last.lambda) / (slope * top);
            report.grid("rate ratio", last.lambda, ratio);
            let rate_slack = (ratio - 1.0 / tol::RATE_FACTOR).min(tol::RATE_FACTOR - ratio);
            report.direction("first-order rate", rate_slack >= 0.0, rate_slack);
        }
    }
    if !report.passed {
        report.witness = Some(json!({
            "T": t,
            "weights": w.as_slice(),
            "f": f.name(),
            "max_excess": max_excess,
        }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_identity_tuple() {
        let grid = LambdaGrid::default();
        let f = ReprFunction::power(0.5).unwrap();
        let t = vec![SymMatrix::identity(2).scale(-1.0); 2];
        let w = WeightVector::uniform(2).unwrap();
        for phi in Functional::suite() {
            let r = verify_extension_theorem(&phi, &f, &t, &w, &grid, 16, 1).unwrap();
            assert!(r.passed, "{phi}: {}", r.to_json());
            assert!(r.grid_data.iter().filter(|g| g.series == "max Phi - 1").all(|g| g.value <= 1e-10));
        }
    }

    #[test]
    fn norm_product_detects_positive_sum() {
        let grid = LambdaGrid::default();
        let f = ReprFunction::power(0.5).unwrap();
        let t = vec![SymMatrix::identity(2), SymMatrix::identity(2).scale(-1.0)];
        let w = WeightVector::new(vec![0.9, 0.1]).unwrap();
        let r = verify_extension_theorem(&Functional::NormProduct, &f, &t, &w, &grid, 16, 2).unwrap();
        assert!(r.passed, "{}", r.to_json());
        let l = grid.smallest();
        let scalar = (1.0 + l).powf(0.45) * (1.0 - l).powf(0.05) - 1.0;
        let g = r.grid_data.iter().rfind(|g| g.series == "max Phi - 1").unwrap();
        assert!((g.value - scalar).abs() < 1e-14);
        assert!(scalar > 0.0);
    }

    #[test]
    fn boundary_pair() {
        let grid = LambdaGrid::default();
        let f = ReprFunction::logarithmic();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t1 = random::sym(&mut rng, 3, 1.0);
        let t = vec![t1.clone(), t1.scale(-1.0)];
        let w = WeightVector::uniform(2).unwrap();
        for phi in [Functional::BmpForm, Functional::NormProduct, Functional::PowerForm(0.5)] {
            let r = verify_extension_theorem(&phi, &f, &t, &w, &grid, 16, 3).unwrap();
            assert!(r.passed, "{phi}: {}", r.to_json());
            assert!(r.notes.iter().any(|n| n.contains("Boundary")));
        }
    }

    #[test]
    fn instances_have_requested_case() {
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        for case in [ExtensionCase::Negative, ExtensionCase::Boundary, ExtensionCase::Positive] {
            let t = hermitian_instance(4, 3, &w, case).unwrap();
            let top = weighted_sum(&w, &t).max_eigenvalue().unwrap();
            assert_eq!(ExtensionCase::classify(top), case);
        }
    }

    #[test]
    fn random_positive_and_negative_instances() {
        let grid = LambdaGrid::default();
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let f = ReprFunction::power(0.3).unwrap();
        for (seed, case) in [(1, ExtensionCase::Negative), (2, ExtensionCase::Positive), (3, ExtensionCase::Boundary)] {
            let t = hermitian_instance(seed, 3, &w, case).unwrap();
            for phi in [Functional::PowerForm(-0.5), Functional::LogEuclideanForm, Functional::BmpForm] {
                let r = verify_extension_theorem(&phi, &f, &t, &w, &grid, 32, seed).unwrap();
                assert!(r.passed, "{phi} {case:?}: {}", r.to_json());
            }
        }
    }
}
