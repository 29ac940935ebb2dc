//! Executable predicates for the ten basic properties of multivariable means.
//!
//! | id  | claim |
//! |-----|-------|
//! | P1  | commuting tuples give `prod A_i^{w_i}` |
//! | P2  | `G(a_1 A_1, ...) = prod a_i^{w_i} G(A)` |
//! | P3  | invariance under a joint permutation of weights and matrices |
//! | P4  | `A_i <= B_i` for all `i` implies `G(A) <= G(B)` |
//! | P5  | `d(G(A), G(B)) <= sum w_i d(A_i, B_i)` in the Thompson metric |
//! | P6  | `(1-t) G(A) + t G(B) <= G((1-t) A + t B)` |
//! | P7  | `G(X^T A X) = X^T G(A) X` |
//! | P8  | `G(A^{-1})^{-1} = G(A)` |
//! | P9  | `det G(A) = prod det(A_i)^{w_i}` |
//! | P10 | harmonic `<= G(A) <=` arithmetic |
//!
//! Equalities report `-relative_diff` as slack, inequalities the Loewner
//! margin (or the scalar gap for P5). A check passes iff its slack is `>= -tol`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::means::{arithmetic_mean, check_tuple, harmonic_mean, Mean};
use super::weights::{check_permutation, WeightVector};
use crate::error::{Error, Result};
use crate::report::VerdictReport;
use crate::spd::{loewner_margin, random, relative_diff, thompson_distance, SpdMatrix, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    P10,
}

impl Property {
    pub const ALL: [Property; 10] = [
        Property::P1,
        Property::P2,
        Property::P3,
        Property::P4,
        Property::P5,
        Property::P6,
        Property::P7,
        Property::P8,
        Property::P9,
        Property::P10,
    ];

    pub fn index(self) -> usize {
        Property::ALL.iter().position(|p| *p == self).unwrap() + 1
    }

    /// Properties that compare two tuples `A <= B` (or interpolate between them).
    pub fn needs_other(self) -> bool {
        matches!(self, Property::P4 | Property::P5 | Property::P6)
    }
}

impl FromStr for Property {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let idx = t
            .strip_prefix('p')
            .or_else(|| t.strip_prefix('P'))
            .and_then(|k| k.parse::<usize>().ok());
        match idx {
            Some(k @ 1..=10) => Ok(Property::ALL[k - 1]),
            _ => Err(Error::UnknownProperty(s.to_string())),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index())
    }
}

/// Auxiliary inputs some properties need.
#[derive(Clone, Debug, Default)]
pub struct PropertyAux {
    /// Second tuple `B` (P4 expects `A_i <= B_i`).
    pub other: Option<Vec<SpdMatrix>>,
    /// Invertible `X` for P7.
    pub congruence: Option<DMatrix<f64>>,
    pub permutation: Option<Vec<usize>>,
    /// Positive scalars for P2.
    pub scalars: Option<Vec<f64>>,
    /// Interpolation parameter for P6.
    pub t: Option<f64>,
}

impl PropertyAux {
    /// Seeded auxiliary inputs for `tuple`: `B_i = A_i + P_i` with `P_i` random
    /// PSD of random rank, `X` with condition number at most 10, a uniform
    /// permutation, scalars log-uniform in `[0.1, 10]` and `t` in `[0.1, 0.9]`.
    pub fn generate(seed: u64, tuple: &[SpdMatrix]) -> Result<Self> {
        let Some(first) = tuple.first() else {
            return Err(Error::InvalidParameter("empty tuple".into()));
        };
        let d = first.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let other = tuple
            .iter()
            .map(|a| {
                let rank = rng.random_range(1..=d);
                let scale = a.spectral_norm()? * rng.random_range(0.1..1.0);
                let p = random::psd(&mut rng, d, rank, scale);
                SpdMatrix::from_sym(a.as_sym() + &p)
            })
            .collect::<Result<Vec<_>>>()?;
        let congruence = random::invertible(&mut rng, d, 10.0);
        let mut permutation: Vec<usize> = (0..tuple.len()).collect();
        permutation.shuffle(&mut rng);
        let ln10 = 10f64.ln();
        let scalars = (0..tuple.len())
            .map(|_| rng.random_range(-ln10..=ln10).exp())
            .collect();
        let t = rng.random_range(0.1..=0.9);
        Ok(PropertyAux {
            other: Some(other),
            congruence: Some(congruence),
            permutation: Some(permutation),
            scalars: Some(scalars),
            t: Some(t),
        })
    }
}

fn missing(p: Property, what: &str) -> Error {
    Error::InvalidParameter(format!("{p} needs {what}"))
}

/// Tuple sharing the eigenbasis of `A_1`, with the (sorted) spectrum of each `A_i`.
pub fn commuting_companion(a: &[SpdMatrix]) -> Result<Vec<SpdMatrix>> {
    Ok(companion_parts(a)?.2)
}

/// Common eigenbasis, spectra and matrices of [`commuting_companion`].
fn companion_parts(a: &[SpdMatrix]) -> Result<(DMatrix<f64>, Vec<DVector<f64>>, Vec<SpdMatrix>)> {
    let Some(first) = a.first() else {
        return Err(Error::InvalidParameter("empty tuple".into()));
    };
    let q = first.eig()?.eigenvectors;
    let spectra = a.iter().map(|m| m.eigenvalues()).collect::<Result<Vec<_>>>()?;
    let mats = spectra
        .iter()
        .map(|ev| SpdMatrix::from_sym(SymMatrix::from_raw(&q * DMatrix::from_diagonal(ev) * q.transpose())))
        .collect::<Result<Vec<_>>>()?;
    Ok((q, spectra, mats))
}

/// Evaluates property `p` of `mean` at `(w, a)`.
///
/// Solver failures propagate as errors; a violated property is a failed
/// report carrying the inputs as witness.
pub fn check_property(
    p: Property,
    mean: &Mean,
    w: &WeightVector,
    a: &[SpdMatrix],
    aux: &PropertyAux,
    tol: f64,
) -> Result<VerdictReport> {
    check_tuple(w, a)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be nonnegative")));
    }
    let g = |w: &WeightVector, t: &[SpdMatrix]| mean.compute(w, t).map(SpdMatrix::into_sym);
    let mut report = VerdictReport::new(format!("{p}/{}", mean.kind));
    let eq = |report: &mut VerdictReport, name: &str, x: &SymMatrix, y: &SymMatrix| -> Result<()> {
        let s = -relative_diff(x, y)?;
        report.direction(name, s >= -tol, s);
        Ok(())
    };
    let leq = |report: &mut VerdictReport, name: &str, x: &SymMatrix, y: &SymMatrix| -> Result<()> {
        let s = loewner_margin(x, y)?;
        report.direction(name, s >= -tol, s);
        Ok(())
    };
    let mut witness = json!({ "weights": w.as_slice(), "tuple": a });
    match p {
        Property::P1 => {
            let (q, spectra, c) = companion_parts(a)?;
            let mut prod = vec![1.0; a[0].dim()];
            for (wi, ev) in w.as_slice().iter().zip(&spectra) {
                for (v, l) in prod.iter_mut().zip(ev.iter()) {
                    *v *= l.powf(*wi);
                }
            }
            let expected =
                SymMatrix::from_raw(&q * DMatrix::from_diagonal(&DVector::from_vec(prod)) * q.transpose());
            eq(&mut report, "commuting product", &g(w, &c)?, &expected)?;
            witness["commuting_tuple"] = json!(c);
        }
        Property::P2 => {
            let s = aux.scalars.as_ref().ok_or_else(|| missing(p, "positive scalars"))?;
            if s.len() != a.len() {
                return Err(Error::LengthMismatch {
                    what: "scalars",
                    expected: a.len(),
                    found: s.len(),
                });
            }
            let scaled = a
                .iter()
                .zip(s)
                .map(|(m, c)| m.scale_pos(*c))
                .collect::<Result<Vec<_>>>()?;
            let factor: f64 = s.iter().zip(w.as_slice()).map(|(c, wi)| c.powf(*wi)).product();
            eq(&mut report, "homogeneity", &g(w, &scaled)?, &g(w, a)?.scale(factor))?;
            witness["scalars"] = json!(s);
        }
        Property::P3 => {
            let perm = aux.permutation.as_ref().ok_or_else(|| missing(p, "a permutation"))?;
            check_permutation(perm, a.len())?;
            let pw = w.permuted(perm)?;
            let pa: Vec<SpdMatrix> = perm.iter().map(|&i| a[i].clone()).collect();
            eq(&mut report, "permutation", &g(&pw, &pa)?, &g(w, a)?)?;
            witness["permutation"] = json!(perm);
        }
        Property::P4 | Property::P5 | Property::P6 => {
            let b = aux.other.as_ref().ok_or_else(|| missing(p, "a second tuple"))?;
            check_tuple(w, b)?;
            if b[0].dim() != a[0].dim() {
                return Err(Error::DimensionMismatch {
                    expected: a[0].dim(),
                    found: b[0].dim(),
                });
            }
            witness["other"] = json!(b);
            match p {
                Property::P4 => {
                    let hyp = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| loewner_margin(x, y))
                        .collect::<Result<Vec<_>>>()?;
                    if hyp.iter().any(|m| *m < -tol) {
                        report.vacuous_direction("monotonicity");
                        report.note("hypothesis A_i <= B_i does not hold; nothing to check");
                    } else {
                        leq(&mut report, "monotonicity", &g(w, a)?, &g(w, b)?)?;
                    }
                }
                Property::P5 => {
                    let lhs = thompson_distance(&mean.compute(w, a)?, &mean.compute(w, b)?)?;
                    let mut rhs = 0.0;
                    for ((wi, x), y) in w.as_slice().iter().zip(a).zip(b) {
                        rhs += wi * thompson_distance(x, y)?;
                    }
                    let s = rhs - lhs;
                    report.direction("thompson contraction", s >= -tol, s);
                }
                _ => {
                    let t = aux.t.unwrap_or(0.5);
                    if !(0.0..=1.0).contains(&t) {
                        return Err(Error::InvalidParameter(format!("P6 parameter {t} outside [0, 1]")));
                    }
                    let mix = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| SpdMatrix::positive_combination(&[1.0 - t, t], &[x.clone(), y.clone()]))
                        .collect::<Result<Vec<_>>>()?;
                    let lhs = &g(w, a)?.scale(1.0 - t) + &g(w, b)?.scale(t);
                    leq(&mut report, "joint concavity", &lhs, &g(w, &mix)?)?;
                    witness["t"] = json!(t);
                }
            }
        }
        Property::P7 => {
            let x = aux.congruence.as_ref().ok_or_else(|| missing(p, "an invertible X"))?;
            if x.nrows() != a[0].dim() || x.ncols() != a[0].dim() {
                return Err(Error::DimensionMismatch {
                    expected: a[0].dim(),
                    found: x.nrows(),
                });
            }
            let moved = a
                .iter()
                .map(|m| m.congruence_spd(x))
                .collect::<Result<Vec<_>>>()?;
            eq(&mut report, "congruence", &g(w, &moved)?, &g(w, a)?.congruence(x)?)?;
            witness["congruence"] = json!(x.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>());
        }
        Property::P8 => {
            let inv = a.iter().map(|m| m.inverse()).collect::<Result<Vec<_>>>()?;
            eq(&mut report, "self-duality", mean.compute(w, &inv)?.inverse()?.as_sym(), &g(w, a)?)?;
        }
        Property::P9 => {
            let expect: f64 = a
                .iter()
                .zip(w.as_slice())
                .map(|(m, wi)| Ok(wi * m.log_det()?))
                .sum::<Result<f64>>()?;
            let s = -(mean.compute(w, a)?.log_det()? - expect).exp_m1().abs();
            report.direction("determinant", s >= -tol, s);
        }
        Property::P10 => {
            let m = g(w, a)?;
            leq(&mut report, "harmonic <= mean", harmonic_mean(w, a)?.as_sym(), &m)?;
            leq(&mut report, "mean <= arithmetic", &m, arithmetic_mean(w, a)?.as_sym())?;
        }
    }
    if !report.passed {
        report.witness = Some(witness);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi::means::MeanKind;
    use crate::spd::random_spd;

    fn tuple(seed: u64, n: usize, d: usize) -> Vec<SpdMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random::spd_tuple(&mut rng, d, n, 100.0).unwrap()
    }

    #[test]
    fn parses_property_ids() {
        assert_eq!("p10".parse::<Property>().unwrap(), Property::P10);
        assert_eq!("P4".parse::<Property>().unwrap(), Property::P4);
        assert!(matches!("p11".parse::<Property>(), Err(Error::UnknownProperty(_))));
        assert!("q1".parse::<Property>().is_err());
        for p in Property::ALL {
            assert_eq!(p.to_string().parse::<Property>().unwrap(), p);
        }
    }

    #[test]
    fn karcher_satisfies_p10_on_random_triples() {
        let mean = Mean::new(MeanKind::Karcher);
        let w = WeightVector::uniform(3).unwrap();
        for seed in 0..20 {
            let a = tuple(seed, 3, 3);
            let r = check_property(Property::P10, &mean, &w, &a, &PropertyAux::default(), 1e-9).unwrap();
            assert!(r.passed, "seed {seed}: {}", r.to_json());
        }
    }

    #[test]
    fn bmp_transposition_invariance() {
        let mean = Mean::new(MeanKind::Bmp);
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let a = tuple(5, 3, 3);
        let aux = PropertyAux {
            permutation: Some(vec![1, 0, 2]),
            ..Default::default()
        };
        let r = check_property(Property::P3, &mean, &w, &a, &aux, 1e-10).unwrap();
        assert!(r.passed, "{}", r.to_json());
    }

    #[test]
    fn geometric_means_pass_every_property() {
        let w = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        for kind in [MeanKind::Bmp, MeanKind::Karcher] {
            let mean = Mean::new(kind);
            let a = tuple(11, 3, 2);
            let aux = PropertyAux::generate(3, &a).unwrap();
            for p in Property::ALL {
                let r = check_property(p, &mean, &w, &a, &aux, 1e-8).unwrap();
                assert!(r.passed, "{p} {kind}: {}", r.to_json());
            }
        }
    }

    #[test]
    fn arithmetic_mean_fails_commuting_product() {
        let w = WeightVector::uniform(2).unwrap();
        let a = vec![random_spd(2, 10.0, 1).unwrap(), random_spd(2, 10.0, 2).unwrap()];
        let r = check_property(Property::P1, &Mean::new(MeanKind::Arithmetic), &w, &a, &PropertyAux::default(), 1e-9)
            .unwrap();
        assert!(!r.passed);
        assert!(r.worst_slack < 0.0);
        assert!(r.witness.is_some());
    }

    #[test]
    fn missing_aux_is_an_error() {
        let w = WeightVector::uniform(2).unwrap();
        let a = tuple(1, 2, 2);
        let mean = Mean::new(MeanKind::Bmp);
        assert!(check_property(Property::P4, &mean, &w, &a, &PropertyAux::default(), 1e-9).is_err());
        assert!(check_property(Property::P7, &mean, &w, &a, &PropertyAux::default(), 1e-9).is_err());
    }

    #[test]
    fn generated_aux_is_ordered() {
        let a = tuple(2, 4, 3);
        let aux = PropertyAux::generate(9, &a).unwrap();
        for (x, y) in a.iter().zip(aux.other.as_ref().unwrap()) {
            assert!(loewner_margin(x, y).unwrap() >= -1e-14);
        }
        let again = PropertyAux::generate(9, &a).unwrap();
        assert_eq!(aux.other, again.other);
        assert_eq!(aux.permutation, again.permutation);
    }
}
