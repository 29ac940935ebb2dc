//! M-logarithmic means: weighted means integrated over the probability simplex.
//!
//! `L(M)(A) = integral over Delta_n of M(w; A)` against the normalized flat
//! measure `(n-1)! dw`, discretized by a [`SimplexRule`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi::{arithmetic_mean, harmonic_mean, Mean, MeanKind, WeightVector};
use crate::quadrature::gauss_legendre_unit;
use crate::report::VerdictReport;
use crate::spd::{loewner_margin, SpdMatrix};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleScheme {
    /// `count` iid flat-Dirichlet samples, each with coefficient `1/count`.
    MonteCarlo { seed: u64, count: usize },
    /// Tensor Gauss-Legendre grid with `level` points per axis, pushed through
    /// the stick-breaking map.
    StickBreakingGauss { level: usize },
}

/// Discrete probability measure on the open simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexRule {
    pub n: usize,
    pub nodes: Vec<WeightVector>,
    pub coeffs: Vec<f64>,
    pub scheme: RuleScheme,
    /// Every node comes with all of its cyclic shifts, at equal coefficients.
    pub cyclic: bool,
}

/// Builds the rule for `n`-point simplices.
pub fn simplex_rule(n: usize, scheme: RuleScheme) -> Result<SimplexRule> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("simplex rules need n >= 2, got {n}")));
    }
    let (nodes, coeffs) = match scheme {
        RuleScheme::StickBreakingGauss { level } => stick_breaking_gauss(n, level)?,
        RuleScheme::MonteCarlo { seed, count } => monte_carlo(n, seed, count)?,
    };
    Ok(SimplexRule {
        n,
        nodes,
        coeffs,
        scheme,
        cyclic: false,
    })
}

fn stick_breaking_gauss(n: usize, level: usize) -> Result<(Vec<WeightVector>, Vec<f64>)> {
    if level == 0 {
        return Err(Error::InvalidParameter("Gauss level must be >= 1".into()));
    }
    let (x, gw) = gauss_legendre_unit(level)?;
    let dims = n - 1;
    let total = level
        .checked_pow(dims as u32)
        .filter(|t| *t <= 10_000_000)
        .ok_or_else(|| Error::InvalidParameter(format!("level {level} tensor rule too large for n = {n}")))?;
    let factorial: f64 = (1..n).map(|k| k as f64).product();
    let mut nodes = Vec::with_capacity(total);
    let mut coeffs = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims];
    for _ in 0..total {
        let mut w = Vec::with_capacity(n);
        let mut rest = 1.0;
        let mut c = factorial;
        for (j, &i) in idx.iter().enumerate() {
            let u = x[i];
            w.push(rest * u);
            // Jacobian factor (1 - u_j)^(n - 2 - j) for the 0-based axis j
            c *= gw[i] * (1.0 - u).powi((dims - 1 - j) as i32);
            rest *= 1.0 - u;
        }
        w.push(rest);
        nodes.push(WeightVector::new(w)?);
        coeffs.push(c);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < level {
                break;
            }
            *slot = 0;
        }
    }
    let sum: f64 = coeffs.iter().sum();
    coeffs.iter_mut().for_each(|c| *c /= sum);
    Ok((nodes, coeffs))
}

fn monte_carlo(n: usize, seed: u64, count: usize) -> Result<(Vec<WeightVector>, Vec<f64>)> {
    if count == 0 {
        return Err(Error::InvalidParameter("Monte Carlo count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(count);
    while nodes.len() < count {
        let e: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = e.iter().sum();
        let w: Vec<f64> = e.iter().map(|v| v / s).collect();
        if w.iter().all(|v| *v >= tol::INTERIOR) {
            nodes.push(WeightVector::new(w)?);
        }
    }
    Ok((nodes, vec![1.0 / count as f64; count]))
}

impl SimplexRule {
    /// Gauss level 8 for `n <= 4`, otherwise 4096 Monte Carlo samples with
    /// all cyclic shifts.
    pub fn default_for(n: usize, seed: u64) -> Result<Self> {
        if n <= 4 {
            simplex_rule(n, RuleScheme::StickBreakingGauss { level: 8 })
        } else {
            Ok(simplex_rule(n, RuleScheme::MonteCarlo { seed, count: 4096 })?.cyclic_symmetrized())
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rule with every node replaced by its `n` cyclic shifts, coefficients split evenly.
    pub fn cyclic_symmetrized(&self) -> Self {
        if self.cyclic {
            return self.clone();
        }
        let mut nodes = Vec::with_capacity(self.len() * self.n);
        let mut coeffs = Vec::with_capacity(self.len() * self.n);
        for (node, c) in self.nodes.iter().zip(&self.coeffs) {
            for k in 0..self.n {
                nodes.push(node.shifted(k));
                coeffs.push(c / self.n as f64);
            }
        }
        SimplexRule {
            n: self.n,
            nodes,
            coeffs,
            scheme: self.scheme,
            cyclic: true,
        }
    }

    /// `sum_j c_j f(node_j)`.
    pub fn integrate_scalar<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| c * f(w.as_slice()))
            .sum()
    }
}

/// A weighted mean `(w, A) -> M(w; A)` that can be integrated over the simplex.
#[derive(Clone, Debug, PartialEq)]
pub enum MeanFamily {
    Weighted(Mean),
    /// `M_0(w; A) = M(uniform; M(w; A), M(Sw; A), ..., M(S^{n-1} w; A))`
    /// with `S` the cyclic shift of weights.
    ShiftCompound { inner: Box<MeanFamily>, n: usize },
}

impl MeanFamily {
    /// Rejects ALM, which has no weighted form.
    pub fn weighted(mean: Mean) -> Result<Self> {
        if mean.kind == MeanKind::Alm {
            return Err(Error::InvalidParameter(
                "ALM has no weighted form and cannot be integrated over the simplex".into(),
            ));
        }
        mean.kind.validate()?;
        Ok(MeanFamily::Weighted(mean))
    }

    pub fn of_kind(kind: MeanKind) -> Result<Self> {
        Self::weighted(Mean::new(kind))
    }

    pub fn name(&self) -> String {
        match self {
            MeanFamily::Weighted(m) => m.kind.to_string(),
            MeanFamily::ShiftCompound { inner, .. } => format!("shift({})", inner.name()),
        }
    }

    pub fn evaluate(&self, w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
        match self {
            MeanFamily::Weighted(m) => m.compute(w, a),
            MeanFamily::ShiftCompound { inner, n } => {
                if a.len() != *n || w.len() != *n {
                    return Err(Error::LengthMismatch {
                        what: "tuple",
                        expected: *n,
                        found: a.len().max(w.len()),
                    });
                }
                let shifted = (0..*n)
                    .map(|k| inner.evaluate(&w.shifted(k), a))
                    .collect::<Result<Vec<_>>>()?;
                inner.evaluate(&WeightVector::uniform(*n)?, &shifted)
            }
        }
    }
}

/// The cyclic-shift compound `M_0` of `m` on `n`-tuples.
pub fn shift_compound(m: &MeanFamily, n: usize) -> Result<MeanFamily> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("shift compound needs n >= 2, got {n}")));
    }
    Ok(MeanFamily::ShiftCompound {
        inner: Box::new(m.clone()),
        n,
    })
}

/// `sum_j c_j M(node_j; A)`. Node evaluations run in parallel; the sum is
/// taken in node order.
pub fn m_logarithmic_mean(m: &MeanFamily, a: &[SpdMatrix], rule: &SimplexRule) -> Result<SpdMatrix> {
    if rule.n != a.len() {
        return Err(Error::LengthMismatch {
            what: "tuple",
            expected: rule.n,
            found: a.len(),
        });
    }
    let values: Vec<Result<SpdMatrix>> = rule
        .nodes
        .par_iter()
        .enumerate()
        .map(|(index, w)| {
            m.evaluate(w, a).map_err(|e| Error::AtNode {
                index,
                weights: w.as_slice().to_vec(),
                source: Box::new(e),
            })
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    SpdMatrix::positive_combination(&rule.coeffs, &values)
}

/// Checks `H <= L(M_0) <= L(M) <= A` and `H <= L(M)` at Loewner tolerance `tol`.
///
/// `H` and `A` are the uniform harmonic and arithmetic means. The rule is
/// cyclically symmetrized first.
pub fn verify_logmean_inequalities(
    m: &MeanFamily,
    a: &[SpdMatrix],
    rule: &SimplexRule,
    tol: f64,
) -> Result<VerdictReport> {
    let rule = rule.cyclic_symmetrized();
    let n = a.len();
    let m0 = shift_compound(m, n)?;
    let lm = m_logarithmic_mean(m, a, &rule)?;
    let lm0 = m_logarithmic_mean(&m0, a, &rule)?;
    let u = WeightVector::uniform(n)?;
    let h = harmonic_mean(&u, a)?;
    let ar = arithmetic_mean(&u, a)?;
    let mut report = VerdictReport::new(format!("logmean/{}", m.name()));
    for (name, lo, hi) in [
        ("harmonic <= L(M)", &h, &lm),
        ("L(M) <= arithmetic", &lm, &ar),
        ("harmonic <= L(M0)", &h, &lm0),
        ("L(M0) <= L(M)", &lm0, &lm),
    ] {
        let s = loewner_margin(lo, hi)?;
        report.direction(name, s >= -tol, s);
    }
    if let RuleScheme::MonteCarlo { count, .. } = rule.scheme {
        report.note(format!(
            "Monte Carlo rule ({count} samples, cyclically symmetrized); the chain is exact for the discrete measure"
        ));
    }
    if !report.passed {
        report.witness = Some(serde_json::json!({ "tuple": a, "family": m.name() }));
    }
    Ok(report)
}
