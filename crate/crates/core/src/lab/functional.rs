use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::log_mean::{m_logarithmic_mean, simplex_rule, MeanFamily, RuleScheme, SimplexRule};
use crate::multi::{Mean, MeanKind, SolverConfig, WeightVector};
use crate::spd::SpdMatrix;

/// `Phi(w; A; x)` for unit vectors `x`.
///
/// Every variant except [`Functional::NormProduct`] is the quadratic form
/// `<M(w; A) x, x>` of a mean; `NormProduct` is `prod_i <A_i x, x>^{w_i}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Functional {
    PowerForm(f64),
    NormProduct,
    /// Uniform weights only.
    AlmForm,
    BmpForm,
    LogEuclideanForm,
    /// The Karcher-logarithmic mean; ignores `w` and requires it uniform.
    LogKarcherForm,
}

/// The evaluated functional: either a mean (quadratic form) or the tuple
/// itself (norm product).
#[derive(Clone, Debug)]
pub(crate) enum Evaluated<'a> {
    Form(SpdMatrix),
    Product(&'a WeightVector, &'a [SpdMatrix]),
}

impl Evaluated<'_> {
    pub(crate) fn at(&self, x: &DVector<f64>) -> f64 {
        match self {
            Evaluated::Form(m) => m.quadratic_form(x),
            Evaluated::Product(w, a) => w
                .as_slice()
                .iter()
                .zip(a.iter())
                .map(|(wi, ai)| wi * ai.quadratic_form(x).ln())
                .sum::<f64>()
                .exp(),
        }
    }

    pub(crate) fn mean(&self) -> Option<&SpdMatrix> {
        match self {
            Evaluated::Form(m) => Some(m),
            Evaluated::Product(..) => None,
        }
    }
}

impl Functional {
    /// The full family exercised by the extension checks.
    pub fn suite() -> Vec<Functional> {
        vec![
            Functional::PowerForm(-1.0),
            Functional::PowerForm(-0.5),
            Functional::PowerForm(0.5),
            Functional::PowerForm(1.0),
            Functional::NormProduct,
            Functional::BmpForm,
            Functional::AlmForm,
            Functional::LogEuclideanForm,
            Functional::LogKarcherForm,
        ]
    }

    pub fn requires_uniform(&self) -> bool {
        matches!(self, Functional::AlmForm | Functional::LogKarcherForm)
    }

    pub fn validate(&self, w: &WeightVector) -> Result<()> {
        if let Functional::PowerForm(t) = self {
            MeanKind::Power(*t).validate()?;
        }
        if self.requires_uniform() && !w.is_uniform() {
            return Err(Error::InvalidWeights(format!("{self} needs uniform weights")));
        }
        Ok(())
    }

    pub(crate) fn evaluate<'a>(
        &self,
        w: &'a WeightVector,
        a: &'a [SpdMatrix],
        solver: &SolverConfig,
    ) -> Result<Evaluated<'a>> {
        self.validate(w)?;
        let kind = match self {
            Functional::PowerForm(t) => MeanKind::Power(*t),
            Functional::AlmForm => MeanKind::Alm,
            Functional::BmpForm => MeanKind::Bmp,
            Functional::LogEuclideanForm => MeanKind::LogEuclidean,
            Functional::NormProduct => {
                if w.len() != a.len() {
                    return Err(Error::LengthMismatch {
                        what: "tuple",
                        expected: w.len(),
                        found: a.len(),
                    });
                }
                if let Some(m) = a.iter().find(|m| m.dim() != a[0].dim()) {
                    return Err(Error::DimensionMismatch {
                        expected: a[0].dim(),
                        found: m.dim(),
                    });
                }
                return Ok(Evaluated::Product(w, a));
            }
            Functional::LogKarcherForm => {
                let family = MeanFamily::weighted(Mean::with_solver(MeanKind::Karcher, *solver))?;
                let rule = if a.len() <= 4 {
                    simplex_rule(a.len(), RuleScheme::StickBreakingGauss { level: 6 })?
                } else {
                    SimplexRule::default_for(a.len(), 0)?
                };
                return Ok(Evaluated::Form(m_logarithmic_mean(&family, a, &rule)?));
            }
        };
        Ok(Evaluated::Form(Mean::with_solver(kind, *solver).compute(w, a)?))
    }

    /// `Phi(w; A; x)` for each `x`.
    pub fn values(
        &self,
        w: &WeightVector,
        a: &[SpdMatrix],
        xs: &[DVector<f64>],
        solver: &SolverConfig,
    ) -> Result<Vec<f64>> {
        let e = self.evaluate(w, a, solver)?;
        Ok(xs.iter().map(|x| e.at(x)).collect())
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::PowerForm(t) => write!(f, "power-form:{t}"),
            Functional::NormProduct => write!(f, "norm-product"),
            Functional::AlmForm => write!(f, "alm-form"),
            Functional::BmpForm => write!(f, "bmp-form"),
            Functional::LogEuclideanForm => write!(f, "log-euclidean-form"),
            Functional::LogKarcherForm => write!(f, "log-karcher-form"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    /// Accepts the [`Display`](fmt::Display) names.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(t) = s.strip_prefix("power-form:") {
            let t: f64 = t
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad power-form exponent {t:?}")))?;
            MeanKind::Power(t).validate()?;
            return Ok(Functional::PowerForm(t));
        }
        match s.as_str() {
            "norm-product" => Ok(Functional::NormProduct),
            "alm-form" => Ok(Functional::AlmForm),
            "bmp-form" => Ok(Functional::BmpForm),
            "log-euclidean-form" => Ok(Functional::LogEuclideanForm),
            "log-karcher-form" => Ok(Functional::LogKarcherForm),
            _ => Err(Error::InvalidParameter(format!("unknown functional {s:?}"))),
        }
    }
}
