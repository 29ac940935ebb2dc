//! Two-variable operator means and their representing functions.
//!
//! A mean `sigma` is determined by a normalized representing function `f`
//! (`f(1) = 1`) through `A sigma B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`.
//! The derivative `f'(1)` is the weight of the mean: a mean with weight `w`
//! sits between the weighted harmonic and weighted arithmetic means.
//!
//! Only the built-in families are known to be operator monotone. Custom
//! functions pass a scalar screen (normalization, derivative consistency,
//! monotonicity on a log grid); anything beyond that is the caller's contract.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_unit;
use crate::spd::{SpdMatrix, SymMatrix};
use crate::tol;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Power(f64),
    Arithmetic(f64),
    Harmonic(f64),
    Logarithmic,
    Custom(ScalarFn),
}

/// Normalized scalar function on `(0, inf)` representing an operator mean.
#[derive(Clone)]
pub struct ReprFunction {
    name: String,
    kind: Kind,
    deriv_at_one: f64,
}

impl fmt::Debug for ReprFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReprFunction")
            .field("name", &self.name)
            .field("deriv_at_one", &self.deriv_at_one)
            .finish()
    }
}

fn check_weight(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("weight {w} outside [0, 1]")))
    }
}

/// `(t - 1) / log t`, with its Taylor series near `t = 1`.
pub fn log_mean_kernel(t: f64) -> f64 {
    let u = t - 1.0;
    if u.abs() < tol::LOG_MEAN_SERIES {
        // x / log(1 + x) = 1 + x/2 - x^2/12 + x^3/24 - 19 x^4/720 + ...
        1.0 + u * (0.5 + u * (-1.0 / 12.0 + u * (1.0 / 24.0 - u * 19.0 / 720.0)))
    } else {
        u / t.ln()
    }
}

impl ReprFunction {
    /// `t -> t^w`, the weighted geometric mean.
    pub fn power(w: f64) -> Result<Self> {
        check_weight(w)?;
        Ok(ReprFunction {
            name: format!("power:{w}"),
            kind: Kind::Power(w),
            deriv_at_one: w,
        })
    }

    /// `t -> 1 - w + w t`, the weighted arithmetic mean.
    pub fn arithmetic(w: f64) -> Result<Self> {
        check_weight(w)?;
        Ok(ReprFunction {
            name: format!("arithmetic:{w}"),
            kind: Kind::Arithmetic(w),
            deriv_at_one: w,
        })
    }

    /// `t -> [(1 - w) + w / t]^{-1}`, the weighted harmonic mean.
    pub fn harmonic(w: f64) -> Result<Self> {
        check_weight(w)?;
        Ok(ReprFunction {
            name: format!("harmonic:{w}"),
            kind: Kind::Harmonic(w),
            deriv_at_one: w,
        })
    }

    /// `t -> (t - 1) / log t`, the logarithmic mean (weight 1/2).
    pub fn logarithmic() -> Self {
        ReprFunction {
            name: "logarithmic".into(),
            kind: Kind::Logarithmic,
            deriv_at_one: 0.5,
        }
    }

    /// A user-supplied representing function, screened on construction.
    pub fn custom<F>(name: &str, f: F, deriv_at_one: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let r = ReprFunction {
            name: name.to_string(),
            kind: Kind::Custom(Arc::new(f)),
            deriv_at_one,
        };
        r.screen()?;
        Ok(r)
    }

    /// Parses `power:W`, `geometric` (power 1/2), `arithmetic:W`, `harmonic:W`
    /// or `logarithmic`.
    pub fn parse(text: &str) -> Result<Self> {
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let weight = |default: Option<f64>| -> Result<f64> {
            match (arg, default) {
                (Some(a), _) => a
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad weight in `{text}`"))),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::InvalidParameter(format!("`{text}` needs a weight"))),
            }
        };
        match head.trim() {
            "power" => Self::power(weight(None)?),
            "geometric" => Self::power(weight(Some(0.5))?),
            "arithmetic" => Self::arithmetic(weight(Some(0.5))?),
            "harmonic" => Self::harmonic(weight(Some(0.5))?),
            "logarithmic" if arg.is_none() => Ok(Self::logarithmic()),
            _ => Err(Error::InvalidParameter(format!(
                "unknown representing function `{text}`"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, Kind::Custom(_))
    }

    /// Stored `f'(1)` without revalidation.
    pub fn weight(&self) -> f64 {
        self.deriv_at_one
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Power(w) => t.powf(*w),
            Kind::Arithmetic(w) => 1.0 - w + w * t,
            Kind::Harmonic(w) => 1.0 / ((1.0 - w) + w / t),
            Kind::Logarithmic => log_mean_kernel(t),
            Kind::Custom(f) => f(t),
        }
    }

    /// Central difference of `eval` at 1 with step [`tol::FD_STEP`].
    pub fn numeric_derivative_at_one(&self) -> f64 {
        let h = tol::FD_STEP;
        (self.eval(1.0 + h) - self.eval(1.0 - h)) / (2.0 * h)
    }

    fn screen(&self) -> Result<()> {
        let one = self.eval(1.0);
        if !((one - 1.0).abs() <= tol::REPR_UNIT) {
            return Err(Error::InvalidParameter(format!(
                "{}: f(1) = {one}, expected 1",
                self.name
            )));
        }
        if !(0.0..=1.0).contains(&self.deriv_at_one) {
            return Err(Error::InvalidParameter(format!(
                "{}: f'(1) = {} outside [0, 1]",
                self.name, self.deriv_at_one
            )));
        }
        self.check_derivative()?;
        let mut prev = f64::NEG_INFINITY;
        for t in log_grid(tol::SCALAR_GRID_POINTS) {
            let v = self.eval(t);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{}: f({t:e}) = {v} is not a positive number",
                    self.name
                )));
            }
            if v < prev - 1e-14 * prev.abs() {
                return Err(Error::InvalidParameter(format!(
                    "{}: not monotone near t = {t:e}",
                    self.name
                )));
            }
            prev = v;
        }
        Ok(())
    }

    fn check_derivative(&self) -> Result<f64> {
        let numeric = self.numeric_derivative_at_one();
        if (numeric - self.deriv_at_one).abs() > tol::FD_AGREEMENT {
            return Err(Error::InconsistentDerivative {
                name: self.name.clone(),
                stored: self.deriv_at_one,
                numeric,
            });
        }
        Ok(self.deriv_at_one)
    }
}

/// `n` log-spaced points covering `[1e-6, 1e6]`.
pub fn log_grid(n: usize) -> impl Iterator<Item = f64> {
    let lo = 1e-6f64.ln();
    let hi = 1e6f64.ln();
    (0..n).map(move |k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
}

/// Returns `f'(1)` after re-checking it against a central finite difference.
pub fn repr_derivative_at_one(f: &ReprFunction) -> Result<f64> {
    f.check_derivative()
}

fn same_dim(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `A sigma_f B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`.
pub fn binary_mean(f: &ReprFunction, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    same_dim(a, b)?;
    let (a_s, a_is) = a.sqrt_pair()?;
    let rel = b.as_sym().congruence(a_is.matrix())?;
    let mid = rel.eig()?.map_named(f.name(), |t| f.eval(t))?;
    let out = mid.congruence(a_s.matrix())?;
    SpdMatrix::from_sym(out)
}

/// Weighted geometric mean `A #_w B`. Exact at the endpoints `w = 0, 1`.
pub fn weighted_geometric(a: &SpdMatrix, b: &SpdMatrix, w: f64) -> Result<SpdMatrix> {
    check_weight(w)?;
    same_dim(a, b)?;
    if w == 0.0 {
        return Ok(a.clone());
    }
    if w == 1.0 {
        return Ok(b.clone());
    }
    let (a_s, a_is) = a.sqrt_pair()?;
    let rel = b.as_sym().congruence(a_is.matrix())?;
    let mid = rel.eig()?.map_named("power", |t| t.powf(w))?;
    Ok(SpdMatrix::from_trusted(mid.congruence(a_s.matrix())?))
}

/// Two-variable logarithmic mean as `int_0^1 A #_t B dt`, by Gauss-Legendre
/// quadrature with `nodes` points. Compare with
/// `binary_mean(&ReprFunction::logarithmic(), a, b)`, which is exact.
pub fn logarithmic_mean_2(a: &SpdMatrix, b: &SpdMatrix, nodes: usize) -> Result<SpdMatrix> {
    same_dim(a, b)?;
    let (ts, ws) = gauss_legendre_unit(nodes)?;
    let terms = ts
        .iter()
        .map(|&t| weighted_geometric(a, b, t))
        .collect::<Result<Vec<_>>>()?;
    SpdMatrix::positive_combination(&ws, &terms)
}

/// Weighted harmonic mean `[(1-w) A^{-1} + w B^{-1}]^{-1}` in closed form.
pub fn weighted_harmonic(a: &SpdMatrix, b: &SpdMatrix, w: f64) -> Result<SpdMatrix> {
    check_weight(w)?;
    same_dim(a, b)?;
    let ai = a.inverse()?;
    let bi = b.inverse()?;
    let s = SymMatrix::from_raw(ai.matrix() * (1.0 - w) + bi.matrix() * w);
    SpdMatrix::from_trusted(s).inverse()
}

/// Weighted arithmetic mean `(1-w) A + w B`.
pub fn weighted_arithmetic(a: &SpdMatrix, b: &SpdMatrix, w: f64) -> Result<SpdMatrix> {
    check_weight(w)?;
    same_dim(a, b)?;
    Ok(SpdMatrix::from_trusted(SymMatrix::from_raw(
        a.matrix() * (1.0 - w) + b.matrix() * w,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::{loewner_leq, random::psd, random_spd, relative_diff};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn builtins(w: f64) -> Vec<ReprFunction> {
        vec![
            ReprFunction::power(w).unwrap(),
            ReprFunction::arithmetic(w).unwrap(),
            ReprFunction::harmonic(w).unwrap(),
            ReprFunction::logarithmic(),
        ]
    }

    #[test]
    fn builtins_are_normalized_and_screened() {
        for w in [0.1, 0.5, 0.9] {
            for f in builtins(w) {
                assert_eq!(f.eval(1.0), 1.0, "{}", f.name());
                f.screen().unwrap();
            }
        }
    }

    #[test]
    fn log_kernel_is_continuous_across_the_series_switch() {
        for t in [1.0 - 1.0001e-4, 1.0 - 0.9999e-4, 1.0 + 0.9999e-4, 1.0 + 1.0001e-4] {
            let direct = (t - 1.0) / f64::ln(t);
            assert!((log_mean_kernel(t) - direct).abs() < 1e-11, "t={t}");
        }
        assert_eq!(log_mean_kernel(1.0), 1.0);
    }

    #[test]
    fn derivative_recovery() {
        assert_eq!(repr_derivative_at_one(&ReprFunction::power(0.3).unwrap()).unwrap(), 0.3);
        assert_eq!(repr_derivative_at_one(&ReprFunction::logarithmic()).unwrap(), 0.5);
        assert_eq!(repr_derivative_at_one(&ReprFunction::arithmetic(0.3).unwrap()).unwrap(), 0.3);
        // finite difference of the logarithmic kernel, independent of the stored value
        let fd = ReprFunction::logarithmic().numeric_derivative_at_one();
        assert!((fd - 0.5).abs() < 1e-9);
    }

    #[test]
    fn custom_functions_are_screened() {
        assert!(ReprFunction::custom("sqrt", f64::sqrt, 0.5).is_ok());
        assert!(matches!(
            ReprFunction::custom("sqrt", f64::sqrt, 0.4),
            Err(Error::InconsistentDerivative { .. })
        ));
        assert!(ReprFunction::custom("shifted", |t| t.sqrt() + 0.1, 0.5).is_err());
        assert!(ReprFunction::custom("decreasing", |t| 1.0 / t, 0.0).is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!(ReprFunction::parse("power:0.25").unwrap().weight(), 0.25);
        assert_eq!(ReprFunction::parse("geometric").unwrap().weight(), 0.5);
        assert_eq!(ReprFunction::parse("logarithmic").unwrap().weight(), 0.5);
        assert!(ReprFunction::parse("power").is_err());
        assert!(ReprFunction::parse("power:1.5").is_err());
        assert!(ReprFunction::parse("bogus").is_err());
    }

    #[test]
    fn arithmetic_representing_function_gives_affine_mean() {
        let f = ReprFunction::arithmetic(0.3).unwrap();
        for seed in 0..10 {
            let a = random_spd(3, 20.0, seed).unwrap();
            let b = random_spd(3, 20.0, seed + 100).unwrap();
            let m = binary_mean(&f, &a, &b).unwrap();
            let expect = weighted_arithmetic(&a, &b, 0.3).unwrap();
            assert!(m.max_abs_diff(&expect) <= 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn geometric_mean_of_commuting_and_identity_cases() {
        let g = binary_mean(
            &ReprFunction::power(0.5).unwrap(),
            &SpdMatrix::diag(&[1.0, 4.0]).unwrap(),
            &SpdMatrix::diag(&[4.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert!(g.max_abs_diff(&SymMatrix::diag(&[2.0, 2.0])) < 1e-14);

        let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let g = binary_mean(&ReprFunction::power(0.5).unwrap(), &a, &SpdMatrix::identity(2)).unwrap();
        assert!(g.max_abs_diff(&a.sqrt().unwrap()) < 1e-14);
    }

    #[test]
    fn weighted_geometric_examples() {
        let a = random_spd(3, 10.0, 1).unwrap();
        let b = random_spd(3, 10.0, 2).unwrap();
        assert_eq!(weighted_geometric(&a, &b, 0.0).unwrap(), a);
        assert_eq!(weighted_geometric(&a, &b, 1.0).unwrap(), b);
        assert!(weighted_geometric(&a, &b, 1.2).is_err());

        let s = weighted_geometric(
            &SpdMatrix::scalar(1, 1.0).unwrap(),
            &SpdMatrix::scalar(1, 9.0).unwrap(),
            0.5,
        )
        .unwrap();
        assert!((s.matrix()[(0, 0)] - 3.0).abs() < 1e-15);

        for w in [0.2, 0.5, 0.7] {
            let x = weighted_geometric(&a, &b, w).unwrap();
            let y = binary_mean(&ReprFunction::power(w).unwrap(), &a, &b).unwrap();
            assert!(x.max_abs_diff(&y) <= 1e-12);
            let z = weighted_geometric(&b, &a, 1.0 - w).unwrap();
            assert!(relative_diff(&x, &z).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn geometric_mean_solves_riccati_equation() {
        // X A^{-1} X = B characterizes A #_{1/2} B
        let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let b = SpdMatrix::diag(&[3.0, 1.0]).unwrap();
        let x = weighted_geometric(&a, &b, 0.5).unwrap();
        let lhs = x.matrix() * a.inverse().unwrap().matrix() * x.matrix();
        assert!((lhs - b.matrix()).amax() <= 1e-10);
    }

    #[test]
    fn logarithmic_mean_examples() {
        let a = random_spd(2, 10.0, 4).unwrap();
        let m = logarithmic_mean_2(&a, &a, 16).unwrap();
        assert!(relative_diff(&m, &a).unwrap() < 1e-14);

        let s = logarithmic_mean_2(
            &SpdMatrix::scalar(1, 1.0).unwrap(),
            &SpdMatrix::scalar(1, E * E).unwrap(),
            64,
        )
        .unwrap();
        assert!((s.matrix()[(0, 0)] - (E * E - 1.0) / 2.0).abs() < 1e-13);

        let d = logarithmic_mean_2(
            &SpdMatrix::diag(&[1.0, 2.0]).unwrap(),
            &SpdMatrix::diag(&[4.0, 2.0]).unwrap(),
            64,
        )
        .unwrap();
        assert!(d.max_abs_diff(&SymMatrix::diag(&[3.0 / 4f64.ln(), 2.0])) < 1e-13);
    }

    #[test]
    fn quadrature_matches_closed_form_logarithmic_mean() {
        let f = ReprFunction::logarithmic();
        for seed in 0..10 {
            let a = random_spd(3, 1e3, seed).unwrap();
            let b = random_spd(3, 1e3, seed + 50).unwrap();
            let q = logarithmic_mean_2(&a, &b, 64).unwrap();
            let c = binary_mean(&f, &a, &b).unwrap();
            assert!(relative_diff(&q, &c).unwrap() <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn reduction_to_scalars() {
        for f in builtins(0.35) {
            for t in [1e-3, 0.5, 1.0, 7.0, 1e3] {
                let m = binary_mean(&f, &SpdMatrix::identity(3), &SpdMatrix::scalar(3, t).unwrap())
                    .unwrap();
                assert!(m.max_abs_diff(&SymMatrix::identity(3).scale(f.eval(t))) <= 1e-12);
            }
        }
    }

    #[test]
    fn homogeneity_monotonicity_and_bracketing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (k, f) in builtins(0.4).into_iter().enumerate() {
            let w = f.weight();
            for seed in 0..25u64 {
                let s = 1000 * k as u64 + seed;
                let a = random_spd(3, 50.0, s).unwrap();
                let b = random_spd(3, 50.0, s + 500).unwrap();
                let m = binary_mean(&f, &a, &b).unwrap();

                let c = 3.7;
                let scaled = binary_mean(&f, &a.scale_pos(c).unwrap(), &b.scale_pos(c).unwrap()).unwrap();
                assert!(relative_diff(&scaled, &m.scale_pos(c).unwrap()).unwrap() <= 1e-10);

                let a2 = SpdMatrix::from_sym(a.as_sym() + &psd(&mut rng, 3, 1, 2.0)).unwrap();
                let b2 = SpdMatrix::from_sym(b.as_sym() + &psd(&mut rng, 3, 2, 2.0)).unwrap();
                let m2 = binary_mean(&f, &a2, &b2).unwrap();
                assert!(loewner_leq(&m, &m2, 1e-9).unwrap(), "{} monotonicity", f.name());

                let h = weighted_harmonic(&a, &b, w).unwrap();
                let ar = weighted_arithmetic(&a, &b, w).unwrap();
                assert!(loewner_leq(&h, &m, 1e-9).unwrap(), "{} lower", f.name());
                assert!(loewner_leq(&m, &ar, 1e-9).unwrap(), "{} upper", f.name());
            }
        }
    }
}
