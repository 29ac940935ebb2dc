//! Two-variable checks: the harmonic/arithmetic sandwich of a representing
//! function, the weight criterion `(1-w) A <= w B` for perturbed means, its
//! converse, and the two exponential limit formulas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{perturbed_identity, LambdaGrid};
use crate::error::{Error, Result};
use crate::kubo_ando::{binary_mean, log_grid, ReprFunction};
use crate::report::VerdictReport;
use crate::spd::{loewner_margin, random, relative_diff, SpdMatrix, SymMatrix};
use crate::tol;

fn sandwich_extremes(f: &ReprFunction, w: f64) -> (f64, f64) {
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for t in log_grid(tol::SCALAR_GRID_POINTS) {
        let v = f.eval(t);
        let scale = v.abs().max(1.0);
        let h = 1.0 / ((1.0 - w) + w / t);
        let a = (1.0 - w) + w * t;
        lower = lower.min((v - h) / scale);
        upper = upper.min((a - v) / scale);
    }
    (lower, upper)
}

/// Sandwich `[(1-w) + w/t]^{-1} <= f(t) <= (1-w) + w t` on the log grid.
///
/// With `w = f'(1)` both bounds must hold (slack relative to `max(1, f(t))`,
/// floor [`tol::SANDWICH`]). Conversely, for every probe weight under which
/// the sandwich holds, the finite-difference derivative of `f` at 1 must
/// equal that weight to [`tol::FD_AGREEMENT`]. An empty `probes` uses
/// `f'(1)` and offsets of `+-0.01`, `+-0.1` inside `(0, 1)`.
pub fn verify_lemma2(f: &ReprFunction, probes: &[f64]) -> VerdictReport {
    let w = f.weight();
    let mut report = VerdictReport::new(format!("lemma2/{}", f.name()));
    let (lower, upper) = sandwich_extremes(f, w);
    report.direction("harmonic <= f", lower >= -tol::SANDWICH, lower);
    report.direction("f <= arithmetic", upper >= -tol::SANDWICH, upper);

    let probes: Vec<f64> = if probes.is_empty() {
        [w, w - 0.01, w + 0.01, w - 0.1, w + 0.1]
            .into_iter()
            .filter(|p| *p > 0.0 && *p < 1.0)
            .collect()
    } else {
        probes.to_vec()
    };
    let numeric = f.numeric_derivative_at_one();
    let mut worst = f64::INFINITY;
    let mut fired = false;
    for p in probes {
        let (lo, up) = sandwich_extremes(f, p);
        report.grid("sandwich slack", p, lo.min(up));
        if lo >= -tol::SANDWICH && up >= -tol::SANDWICH {
            fired = true;
            worst = worst.min(tol::FD_AGREEMENT - (numeric - p).abs());
        }
    }
    if fired {
        report.direction("sandwich => derivative", worst >= 0.0, worst);
    } else {
        report.vacuous_direction("sandwich => derivative");
    }
    report.note(format!("finite-difference f'(1) = {numeric:.12}"));
    report
}

#[derive(Clone, Copy, Debug)]
struct LambdaSample {
    lambda: f64,
    slack: f64,
}

/// Smallest eigenvalue of `I - (f(I + l A) sigma f(I - l B))` per grid `l`;
/// grid points where an argument leaves the positive cone are `None`.
fn mean_slacks(
    f: &ReprFunction,
    sigma: &ReprFunction,
    a: &SymMatrix,
    b: &SymMatrix,
    grid: &LambdaGrid,
) -> Result<Vec<Option<LambdaSample>>> {
    let ea = a.eig()?;
    let eb = b.scale(-1.0).eig()?;
    let out: Vec<Result<Option<LambdaSample>>> = grid
        .values()
        .par_iter()
        .map(|&lambda| {
            let wrap = |e| Error::AtLambda {
                lambda,
                source: Box::new(e),
            };
            let x = perturbed_identity(f, &ea, lambda).map_err(wrap)?;
            let y = perturbed_identity(f, &eb, lambda).map_err(wrap)?;
            let (Some(x), Some(y)) = (x, y) else {
                return Ok(None);
            };
            let m = binary_mean(sigma, &x, &y).map_err(wrap)?;
            let slack = -(m.max_eigenvalue().map_err(wrap)? - 1.0);
            Ok(Some(LambdaSample { lambda, slack }))
        })
        .collect();
    out.into_iter().collect()
}

fn check_nonconstant(f: &ReprFunction, sigma: &ReprFunction) -> Result<f64> {
    if !(f.weight() > 0.0) {
        return Err(Error::InvalidParameter(format!("{} must have f'(1) > 0", f.name())));
    }
    let w = sigma.weight();
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{} must have weight in (0, 1), got {w}",
            sigma.name()
        )));
    }
    Ok(w)
}

/// Checks `(1-w) A <= w B  <=>  f(I + l A) sigma f(I - l B) <= I` for all
/// grid `l` at or below the threshold, with `w = sigma'(1)`.
///
/// Forward: when the hypothesis holds, the mean slack must stay above
/// `-`[`tol::MEAN_INEQUALITY`]. Converse: when the hypothesis fails by more
/// than [`tol::HYPOTHESIS_RECOVERY`], a violation must show up on the grid and
/// the slack at the smallest `l` must match the first-order prediction
/// `l f'(1) lambda_min(w B - (1-w) A)` within [`tol::RATE_FACTOR`].
pub fn verify_theorem31(
    f: &ReprFunction,
    sigma: &ReprFunction,
    a: &SymMatrix,
    b: &SymMatrix,
    grid: &LambdaGrid,
) -> Result<VerdictReport> {
    let w = check_nonconstant(f, sigma)?;
    let lhs = a.scale(1.0 - w);
    let rhs = b.scale(w);
    let margin = loewner_margin(&lhs, &rhs)?;
    let raw_margin = (&rhs - &lhs).min_eigenvalue()?;
    let samples = mean_slacks(f, sigma, a, b, grid)?;

    let mut report = VerdictReport::new(format!("thm31/{}/{}", f.name(), sigma.name()));
    let mut skipped = Vec::new();
    let mut small = Vec::new();
    for (lambda, s) in grid.values().iter().zip(&samples) {
        match s {
            Some(s) => {
                report.grid("mean slack", s.lambda, s.slack);
                if s.lambda <= grid.threshold() {
                    small.push(*s);
                }
            }
            None => skipped.push(*lambda),
        }
    }
    if !skipped.is_empty() {
        report.note(format!("skipped lambda (argument not positive definite): {skipped:?}"));
    }
    if small.is_empty() {
        return Err(Error::InvalidParameter(
            "no grid value below the threshold keeps both arguments positive definite".into(),
        ));
    }
    let min_small = small.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    let hyp_holds = margin >= -tol::SANDWICH;
    let ineq_holds = min_small >= -tol::MEAN_INEQUALITY;

    if hyp_holds {
        report.direction("(1-w)A <= wB => mean <= I", ineq_holds, min_small);
    } else {
        report.vacuous_direction("(1-w)A <= wB => mean <= I");
    }

    if margin < -tol::HYPOTHESIS_RECOVERY {
        let detected = -min_small - tol::MEAN_INEQUALITY;
        report.direction("mean <= I => (1-w)A <= wB", !ineq_holds, detected);
        let last = small.last().expect("nonempty");
        let predicted = f.weight() * raw_margin;
        let ratio = (last.slack / last.lambda) / predicted;
        report.grid("rate ratio", last.lambda, ratio);
        let rate_slack = (ratio - 1.0 / tol::RATE_FACTOR).min(tol::RATE_FACTOR - ratio);
        report.direction("first-order rate", rate_slack >= 0.0, rate_slack);
    } else if ineq_holds {
        let s = margin + tol::HYPOTHESIS_RECOVERY;
        report.direction("mean <= I => (1-w)A <= wB", s >= 0.0, s);
    } else {
        report.vacuous_direction("mean <= I => (1-w)A <= wB");
    }
    if !report.passed {
        report.witness = Some(json!({
            "A": a,
            "B": b,
            "w": w,
            "hypothesis_margin": margin,
            "min_mean_slack": min_small,
        }));
    }
    Ok(report)
}

/// Random built-in representing function with positive derivative at 1.
pub(crate) fn random_builtin<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> ReprFunction {
    let w = rng.random_range(lo..=hi);
    match rng.random_range(0..4) {
        0 => ReprFunction::power(w),
        1 => ReprFunction::arithmetic(w),
        2 => ReprFunction::harmonic(w),
        _ => Ok(ReprFunction::logarithmic()),
    }
    .expect("weight drawn inside [0, 1]")
}

/// Seeded instance `(f, sigma, A, B)` with random built-in `f` and `sigma`
/// and `(A, B)` from [`weight_criterion_pair`] at `w = sigma'(1)`.
pub fn theorem31_instance(
    seed: u64,
    dim: usize,
    holds: bool,
) -> Result<(ReprFunction, ReprFunction, SymMatrix, SymMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_builtin(&mut rng, 0.1, 1.0);
    let sigma = random_builtin(&mut rng, 0.1, 0.9);
    let (a, b) = pair_from(&mut rng, dim, sigma.weight(), holds)?;
    Ok((f, sigma, a, b))
}

/// Seeded `(A, B)`: `A` symmetric with spectrum in `[-1, 1]`,
/// `B = ((1-w) A + P) / w` when `holds`, `((1-w) A - P) / w` otherwise, with
/// `P` a random nonzero PSD matrix.
pub fn weight_criterion_pair(seed: u64, dim: usize, w: f64, holds: bool) -> Result<(SymMatrix, SymMatrix)> {
    pair_from(&mut ChaCha8Rng::seed_from_u64(seed), dim, w, holds)
}

fn pair_from<R: Rng + ?Sized>(rng: &mut R, dim: usize, w: f64, holds: bool) -> Result<(SymMatrix, SymMatrix)> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidParameter(format!("weight {w} outside (0, 1)")));
    }
    let a = random::sym(rng, dim, 1.0);
    let rank = rng.random_range(1..=dim);
    let scale = rng.random_range(0.2..1.0);
    let p = random::psd(rng, dim, rank, scale);
    let shifted = if holds { &a.scale(1.0 - w) + &p } else { &a.scale(1.0 - w) - &p };
    Ok((a, shifted.scale(1.0 / w)))
}

/// Scalar probe `f(1 + l t w) sigma f(1 - l t (1-w)) - 1`.
fn converse_probe(f: &ReprFunction, sigma: &ReprFunction, w: f64, t: f64, lambda: f64) -> f64 {
    let x = f.eval(1.0 + lambda * t * w);
    let y = f.eval(1.0 - lambda * t * (1.0 - w));
    x * sigma.eval(y / x) - 1.0
}

/// Empirical converse of the weight criterion.
///
/// When `|sigma'(1) - w| > `[`tol::CONVERSE_GAP`], the scalar probe
/// `A = w t I`, `B = (1-w) t I` (which satisfies `(1-w) A <= w B`) must break
/// the mean inequality on the grid for every `t` with
/// `t (w - sigma'(1)) > 0`, at the first-order rate `f'(1) t (w - sigma'(1))`.
/// `samples` random `(f, t)` probes are drawn after the two fixed probes
/// `f = t^{1/2}`, `t = +-1`.
pub fn verify_prop_converse(sigma: &ReprFunction, w: f64, samples: usize, seed: u64) -> Result<VerdictReport> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidParameter(format!("weight {w} outside (0, 1)")));
    }
    let grid = LambdaGrid::default();
    let phi1 = sigma.numeric_derivative_at_one();
    let gap = w - phi1;
    let mut report = VerdictReport::new(format!("converse/{}/w={w}", sigma.name()));
    if gap.abs() <= tol::CONVERSE_GAP {
        report.direction("derivative matches weight", true, tol::CONVERSE_GAP - gap.abs());
        return Ok(report);
    }
    report.note(format!("sigma'(1) = {phi1:.9} differs from w = {w}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sqrt = ReprFunction::power(0.5)?;
    let mut probes = vec![(sqrt.clone(), 1.0), (sqrt, -1.0)];
    for _ in 0..samples {
        let f = random_builtin(&mut rng, 0.1, 1.0);
        let mag = rng.random_range(0.5..=2.0);
        let t = if rng.random_bool(0.5) { mag } else { -mag };
        probes.push((f, t));
    }
    let mut witness = None;
    let mut missed = 0usize;
    let mut worst_rate = f64::INFINITY;
    let mut signed = 0usize;
    for (f, t) in &probes {
        if t * gap <= 0.0 {
            continue;
        }
        signed += 1;
        let values: Vec<(f64, f64)> = grid.small().map(|l| (l, converse_probe(f, sigma, w, *t, l))).collect();
        match values.iter().find(|(_, v)| *v > tol::SANDWICH) {
            Some(&(lambda, value)) => {
                if witness.is_none() {
                    witness = Some(json!({
                        "f": f.name(),
                        "t": t,
                        "lambda": lambda,
                        "value": value,
                        "A": format!("{} I", w * t),
                        "B": format!("{} I", (1.0 - w) * t),
                    }));
                }
            }
            None => missed += 1,
        }
        let &(l, v) = values.last().expect("grid has small values");
        let ratio = (v / l) / (f.weight() * t * gap);
        report.grid("rate ratio", *t, ratio);
        worst_rate = worst_rate.min((ratio - 1.0 / tol::RATE_FACTOR).min(tol::RATE_FACTOR - ratio));
    }
    let found = witness.is_some();
    report.direction("violation found", found, if found { 0.0 } else { -1.0 });
    report.direction(
        "every signed probe violates",
        missed == 0,
        -(missed as f64),
    );
    report.direction("first-order rate", worst_rate >= 0.0, worst_rate);
    report.note(format!("{signed} of {} probes had t (w - sigma'(1)) > 0", probes.len()));
    report.witness = witness;
    Ok(report)
}

fn decay_direction(report: &mut VerdictReport, label: &str, errors: &[(f64, f64)]) {
    const TAIL: usize = 8;
    if errors.len() < TAIL {
        report.direction(format!("{label}: monotone decay"), false, -1.0);
        report.note(format!("{label}: only {} usable grid points", errors.len()));
        return;
    }
    let tail = &errors[errors.len() - TAIL..];
    let worst_step = tail
        .windows(2)
        .map(|p| p[0].1 - p[1].1)
        .fold(f64::INFINITY, f64::min);
    report.direction(format!("{label}: monotone decay"), worst_step >= 0.0, worst_step);
    let last = tail[TAIL - 1].1;
    report.direction(format!("{label}: final error"), last <= tol::LIMIT_FINAL, tol::LIMIT_FINAL - last);
}

/// Limit formulas, errors relative to `max(1, ||target||)`:
///
/// 1. `f(I + l A)^{1/l} -> exp(f'(1) A)` as `l -> 0`;
/// 2. `[(1-w) B^p + w C^p]^{1/p} -> exp((1-w) log B + w log C)` as `p -> 0`.
///
/// Both run over `grid` (as `l` and as `p`). Each passes iff its errors are
/// non-increasing over the last 8 grid points and the last one is at most
/// [`tol::LIMIT_FINAL`].
pub fn verify_limit_formulas(
    f: &ReprFunction,
    a: &SymMatrix,
    b: &SpdMatrix,
    c: &SpdMatrix,
    w: f64,
    grid: &LambdaGrid,
) -> Result<VerdictReport> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!("weight {w} outside [0, 1]")));
    }
    if b.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            found: c.dim(),
        });
    }
    let mut report = VerdictReport::new(format!("limits/{}", f.name()));

    let ea = a.eig()?;
    let d1 = f.weight();
    let target1 = ea.map(|v| (d1 * v).exp())?;
    let mut errors1 = Vec::new();
    for &l in grid.values() {
        if ea.eigenvalues.iter().any(|&v| 1.0 + l * v <= 0.0) {
            continue;
        }
        let x = ea.map_named(f.name(), |v| (f.eval(1.0 + l * v).ln() / l).exp())?;
        let e = relative_diff(&x, &target1)?;
        report.grid("f-limit error", l, e);
        errors1.push((l, e));
    }
    decay_direction(&mut report, "f(I+lA)^(1/l)", &errors1);

    let eb = b.eig()?;
    let ec = c.eig()?;
    let log_mix = &b.log()?.scale(1.0 - w) + &c.log()?.scale(w);
    let target2 = log_mix.exp()?;
    let mut errors2 = Vec::new();
    for &p in grid.values() {
        let db = eb.map(|v| (p * v.ln()).exp_m1())?;
        let dc = ec.map(|v| (p * v.ln()).exp_m1())?;
        let d = &db.scale(1.0 - w) + &dc.scale(w);
        let x = d.eig()?.map_named("p-mean", |v| (v.ln_1p() / p).exp())?;
        let e = relative_diff(&x, &target2)?;
        report.grid("p-limit error", p, e);
        errors2.push((p, e));
    }
    decay_direction(&mut report, "p-mean", &errors2);
    if !report.passed {
        report.witness = Some(json!({ "A": a, "B": b, "C": c, "w": w }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn lemma2_builtins() {
        for f in [
            ReprFunction::power(0.3).unwrap(),
            ReprFunction::logarithmic(),
            ReprFunction::harmonic(0.6).unwrap(),
            ReprFunction::arithmetic(0.7).unwrap(),
        ] {
            let r = verify_lemma2(&f, &[]);
            assert!(r.passed, "{}", r.to_json());
        }
        let r = verify_lemma2(&ReprFunction::arithmetic(0.7).unwrap(), &[]);
        assert_eq!(r.direction_named("f <= arithmetic").unwrap().worst_slack, 0.0);
    }

    #[test]
    fn lemma2_wrong_probe_breaks_the_sandwich() {
        let f = ReprFunction::power(0.3).unwrap();
        let (lo, up) = sandwich_extremes(&f, 0.4);
        assert!(lo.min(up) < -1e-6);
    }

    #[test]
    fn theorem31_identity_examples() {
        let grid = LambdaGrid::default();
        let f = ReprFunction::power(0.5).unwrap();
        let sigma = ReprFunction::power(0.5).unwrap();
        let r = verify_theorem31(&f, &sigma, &SymMatrix::identity(2).scale(-1.0), &SymMatrix::identity(2), &grid)
            .unwrap();
        assert!(r.passed, "{}", r.to_json());

        // A = I, B = 0, w = 1/2 violates the weight criterion
        let r = verify_theorem31(&f, &sigma, &SymMatrix::identity(2), &SymMatrix::zeros(2), &grid).unwrap();
        assert!(r.passed, "{}", r.to_json());
        assert!(r.direction_named("mean <= I => (1-w)A <= wB").unwrap().worst_slack > 0.0);
        assert!(r.grid_data.iter().any(|g| g.series == "mean slack" && g.value < -1e-12));
    }

    #[test]
    fn theorem31_equality_probe_has_vanishing_slack() {
        let grid = LambdaGrid::default();
        let w = 0.3;
        let f = ReprFunction::logarithmic();
        let sigma = ReprFunction::power(w).unwrap();
        let a = SymMatrix::identity(2).scale(w * 1.5);
        let b = SymMatrix::identity(2).scale((1.0 - w) * 1.5);
        let r = verify_theorem31(&f, &sigma, &a, &b, &grid).unwrap();
        assert!(r.passed, "{}", r.to_json());
        let s: Vec<f64> = r.grid_data.iter().filter(|g| g.series == "mean slack").map(|g| g.value).collect();
        assert!(s.iter().all(|v| *v >= -1e-10));
        assert!(s.last().unwrap().abs() < s[0].abs());
    }

    #[test]
    fn theorem31_random_instances() {
        let grid = LambdaGrid::default();
        for seed in 0..10 {
            for holds in [true, false] {
                let (f, sigma, a, b) = theorem31_instance(seed, 3, holds).unwrap();
                let r = verify_theorem31(&f, &sigma, &a, &b, &grid).unwrap();
                assert!(r.passed, "seed {seed} holds {holds}: {}", r.to_json());
            }
        }
    }

    #[test]
    fn converse_examples() {
        let r = verify_prop_converse(&ReprFunction::power(0.3).unwrap(), 0.3, 5, 1).unwrap();
        assert!(r.passed);
        assert!(r.witness.is_none());
        let r = verify_prop_converse(&ReprFunction::arithmetic(0.3).unwrap(), 0.3, 5, 1).unwrap();
        assert!(r.passed);
        let r = verify_prop_converse(&ReprFunction::power(0.5).unwrap(), 0.3, 20, 7).unwrap();
        assert!(r.passed, "{}", r.to_json());
        let wit = r.witness.unwrap();
        assert_eq!(wit["t"], json!(-1.0));
    }

    #[test]
    fn limit_formula_examples() {
        let grid = LambdaGrid::default();
        let f = ReprFunction::power(0.5).unwrap();
        let b = SpdMatrix::diag(&[1.0, 2.0]).unwrap();
        let c = SpdMatrix::diag(&[3.0, 0.5]).unwrap();
        let r = verify_limit_formulas(&f, &SymMatrix::zeros(2), &b, &c, 0.4, &grid).unwrap();
        assert!(r.passed, "{}", r.to_json());
        assert!(r.grid_data.iter().filter(|g| g.series == "f-limit error").all(|g| g.value == 0.0));

        // scalar a = 2: (1 + 2l)^{1/(2l)} -> e
        let r = verify_limit_formulas(&f, &SymMatrix::diag(&[2.0]), &SpdMatrix::identity(1), &SpdMatrix::identity(1), 0.5, &grid)
            .unwrap();
        assert!(r.passed, "{}", r.to_json());
        let l = grid.smallest();
        let direct = (1.0 + 2.0 * l).powf(0.5 / l);
        assert!((direct - E).abs() < 1e-5);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::sym(&mut rng, 3, 1.0);
        let b = random::spd(&mut rng, 3, 10.0).unwrap();
        let c = random::spd(&mut rng, 3, 10.0).unwrap();
        let r = verify_limit_formulas(&ReprFunction::logarithmic(), &a, &b, &c, 0.3, &grid).unwrap();
        assert!(r.passed, "{}", r.to_json());
    }
}
