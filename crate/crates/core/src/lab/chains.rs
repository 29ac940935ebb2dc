//! Order chains between means and two auxiliary norm inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::Result;
use crate::multi::{
    arithmetic_mean, harmonic_mean, karcher_mean, log_euclidean_mean, power_mean, SolverConfig, WeightVector,
};
use crate::report::VerdictReport;
use crate::spd::{loewner_margin, random, thompson_distance, SpdMatrix};
use crate::tol;

/// Loewner tolerance for the power-mean chain.
const CHAIN: f64 = 1e-8;
/// Slack floor for the Karcher comparison with weighted products of forms.
const PRODUCT_FORM: f64 = 1e-9;

/// `||H|| <= ||G_E|| <= ||A||` (relative, [`tol::LOEWNER`]) and
/// `log H <= log G_E <= log A` (margin floor [`tol::PROPERTY`]).
pub fn verify_log_euclidean_sandwich(w: &WeightVector, a: &[SpdMatrix]) -> Result<VerdictReport> {
    let h = harmonic_mean(w, a)?;
    let g = log_euclidean_mean(w, a)?;
    let ar = arithmetic_mean(w, a)?;
    let mut report = VerdictReport::new("log-euclidean sandwich");
    let (hn, gn, an) = (
        h.as_sym().spectral_norm()?,
        g.as_sym().spectral_norm()?,
        ar.as_sym().spectral_norm()?,
    );
    let lower = (gn - hn) / gn.max(1.0);
    let upper = (an - gn) / an.max(1.0);
    report.direction("||H|| <= ||G_E||", lower >= -tol::LOEWNER, lower);
    report.direction("||G_E|| <= ||A||", upper >= -tol::LOEWNER, upper);
    let (lh, lg, la) = (h.log()?, g.log()?, ar.log()?);
    let lower = loewner_margin(&lh, &lg)?;
    let upper = loewner_margin(&lg, &la)?;
    report.direction("log H <= log G_E", lower >= -tol::PROPERTY, lower);
    report.direction("log G_E <= log A", upper >= -tol::PROPERTY, upper);
    if !report.passed {
        report.witness = Some(json!({ "weights": w.as_slice(), "tuple": a }));
    }
    Ok(report)
}

const CHAIN_EXPONENTS: [f64; 3] = [-1.0, -0.5, -0.1];

/// `P_{-1} <= P_{-1/2} <= P_{-1/10} <= Karcher <= P_{1/10} <= P_{1/2} <= P_1`
/// at relative margin `1e-8`, and `d(K, P_{0.01}) <= d(K, P_{0.02})` in the
/// Thompson metric.
pub fn verify_power_mean_chain(w: &WeightVector, a: &[SpdMatrix], solver: &SolverConfig) -> Result<VerdictReport> {
    let mut chain: Vec<(String, SpdMatrix)> = Vec::new();
    for t in CHAIN_EXPONENTS {
        chain.push((format!("P({t})"), power_mean(t, w, a, solver)?.value));
    }
    let karcher = karcher_mean(w, a, solver)?.value;
    chain.push(("Karcher".into(), karcher.clone()));
    for t in CHAIN_EXPONENTS.iter().rev() {
        chain.push((format!("P({})", -t), power_mean(-t, w, a, solver)?.value));
    }
    let mut report = VerdictReport::new("power-mean chain");
    for pair in chain.windows(2) {
        let m = loewner_margin(pair[0].1.as_sym(), pair[1].1.as_sym())?;
        report.direction(format!("{} <= {}", pair[0].0, pair[1].0), m >= -CHAIN, m);
    }
    let near = thompson_distance(&karcher, &power_mean(0.01, w, a, solver)?.value)?;
    let far = thompson_distance(&karcher, &power_mean(0.02, w, a, solver)?.value)?;
    report.grid("thompson to Karcher", 0.01, near);
    report.grid("thompson to Karcher", 0.02, far);
    report.direction("d(K, P(0.01)) <= d(K, P(0.02))", near <= far, far - near);
    if !report.passed {
        report.witness = Some(json!({ "weights": w.as_slice(), "tuple": a }));
    }
    Ok(report)
}

fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<WeightVector> {
    WeightVector::new(random::simplex_point(rng, n))
}

/// On `samples` seeded inputs (`d = 3`, `n = 3`, `cond <= 100`):
/// `prod <A_i x, x>^{w_i} >= <K(w; A) x, x>` for unit `x` (relative slack,
/// floor `1e-9`), and `B = exp(log A + P)` with `P` PSD gives
/// `||A|| <= ||B||` (relative, [`tol::LOEWNER`]).
pub fn verify_y2013_and_f1997(samples: usize, seed: u64) -> Result<VerdictReport> {
    const DIM: usize = 3;
    const N: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solver = SolverConfig::default();
    let mut report = VerdictReport::new("y2013-f1997");
    let mut worst_product = f64::INFINITY;
    let mut worst_norm = f64::INFINITY;
    let mut product_witness = None;
    let mut norm_witness = None;
    for _ in 0..samples {
        let a = random::spd_tuple(&mut rng, DIM, N, 100.0)?;
        let w = random_weights(&mut rng, N)?;
        let x = random::unit_vector(&mut rng, DIM);
        let k = karcher_mean(&w, &a, &solver)?.value;
        let product = w
            .as_slice()
            .iter()
            .zip(&a)
            .map(|(wi, ai)| wi * ai.as_sym().quadratic_form(&x).ln())
            .sum::<f64>()
            .exp();
        let slack = (product - k.as_sym().quadratic_form(&x)) / product.max(1.0);
        if slack < worst_product {
            worst_product = slack;
            product_witness = Some(json!({ "weights": w.as_slice(), "tuple": a, "x": x.as_slice() }));
        }

        let cond = rng.random_range(1.0..100.0);
        let base = random::spd(&mut rng, DIM, cond)?;
        let rank = rng.random_range(1..=DIM);
        let scale = rng.random_range(0.01..2.0);
        let p = random::psd(&mut rng, DIM, rank, scale);
        let b = (&base.log()? + &p).exp()?;
        let (an, bn) = (base.as_sym().spectral_norm()?, b.as_sym().spectral_norm()?);
        let slack = (bn - an) / bn.max(1.0);
        if slack < worst_norm {
            worst_norm = slack;
            norm_witness = Some(json!({ "A": base, "B": b }));
        }
    }
    report.direction("prod <A_i x,x>^w_i >= <K x,x>", worst_product >= -PRODUCT_FORM, worst_product);
    report.direction("log A <= log B => ||A|| <= ||B||", worst_norm >= -tol::LOEWNER, worst_norm);
    if worst_product < -PRODUCT_FORM {
        report.witness = product_witness;
    } else if worst_norm < -tol::LOEWNER {
        report.witness = norm_witness;
    }
    Ok(report)
}
