//! Randomized search for monotonicity (P4) failures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multi::{Mean, MeanKind, WeightVector};
use crate::report::VerdictReport;
use crate::spd::{loewner_leq, loewner_margin, random, SpdMatrix, SymMatrix};
use crate::tol;

/// `lambda_min(G_E(B) - G_E(A))` for [`stored_p4_witness`], from an
/// independent dense-eigensolver evaluation.
pub const STORED_P4_MIN_EIGENVALUE: f64 = -0.6078419051757391;

const BATCH: u64 = 4096;

/// Search parameters. Trial `k` draws from `ChaCha8(seed)` on stream `k`, so
/// the first violating trial does not depend on the thread count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct P4Search {
    pub trials: u64,
    pub seed: u64,
    pub dim: usize,
    pub n: usize,
    pub max_cond: f64,
    /// Draw every `A_i` and every increment in one shared eigenbasis.
    pub commuting: bool,
}

impl P4Search {
    pub fn new(trials: u64, seed: u64, dim: usize) -> Self {
        P4Search {
            trials,
            seed,
            dim,
            n: 2,
            max_cond: 1e3,
            commuting: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("tuples need n >= 2, got {}", self.n)));
        }
        if !(self.max_cond >= 1.0 && self.max_cond.is_finite()) {
            return Err(Error::InvalidParameter(format!("max_cond {} must be >= 1", self.max_cond)));
        }
        Ok(())
    }

    /// `(A, B)` with `B_i = A_i + s_i v_i v_i^T`, `cond(A_i)` and `s_i`
    /// log-uniform in `[1, max_cond]` and `[1e-2, 1e2]`.
    fn draw(&self, trial: u64) -> Result<(Vec<SpdMatrix>, Vec<SpdMatrix>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let d = self.dim;
        let shared = self.commuting.then(|| random::orthogonal(&mut rng, d));
        let mut a = Vec::with_capacity(self.n);
        let mut b = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let ai = match &shared {
                Some(q) => {
                    let spectrum: Vec<f64> = (0..d)
                        .map(|_| (rng.random::<f64>() * self.max_cond.ln()).exp())
                        .collect();
                    SpdMatrix::diag(&spectrum)?.congruence_spd(&q.transpose())?
                }
                None => {
                    let cond = if d == 1 {
                        1.0
                    } else {
                        (rng.random::<f64>() * self.max_cond.ln()).exp()
                    };
                    random::spd(&mut rng, d, cond)?
                }
            };
            let v = match &shared {
                Some(q) => q.column(rng.random_range(0..d)).into_owned(),
                None => random::unit_vector(&mut rng, d),
            };
            let s = (rng.random_range(-2.0..=2.0) * std::f64::consts::LN_10).exp();
            let bump = SymMatrix::new(&v * v.transpose() * s)?;
            b.push(SpdMatrix::from_sym(ai.as_sym() + &bump)?);
            a.push(ai);
        }
        Ok((a, b))
    }
}

/// Tuples `A <= B` componentwise with `M(w; A)` not below `M(w; B)`.
#[derive(Clone, Debug, Serialize)]
pub struct P4Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    pub weights: Vec<f64>,
    pub a: Vec<SpdMatrix>,
    pub b: Vec<SpdMatrix>,
    /// `lambda_min(M(w; B) - M(w; A))`.
    pub min_eigenvalue: f64,
}

impl P4Witness {
    /// Recomputes the means and confirms `M(w; A) <= M(w; B)` fails at
    /// [`tol::LOEWNER`]; returns the fresh minimal eigenvalue.
    pub fn reverify(&self, mean: &Mean) -> Result<Option<f64>> {
        let w = WeightVector::new(self.weights.clone())?;
        let ma = mean.compute(&w, &self.a)?;
        let mb = mean.compute(&w, &self.b)?;
        if loewner_leq(ma.as_sym(), mb.as_sym(), tol::LOEWNER)? {
            return Ok(None);
        }
        Ok(Some((mb.as_sym() - ma.as_sym()).min_eigenvalue()?))
    }
}

/// `A = (diag(100, 1), [[2, 1], [1, 2]])`,
/// `B = (diag(100, 1), [[12, -9], [-9, 12]])`, uniform weights: the second
/// increment `[[10, -10], [-10, 10]]` is PSD, yet the log-Euclidean means
/// are not ordered.
pub fn stored_p4_witness() -> P4Witness {
    let m = |rows: &[[f64; 2]; 2]| {
        SpdMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("stored matrices are SPD")
    };
    let a0 = m(&[[100.0, 0.0], [0.0, 1.0]]);
    P4Witness {
        trial: None,
        weights: vec![0.5, 0.5],
        a: vec![a0.clone(), m(&[[2.0, 1.0], [1.0, 2.0]])],
        b: vec![a0, m(&[[12.0, -9.0], [-9.0, 12.0]])],
        min_eigenvalue: STORED_P4_MIN_EIGENVALUE,
    }
}

fn trial_margin(mean: &Mean, w: &WeightVector, cfg: &P4Search, trial: u64) -> Result<Option<f64>> {
    let (a, b) = cfg.draw(trial)?;
    let ma = mean.compute(w, &a)?;
    let mb = mean.compute(w, &b)?;
    let margin = loewner_margin(ma.as_sym(), mb.as_sym())?;
    Ok((margin < -tol::LOEWNER).then_some(margin))
}

/// Runs the search; the first violating trial (in trial order) wins.
pub fn search_p4_violation(mean: &Mean, cfg: &P4Search) -> Result<VerdictReport> {
    cfg.validate()?;
    let w = WeightVector::uniform(cfg.n)?;
    let mut report = VerdictReport::new(format!("p4search/{}", mean.kind));
    if cfg.dim == 1 {
        report.note("inconclusive by construction: scalars commute");
        report.passed = false;
        report.mark_inconclusive();
        return Ok(report);
    }
    let mut found = None;
    let mut start = 0;
    while start < cfg.trials && found.is_none() {
        let end = (start + BATCH).min(cfg.trials);
        let results: Vec<Result<Option<f64>>> = (start..end)
            .into_par_iter()
            .map(|k| trial_margin(mean, &w, cfg, k))
            .collect();
        for (k, r) in (start..end).zip(results) {
            if r?.is_some() {
                found = Some(k);
                break;
            }
        }
        start = end;
    }
    let Some(trial) = found else {
        report.note(format!("no violation in {} trials", cfg.trials));
        if cfg.commuting {
            report.note("inconclusive by construction: commuting tuples");
        }
        report.passed = false;
        report.mark_inconclusive();
        return Ok(report);
    };
    let (a, b) = cfg.draw(trial)?;
    let mut witness = P4Witness {
        trial: Some(trial),
        weights: w.as_slice().to_vec(),
        a,
        b,
        min_eigenvalue: 0.0,
    };
    let confirmed = witness.reverify(mean)?;
    witness.min_eigenvalue = confirmed.unwrap_or(0.0);
    report.direction("violation found", true, -witness.min_eigenvalue);
    report.direction("witness re-verified", confirmed.is_some(), -witness.min_eigenvalue);
    report.note(format!("first violation at trial {trial}"));
    report.witness = Some(serde_json::to_value(&witness)?);
    Ok(report)
}

pub fn search_p4_violation_log_euclidean(trials: u64, seed: u64, dim: usize) -> Result<VerdictReport> {
    search_p4_violation(&Mean::new(MeanKind::LogEuclidean), &P4Search::new(trials, seed, dim))
}
