use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use opmeans::lab::{
    hermitian_instance, search_p4_violation, stored_p4_witness, verify_extension_theorem, verify_lemma2,
    verify_limit_formulas, verify_log_euclidean_sandwich, verify_prop_converse, verify_theorem31,
    verify_y2013_and_f1997, weight_criterion_pair, ExtensionCase, Functional, LambdaGrid, P4Search,
};
use opmeans::log_mean::{verify_logmean_inequalities, MeanFamily, SimplexRule};
use opmeans::multi::{check_property, Mean, MeanKind, Property, PropertyAux, WeightVector};
use opmeans::spd::random;
use opmeans::{tol, Error, MatrixTuple, ReprFunction, SpdMatrix, VerdictReport};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::{ComputeArgs, Experiment, GridArgs, LabArgs, OutputArgs, RandArgs, VerifyArgs};

/// Why a command did not succeed; each maps to a stable exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    NonConvergence(String),
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::NonConvergence(m) | Failure::Verification(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_non_convergence() {
            Failure::NonConvergence(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn emit(path: Option<&Path>, text: &str) -> Outcome {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}"))),
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports are serializable")
}

fn grid_csv(reports: &[&VerdictReport]) -> String {
    let mut s = String::from("test,series,param,value\n");
    for r in reports {
        for g in &r.grid_data {
            s.push_str(&format!("{},{},{:e},{:e}\n", r.test, g.series, g.param, g.value));
        }
    }
    s
}

fn finish(reports: &[&VerdictReport], body: String, out: &OutputArgs) -> Outcome {
    let text = if out.csv { grid_csv(reports) } else { body };
    emit(out.output.as_deref(), &text)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.acceptable())
        .map(|r| r.test.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed: {}", failed.join(", "))))
    }
}

pub fn compute(args: &ComputeArgs) -> Outcome {
    let tuple = MatrixTuple::read(&args.input)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.input.display())))?;
    let kind = MeanKind::parse_with_t(&args.kind, args.t)?;
    let solver = args.solver.config();
    solver.validate()?;
    let n = tuple.matrices.len();
    let w = match (&args.weights, &tuple.weights) {
        (Some(w), _) | (None, Some(w)) => WeightVector::new(w.clone())?,
        (None, None) => WeightVector::uniform(n)?,
    };
    let outcome = Mean::with_solver(kind, solver).evaluate(&w, &tuple.matrices)?;
    let text = if args.out.csv {
        outcome
            .value
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        pretty(&json!({
            "mean": outcome.value,
            "kind": kind.to_string(),
            "iterations": outcome.iterations,
            "residual": outcome.residual,
        }))
    };
    emit(args.out.output.as_deref(), &text)
}

pub fn rand(args: &RandArgs) -> Outcome {
    if args.n == 0 {
        return Err(Failure::Input("--n must be positive".into()));
    }
    let mut rng = random::stream(args.seed, 0);
    let matrices = (0..args.n)
        .map(|_| random::spd(&mut rng, args.dim, args.cond))
        .collect::<opmeans::Result<Vec<_>>>()?;
    emit(args.out.as_deref(), &MatrixTuple::new(matrices).to_json())
}

#[derive(Serialize)]
struct SuiteReport {
    suite: String,
    seed: u64,
    passed: bool,
    inconclusive: bool,
    reports: Vec<VerdictReport>,
}

enum Suite {
    Property(Property),
    Sandwich,
    LogMean,
}

fn parse_suite(name: &str) -> Result<Vec<Suite>, Failure> {
    match name.trim().to_ascii_lowercase().as_str() {
        "sandwich" => Ok(vec![Suite::Sandwich]),
        "logmean" => Ok(vec![Suite::LogMean]),
        "all" => {
            let mut v: Vec<Suite> = Property::ALL.iter().map(|p| Suite::Property(*p)).collect();
            v.push(Suite::Sandwich);
            v.push(Suite::LogMean);
            Ok(v)
        }
        other => other
            .parse::<Property>()
            .map(|p| vec![Suite::Property(p)])
            .map_err(|_| Failure::Input(format!("unknown suite `{name}`"))),
    }
}

const PROPERTY_KINDS: [&str; 7] = ["alm", "bmp", "karcher", "power:-1", "power:-0.5", "power:0.5", "power:1"];
const LOGMEAN_KINDS: [&str; 2] = ["bmp", "karcher"];

fn parse_kinds(given: &[String], default: &[&str]) -> Result<Vec<MeanKind>, Failure> {
    let names: Vec<&str> = if given.is_empty() {
        default.to_vec()
    } else {
        given.iter().map(String::as_str).collect()
    };
    names
        .into_iter()
        .map(|k| MeanKind::parse_with_t(k, None).map_err(Failure::from))
        .collect()
}

struct Sample {
    tuple: Vec<SpdMatrix>,
    weights: WeightVector,
    aux: PropertyAux,
}

fn samples(args: &VerifyArgs) -> Result<Vec<Sample>, Failure> {
    if args.count == 0 {
        return Err(Failure::Input("--count must be positive".into()));
    }
    (0..args.count as u64)
        .map(|k| {
            let mut rng = random::stream(args.seed, k);
            let tuple = random::spd_tuple(&mut rng, args.dim, args.n, args.cond)?;
            let weights = WeightVector::new(random::simplex_point(&mut rng, args.n))?;
            let aux = PropertyAux::generate(args.seed.wrapping_add(k), &tuple)?;
            Ok(Sample { tuple, weights, aux })
        })
        .collect::<opmeans::Result<Vec<_>>>()
        .map_err(Failure::from)
}

/// Merges per-tuple reports; the first failing tuple supplies the witness.
fn aggregate(test: String, parts: Vec<VerdictReport>) -> VerdictReport {
    let mut out = VerdictReport::combine(test, &parts);
    out.witness = parts.iter().find(|p| !p.passed).and_then(|p| p.witness.clone());
    out.note(format!("{} tuples", parts.len()));
    out
}

fn weights_for(kind: MeanKind, s: &Sample) -> opmeans::Result<WeightVector> {
    if kind == MeanKind::Alm {
        WeightVector::uniform(s.tuple.len())
    } else {
        Ok(s.weights.clone())
    }
}

fn stored_p4_report(mean: &Mean, slack_tol: f64) -> opmeans::Result<VerdictReport> {
    let wit = stored_p4_witness();
    let w = WeightVector::new(wit.weights.clone())?;
    let aux = PropertyAux {
        other: Some(wit.b.clone()),
        ..PropertyAux::default()
    };
    let inner = check_property(Property::P4, mean, &w, &wit.a, &aux, slack_tol)?;
    let mut r = VerdictReport::new(format!("P4/{} (stored witness, expected fail)", mean.kind));
    r.direction("stored witness violates P4", !inner.passed, -inner.worst_slack);
    r.note(format!("P4 slack on the stored witness: {:e}", inner.worst_slack));
    r.witness = inner.witness;
    Ok(r)
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    let suites = parse_suite(&args.suite)?;
    let solver = args.solver.config();
    solver.validate()?;
    let data = samples(args)?;
    let mut reports = Vec::new();
    for suite in &suites {
        match suite {
            Suite::Property(p) => {
                for kind in parse_kinds(&args.kinds, &PROPERTY_KINDS)? {
                    let mean = Mean::with_solver(kind, solver);
                    if *p == Property::P4 && kind == MeanKind::LogEuclidean {
                        reports.push(stored_p4_report(&mean, args.slack_tol)?);
                        continue;
                    }
                    let parts = data
                        .par_iter()
                        .map(|s| check_property(*p, &mean, &weights_for(kind, s)?, &s.tuple, &s.aux, args.slack_tol))
                        .collect::<opmeans::Result<Vec<_>>>()?;
                    reports.push(aggregate(format!("{p}/{kind}"), parts));
                }
            }
            Suite::Sandwich => {
                let parts = data
                    .par_iter()
                    .map(|s| verify_log_euclidean_sandwich(&s.weights, &s.tuple))
                    .collect::<opmeans::Result<Vec<_>>>()?;
                reports.push(aggregate("sandwich/log-euclidean".into(), parts));
            }
            Suite::LogMean => {
                let rule = SimplexRule::default_for(args.n, args.seed)?;
                for kind in parse_kinds(&args.kinds, &LOGMEAN_KINDS)? {
                    if kind == MeanKind::Alm {
                        continue;
                    }
                    let family = MeanFamily::weighted(Mean::with_solver(kind, solver))?;
                    let parts = data
                        .iter()
                        .map(|s| verify_logmean_inequalities(&family, &s.tuple, &rule, tol::LOGMEAN_CHAIN))
                        .collect::<opmeans::Result<Vec<_>>>()?;
                    reports.push(aggregate(format!("logmean/{kind}"), parts));
                }
            }
        }
    }
    let suite = SuiteReport {
        suite: args.suite.clone(),
        seed: args.seed,
        passed: reports.iter().all(|r| r.acceptable()),
        inconclusive: reports.iter().any(|r| r.inconclusive),
        reports,
    };
    let refs: Vec<&VerdictReport> = suite.reports.iter().collect();
    finish(&refs, pretty(&suite), &args.out)
}

fn grid(g: &GridArgs) -> Result<LambdaGrid, Failure> {
    Ok(LambdaGrid::dyadic(g.k_min, g.k_max, g.k_threshold)?)
}

fn parse_case(name: &str) -> Result<ExtensionCase, Failure> {
    match name.trim().to_ascii_lowercase().as_str() {
        "negative" => Ok(ExtensionCase::Negative),
        "boundary" => Ok(ExtensionCase::Boundary),
        "positive" => Ok(ExtensionCase::Positive),
        other => Err(Failure::Input(format!("unknown case `{other}`"))),
    }
}

pub fn lab(args: &LabArgs) -> Outcome {
    let seed = args.seed;
    let report = match &args.experiment {
        Experiment::Lemma2 { f, probes } => verify_lemma2(&ReprFunction::parse(f)?, probes),
        Experiment::Thm31 {
            f,
            sigma,
            dim,
            violate,
            grid: g,
        } => {
            let f = ReprFunction::parse(f)?;
            let sigma = ReprFunction::parse(sigma)?;
            let (a, b) = weight_criterion_pair(seed, *dim, sigma.weight(), !violate)?;
            verify_theorem31(&f, &sigma, &a, &b, &grid(g)?)?
        }
        Experiment::Converse { sigma, w, samples } => {
            verify_prop_converse(&ReprFunction::parse(sigma)?, *w, *samples, seed)?
        }
        Experiment::Limits { f, w, dim, grid: g } => {
            let f = ReprFunction::parse(f)?;
            let mut rng = random::stream(seed, 0);
            let a = random::sym(&mut rng, *dim, 2.0);
            let bc = random::spd_tuple(&mut rng, *dim, 2, 10.0)?;
            verify_limit_formulas(&f, &a, &bc[0], &bc[1], *w, &grid(g)?)?
        }
        Experiment::Extension {
            phi,
            f,
            dim,
            n,
            case,
            x_samples,
            grid: g,
        } => {
            let phi: Functional = phi.parse()?;
            let f = ReprFunction::parse(f)?;
            let w = if phi.requires_uniform() {
                WeightVector::uniform(*n)?
            } else {
                WeightVector::new(random::simplex_point(&mut random::stream(seed, 1), *n))?
            };
            let t = hermitian_instance(seed, *dim, &w, parse_case(case)?)?;
            verify_extension_theorem(&phi, &f, &t, &w, &grid(g)?, *x_samples, seed)?
        }
        Experiment::Y2013F1997 { samples } => verify_y2013_and_f1997(*samples, seed)?,
        Experiment::P4search {
            dim,
            n,
            trials,
            kind,
            commuting,
        } => {
            let mean = Mean::new(MeanKind::parse_with_t(kind, None)?);
            let mut cfg = P4Search::new(*trials, seed, *dim);
            cfg.n = *n;
            cfg.commuting = *commuting;
            search_p4_violation(&mean, &cfg)?
        }
    };
    finish(&[&report], report.to_json(), &args.out)
}
