//! Structured verdicts emitted by property checks and lab experiments.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One checked direction or sub-claim of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub name: String,
    pub passed: bool,
    /// Smallest observed slack; negative means the claim was violated by that much.
    #[serde(with = "slack")]
    pub worst_slack: f64,
    /// Direction held only because its hypothesis never fired.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
}

/// One sample of a swept quantity (a grid `lambda`, an exponent `p`, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub series: String,
    pub param: f64,
    pub value: f64,
}

/// Result of a verification experiment.
///
/// `passed` is always the conjunction of the direction results. An
/// `inconclusive` report (a search that found nothing, for instance) is
/// neither a pass nor a failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub test: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inconclusive: bool,
    pub directions: Vec<Direction>,
    #[serde(with = "slack")]
    pub worst_slack: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub grid_data: Vec<GridPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerdictReport {
    pub fn new(test: impl Into<String>) -> Self {
        VerdictReport {
            test: test.into(),
            passed: true,
            inconclusive: false,
            directions: Vec::new(),
            worst_slack: f64::INFINITY,
            witness: None,
            grid_data: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn direction(&mut self, name: impl Into<String>, passed: bool, worst_slack: f64) -> &mut Self {
        self.push(Direction {
            name: name.into(),
            passed,
            worst_slack,
            vacuous: false,
        })
    }

    pub fn vacuous_direction(&mut self, name: impl Into<String>) -> &mut Self {
        self.push(Direction {
            name: name.into(),
            passed: true,
            worst_slack: f64::INFINITY,
            vacuous: true,
        })
    }

    pub fn push(&mut self, d: Direction) -> &mut Self {
        self.passed &= d.passed;
        if d.worst_slack < self.worst_slack {
            self.worst_slack = d.worst_slack;
        }
        self.directions.push(d);
        self
    }

    pub fn grid(&mut self, series: &str, param: f64, value: f64) -> &mut Self {
        self.grid_data.push(GridPoint {
            series: series.to_string(),
            param,
            value,
        });
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn mark_inconclusive(&mut self) -> &mut Self {
        self.inconclusive = true;
        self
    }

    /// Recomputes `passed` from the directions.
    pub fn passed_by_directions(&self) -> bool {
        self.directions.iter().all(|d| d.passed)
    }

    /// Passed, or inconclusive by design.
    pub fn acceptable(&self) -> bool {
        self.passed || self.inconclusive
    }

    pub fn direction_named(&self, name: &str) -> Option<&Direction> {
        self.directions.iter().find(|d| d.name == name)
    }

    /// Pretty JSON; unmeasured (infinite) slacks become null.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Merges sub-reports into one, prefixing direction names with the sub-test name.
    pub fn combine(test: impl Into<String>, parts: &[VerdictReport]) -> Self {
        let mut out = VerdictReport::new(test);
        for p in parts {
            for d in &p.directions {
                out.push(Direction {
                    name: format!("{}/{}", p.test, d.name),
                    ..d.clone()
                });
            }
            out.inconclusive |= p.inconclusive;
        }
        out
    }
}

/// Slacks are `+inf` when nothing was measured; JSON has no infinity, so that maps to null.
mod slack {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
