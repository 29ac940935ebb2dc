//! JSON interchange for matrices and matrix tuples.
//!
//! A matrix is `{"dim": d, "rows": [[...], ...]}`; a tuple file is
//! `{"matrices": [...], "weights": [...]}` with `weights` optional. Numbers are
//! written with 17 significant digits so files round-trip bit-exactly.
//! Validation happens during deserialization, so schema errors carry the
//! parser's line and column.

use std::path::Path;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::spd::{SpdMatrix, SymMatrix};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl RawMatrix {
    fn into_sym<E: de::Error>(self) -> std::result::Result<SymMatrix, E> {
        if self.dim == 0 {
            return Err(E::custom("`dim` must be positive"));
        }
        if self.rows.len() != self.dim {
            return Err(E::custom(format!(
                "`rows` has {} rows but `dim` is {}",
                self.rows.len(),
                self.dim
            )));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.dim) {
            return Err(E::custom(format!(
                "row {i} has {} entries but `dim` is {}",
                r.len(),
                self.dim
            )));
        }
        SymMatrix::from_rows(&self.rows).map_err(E::custom)
    }
}

fn full_precision(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("formatted float is valid JSON")
}

#[derive(Serialize)]
struct MatrixOut {
    dim: usize,
    rows: Vec<Vec<Box<RawValue>>>,
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| full_precision(self.matrix()[(i, j)])).collect())
            .collect();
        MatrixOut { dim: d, rows }.serialize(s)
    }
}

impl Serialize for SpdMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_sym().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RawMatrix::deserialize(d)?.into_sym()
    }
}

impl<'de> Deserialize<'de> for SpdMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let sym: SymMatrix = RawMatrix::deserialize(d)?.into_sym()?;
        SpdMatrix::from_sym(sym).map_err(de::Error::custom)
    }
}

/// A tuple of positive definite matrices with optional weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixTuple {
    pub matrices: Vec<SpdMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "weights_out")]
    pub weights: Option<Vec<f64>>,
}

fn weights_out<S: Serializer>(w: &Option<Vec<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match w {
        Some(w) => w.iter().map(|&x| full_precision(x)).collect::<Vec<_>>().serialize(s),
        None => s.serialize_none(),
    }
}

impl MatrixTuple {
    pub fn new(matrices: Vec<SpdMatrix>) -> Self {
        MatrixTuple {
            matrices,
            weights: None,
        }
    }

    /// Parses and validates a tuple file. Every matrix must share one dimension.
    pub fn from_json(text: &str) -> Result<Self> {
        let t: MatrixTuple = serde_json::from_str(text)?;
        if t.matrices.is_empty() {
            return Err(Error::InvalidParameter("`matrices` is empty".into()));
        }
        let d = t.matrices[0].dim();
        if let Some((k, m)) = t.matrices.iter().enumerate().find(|(_, m)| m.dim() != d) {
            return Err(Error::InvalidParameter(format!(
                "matrix {k} has dimension {} but matrix 0 has dimension {d}",
                m.dim()
            )));
        }
        if let Some(w) = &t.weights {
            if w.len() != t.matrices.len() {
                return Err(Error::LengthMismatch {
                    what: "weights",
                    expected: t.matrices.len(),
                    found: w.len(),
                });
            }
        }
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tuple serialization cannot fail")
    }
}
