//! Table input documents.
//!
//! A table file is a TOML document:
//!
//! ```toml
//! T = 3
//! r = 3
//! counts = [6, 4, 5, 3, 13, 10, 1, 8, 14, 2, 3, 2, 1, 3, 1, 2, 1, 2, 1, 0, 2, 0, 0, 0, 1, 1, 0]
//! scores = [1.0, 2.0, 3.0]      # optional, defaults to u_i = i
//! axis_names = ["A", "B", "C"]  # optional
//! ```
//!
//! `counts` is row-major: first axis slowest, last axis fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ScoreVector, Table};

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(rename = "T")]
    t: usize,
    r: usize,
    counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_names: Option<Vec<String>>,
}

/// A parsed table file.
#[derive(Debug, Clone, PartialEq)]
pub struct TableDocument {
    pub table: Table,
    pub scores: Option<ScoreVector>,
    pub axis_names: Option<Vec<String>>,
}

impl TableDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawDocument =
            toml::from_str(text).map_err(|e| Error::Config(format!("table file: {e}")))?;
        let table = Table::new(raw.r, raw.t, raw.counts).map_err(|e| match e {
            Error::ShapeMismatch { expected, got } => Error::Config(format!(
                "table file: field `counts` has {got} entries, expected r^T = {expected}"
            )),
            other => other,
        })?;
        let scores = match raw.scores {
            Some(u) => {
                if u.len() != raw.r {
                    return Err(Error::Config(format!(
                        "table file: field `scores` has {} entries, expected r = {}",
                        u.len(),
                        raw.r
                    )));
                }
                Some(
                    ScoreVector::new(u)
                        .map_err(|e| Error::Config(format!("table file: field `scores`: {e}")))?,
                )
            }
            None => None,
        };
        if let Some(names) = &raw.axis_names {
            if names.len() != raw.t {
                return Err(Error::Config(format!(
                    "table file: field `axis_names` has {} entries, expected T = {}",
                    names.len(),
                    raw.t
                )));
            }
        }
        Ok(Self {
            table,
            scores,
            axis_names: raw.axis_names,
        })
    }

    /// Scores from the file, or equal-interval scores.
    pub fn scores_or_default(&self) -> ScoreVector {
        self.scores
            .clone()
            .unwrap_or_else(|| ScoreVector::equal_interval(self.table.r()))
    }

    pub fn axis_name(&self, axis: usize) -> String {
        self.axis_names
            .as_ref()
            .and_then(|n| n.get(axis - 1).cloned())
            .unwrap_or_else(|| format!("X{axis}"))
    }

    pub fn to_toml(&self) -> String {
        let raw = RawDocument {
            t: self.table.t(),
            r: self.table.r(),
            counts: self.table.counts().to_vec(),
            scores: self.scores.as_ref().map(|s| s.values().to_vec()),
            axis_names: self.axis_names.clone(),
        };
        toml::to_string(&raw).expect("table document serializes")
    }
}
