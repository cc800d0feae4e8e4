use serde::{Deserialize, Serialize};

use super::{Algorithm, Hyper};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Learner state as plain JSON-friendly data. Values are stored as `f64`, so `f64` learners
/// resume bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub algorithm: Algorithm,
    pub hyper: Hyper,
    pub episode: usize,
    pub state: SnapshotState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SnapshotState {
    /// Log-weights over an enumerated vertex list.
    Weights { log_weights: Vec<f64> },
    /// Cumulative loss matrix, row-major.
    CumulativeMatrix { dim: usize, data: Vec<f64> },
    /// Incremental trigger state, with the cumulative matrix when resynchronization is on.
    Trigger { lambda: Vec<f64>, m: Vec<Vec<f64>>, cumulative: Option<Vec<f64>> },
    CumulativeLoss { loss: Vec<f64> },
    Behavioral { probs: Vec<f64> },
}

impl Snapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn to_f64<R: Real>(v: &[R]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

pub(crate) fn from_f64<R: Real>(v: &[f64], expected: usize) -> Result<Vec<R>> {
    if v.len() != expected {
        return Err(Error::Dimension { expected, got: v.len() });
    }
    Ok(v.iter().map(|&x| R::of(x)).collect())
}

pub(crate) fn mismatch() -> Error {
    Error::Config("snapshot state does not match the algorithm".into())
}
