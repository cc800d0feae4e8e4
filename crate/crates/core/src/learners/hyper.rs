use serde::{Deserialize, Serialize};

use super::{Algorithm, FeedbackMode};
use crate::error::{Error, Result};
use crate::game_tree::{descendant_counts, GameTree};

pub const DEFAULT_DELTA: f64 = 0.05;

/// Multiplier of the full-feedback learning rate.
pub const DEFAULT_ETA_CONST: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub eta: f64,
    /// Implicit-exploration bonus for bandit estimators.
    pub gamma: f64,
    /// Incremental forms recompute their state from the cumulative matrix this often.
    #[serde(default)]
    pub resync_every: Option<usize>,
    /// Largest vertex set the enumeration learners accept.
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

fn default_cap() -> usize {
    100_000
}

impl Hyper {
    pub fn new(eta: f64, gamma: f64) -> Self {
        Hyper { eta, gamma, resync_every: None, enumeration_cap: default_cap() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.eta)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("exploration bonus must be nonnegative, got {}", self.gamma)));
        }
        if self.resync_every == Some(0) {
            return Err(Error::Config("resync period must be positive".into()));
        }
        Ok(())
    }
}

/// `ι = log(10 X A / δ)`, the log factor of the balanced bandit rates.
pub fn iota(tree: &GameTree, delta: f64) -> f64 {
    (10.0 * tree.num_sequences() as f64 / delta).ln()
}

/// Log factor of the rates for `algorithm` under `mode`: `log(X A)` with full feedback,
/// `log(3 X A / δ)` for the unbalanced bandit learners and [`iota`] for the balanced ones.
pub fn log_factor(tree: &GameTree, algorithm: Algorithm, mode: FeedbackMode, delta: f64) -> f64 {
    let xa = tree.num_sequences() as f64;
    match (mode, algorithm.is_balanced()) {
        (FeedbackMode::Full, _) => xa.ln(),
        (FeedbackMode::Bandit, false) => (3.0 * xa / delta).ln(),
        (FeedbackMode::Bandit, true) => iota(tree, delta),
    }
}

/// Learning rate and bonus tuned for horizon `t`.
pub fn default_hyper(tree: &GameTree, algorithm: Algorithm, mode: FeedbackMode, t: usize, delta: f64, eta_const: f64) -> Hyper {
    let t = t.max(1) as f64;
    let h = tree.horizon() as f64;
    let xa = tree.num_sequences() as f64;
    let norm = descendant_counts(tree).policy_norm as f64;
    let a = tree.num_actions() as f64;
    let io = log_factor(tree, algorithm, mode, delta);
    match (mode, algorithm.is_balanced()) {
        (FeedbackMode::Full, _) => Hyper::new(eta_const * (norm * io / (h * h * t)).sqrt(), 0.0),
        (FeedbackMode::Bandit, false) => Hyper::new((norm * a.ln() / (h * xa * t)).sqrt(), (norm * io / (xa * t)).sqrt()),
        (FeedbackMode::Bandit, true) => Hyper::new((xa * io / (h.powi(4) * t)).sqrt(), 2.0 * (xa * io / (h * h * t)).sqrt()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_tree::tree::fixtures::single;

    #[test]
    fn single_infoset_full_feedback() {
        let t = single();
        let hp = default_hyper(&t, Algorithm::EfceOmd, FeedbackMode::Full, 100, 0.05, 2.0);
        assert!((hp.eta - 2.0 * (2f64.ln() / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(hp.gamma, 0.0);
        assert!(Hyper::new(0.0, 0.0).validate().is_err());
    }
}
