//! Online learners over sequence-form policies behind one [`Learner`] interface.

mod hyper;
mod phi_hedge;
mod snapshot;
mod trigger_omd;
mod vertex;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{densify, ix_estimator, LossMatrix};
use crate::game_tree::{GameTree, SequencePolicy, Trajectory};
use crate::scalar::Real;
use crate::trigger_set::TriggerProfile;

pub use hyper::{default_hyper, iota, log_factor, Hyper, DEFAULT_DELTA, DEFAULT_ETA_CONST};
pub use phi_hedge::PhiHedge;
pub use snapshot::{Snapshot, SnapshotState, SNAPSHOT_VERSION};
pub use trigger_omd::TriggerOmd;
pub use vertex::{DilatedOmd, VertexMwu};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Multiplicative weights over enumerated trigger vertices.
    PhiHedge,
    /// Trigger log-partition gradient at the cumulative matrix.
    EfceOmd,
    /// Same iterates through one-step increments.
    EfceOmdInc,
    BalancedEfceOmd,
    BalancedEfceOmdInc,
    /// Multiplicative weights over enumerated vertices.
    VertexMwu,
    /// Dilated-entropy regularized leader, via the vertex recursion at the cumulative loss.
    DilatedOmd,
    /// Dilated-entropy mirror descent, one step at a time.
    DilatedOmdInc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::PhiHedge,
        Algorithm::EfceOmd,
        Algorithm::EfceOmdInc,
        Algorithm::BalancedEfceOmd,
        Algorithm::BalancedEfceOmdInc,
        Algorithm::VertexMwu,
        Algorithm::DilatedOmd,
        Algorithm::DilatedOmdInc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::PhiHedge => "phi-hedge",
            Algorithm::EfceOmd => "efce-omd",
            Algorithm::EfceOmdInc => "efce-omd-inc",
            Algorithm::BalancedEfceOmd => "balanced-efce-omd",
            Algorithm::BalancedEfceOmdInc => "balanced-efce-omd-inc",
            Algorithm::VertexMwu => "vertex-mwu",
            Algorithm::DilatedOmd => "dilated-omd",
            Algorithm::DilatedOmdInc => "dilated-omd-inc",
        }
    }

    /// Minimizes trigger regret (as opposed to external regret).
    pub fn is_trigger(self) -> bool {
        !matches!(self, Algorithm::VertexMwu | Algorithm::DilatedOmd | Algorithm::DilatedOmdInc)
    }

    pub fn is_balanced(self) -> bool {
        matches!(self, Algorithm::BalancedEfceOmd | Algorithm::BalancedEfceOmdInc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackMode {
    #[default]
    Full,
    Bandit,
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackMode::Full => "full",
            FeedbackMode::Bandit => "bandit",
        })
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FeedbackMode::Full),
            "bandit" => Ok(FeedbackMode::Bandit),
            _ => Err(Error::Config(format!("unknown feedback mode `{s}`"))),
        }
    }
}

/// What a learner sees after playing its current policy.
#[derive(Clone, Copy, Debug)]
pub enum Feedback<'a, R> {
    /// The expected loss vector.
    Full(&'a [R]),
    /// One sampled episode; the learner builds its own estimator.
    Bandit(&'a Trajectory),
    /// An explicit loss matrix (trigger learners only).
    Matrix(&'a LossMatrix<R>),
}

pub trait Learner<R: Real>: Send {
    fn algorithm(&self) -> Algorithm;

    fn hyper(&self) -> &Hyper;

    /// Number of feedback rounds observed so far.
    fn episode(&self) -> usize;

    /// Policy to play in the next episode.
    fn policy(&self) -> &SequencePolicy<R>;

    /// The trigger profile whose fixed point is [`Learner::policy`], if any.
    fn profile(&self) -> Option<&TriggerProfile<R>> {
        None
    }

    fn observe(&mut self, feedback: Feedback<'_, R>) -> Result<()>;

    fn snapshot(&self) -> Snapshot;
}

/// Loss vector for learners that do not use the adaptive estimator family.
pub(crate) fn loss_vector<R: Real>(tree: &GameTree, feedback: &Feedback<'_, R>, mu: &[R], gamma: R) -> Result<Vec<R>> {
    match feedback {
        Feedback::Full(l) => {
            if l.len() != tree.num_sequences() {
                return Err(Error::Dimension { expected: tree.num_sequences(), got: l.len() });
            }
            Ok(l.to_vec())
        }
        Feedback::Bandit(traj) => Ok(densify(tree.num_sequences(), &ix_estimator(tree, traj, mu, gamma)?)),
        Feedback::Matrix(_) => Err(Error::Config("this learner takes loss vectors".into())),
    }
}

/// A fresh learner at episode zero.
pub fn new_learner<R: Real>(tree: Arc<GameTree>, algorithm: Algorithm, hyper: Hyper) -> Result<Box<dyn Learner<R>>> {
    hyper.validate()?;
    Ok(match algorithm {
        Algorithm::PhiHedge => Box::new(PhiHedge::new(tree, hyper)?),
        Algorithm::EfceOmd
        | Algorithm::EfceOmdInc
        | Algorithm::BalancedEfceOmd
        | Algorithm::BalancedEfceOmdInc => Box::new(TriggerOmd::new(tree, algorithm, hyper)?),
        Algorithm::VertexMwu => Box::new(VertexMwu::new(tree, hyper)?),
        Algorithm::DilatedOmd | Algorithm::DilatedOmdInc => Box::new(DilatedOmd::new(tree, algorithm, hyper)?),
    })
}

/// Rebuilds a learner from a snapshot taken on the same tree.
pub fn restore_learner<R: Real>(tree: Arc<GameTree>, snapshot: &Snapshot) -> Result<Box<dyn Learner<R>>> {
    if snapshot.version != SNAPSHOT_VERSION {
        return Err(Error::Config(format!("unsupported snapshot version {}", snapshot.version)));
    }
    let hyper = snapshot.hyper.clone();
    let ep = snapshot.episode;
    let st = &snapshot.state;
    Ok(match snapshot.algorithm {
        Algorithm::PhiHedge => Box::new(PhiHedge::restore(tree, hyper, ep, st)?),
        a @ (Algorithm::EfceOmd | Algorithm::EfceOmdInc | Algorithm::BalancedEfceOmd | Algorithm::BalancedEfceOmdInc) => {
            Box::new(TriggerOmd::restore(tree, a, hyper, ep, st)?)
        }
        Algorithm::VertexMwu => Box::new(VertexMwu::restore(tree, hyper, ep, st)?),
        a @ (Algorithm::DilatedOmd | Algorithm::DilatedOmdInc) => Box::new(DilatedOmd::restore(tree, a, hyper, ep, st)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert!("cfr".parse::<Algorithm>().is_err());
        assert_eq!("bandit".parse::<FeedbackMode>().unwrap(), FeedbackMode::Bandit);
    }
}
