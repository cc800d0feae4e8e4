use serde::{Deserialize, Serialize};

use super::tree::parse_seq_key;
use super::{EnvFile, GameTree};
use crate::error::{Error, Result};

/// How a realized reward is drawn from its mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSampler {
    #[default]
    Bernoulli,
    /// The mean itself is returned.
    Exact,
}

/// One episode's adversary choice: initial distribution over layer-1 infosets, per-sequence
/// transitions over that sequence's children and mean rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeEnvironment {
    /// Aligned with `tree.layer(0)`.
    pub initial: Vec<f64>,
    /// `transition[seq]` is aligned with `tree.children(seq)`.
    pub transition: Vec<Vec<f64>>,
    pub mean_reward: Vec<f64>,
    pub sampler: RewardSampler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub infoset: usize,
    pub action: usize,
    pub reward: f64,
}

/// Steps in layer order. A sequence with no children ends the episode early.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

const ROW_TOL: f64 = 1e-12;

/// Index drawn from a categorical distribution; falls back to the last positive entry on
/// round-off.
pub(crate) fn sample_categorical<G: rand::Rng + ?Sized>(probs: &[f64], rng: &mut G) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

impl EpisodeEnvironment {
    /// Uniform initial distribution and transitions, the given constant mean reward.
    pub fn uniform(tree: &GameTree, reward: f64) -> Self {
        EpisodeEnvironment {
            initial: uniform(tree.layer(0).len()),
            transition: (0..tree.num_sequences())
                .map(|s| uniform(tree.children(s).len()))
                .collect(),
            mean_reward: vec![reward; tree.num_sequences()],
            sampler: RewardSampler::Bernoulli,
        }
    }

    /// Environment from a desc block; missing entries default to uniform and zero reward.
    pub fn from_file(tree: &GameTree, desc: &EnvFile) -> Result<Self> {
        let mut env = Self::uniform(tree, 0.0);
        if !desc.initial.is_empty() {
            env.initial = vec![0.0; tree.layer(0).len()];
            for (name, &p) in &desc.initial {
                let x = tree.infoset(name)?;
                let pos = tree
                    .layer(0)
                    .iter()
                    .position(|&y| y == x)
                    .ok_or_else(|| Error::InvalidEnvironment(format!("`{name}` is not in layer 1")))?;
                env.initial[pos] = p;
            }
        }
        for (key, row) in &desc.transition {
            let (xname, a) = parse_seq_key(key)?;
            let seq = tree.seq(tree.infoset(xname)?, a);
            let kids = tree.children(seq);
            let mut dense = vec![0.0; kids.len()];
            for (name, &p) in row {
                let c = tree.infoset(name)?;
                let pos = kids.iter().position(|&k| k == c).ok_or_else(|| {
                    Error::InvalidEnvironment(format!("`{name}` is not a child of `{key}`"))
                })?;
                dense[pos] = p;
            }
            env.transition[seq] = dense;
        }
        for (key, &r) in &desc.reward {
            let (xname, a) = parse_seq_key(key)?;
            env.mean_reward[tree.seq(tree.infoset(xname)?, a)] = r;
        }
        env.validate(tree)?;
        Ok(env)
    }

    pub fn validate(&self, tree: &GameTree) -> Result<()> {
        let check_row = |row: &[f64], what: &str| -> Result<()> {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidEnvironment(format!("{what} has a negative entry")));
            }
            let total: f64 = row.iter().sum();
            if !row.is_empty() && (total - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidEnvironment(format!("{what} sums to {total}")));
            }
            Ok(())
        };
        if self.initial.len() != tree.layer(0).len() {
            return Err(Error::Dimension {
                expected: tree.layer(0).len(),
                got: self.initial.len(),
            });
        }
        check_row(&self.initial, "initial distribution")?;
        if self.transition.len() != tree.num_sequences() || self.mean_reward.len() != tree.num_sequences() {
            return Err(Error::Dimension {
                expected: tree.num_sequences(),
                got: self.transition.len().min(self.mean_reward.len()),
            });
        }
        for (s, row) in self.transition.iter().enumerate() {
            if row.len() != tree.children(s).len() {
                return Err(Error::InvalidEnvironment(format!(
                    "transition row {s} has {} entries for {} children",
                    row.len(),
                    tree.children(s).len()
                )));
            }
            check_row(row, "transition row")?;
        }
        if let Some(s) = self.mean_reward.iter().position(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidEnvironment(format!("mean reward at {s} outside [0, 1]")));
        }
        Ok(())
    }

    /// p(x): probability that the environment leads to `x` when the player's own actions
    /// along the history are taken.
    pub fn reach(&self, tree: &GameTree) -> Vec<f64> {
        let mut p = vec![0.0; tree.num_infosets()];
        for (&x, &q) in tree.layer(0).iter().zip(&self.initial) {
            p[x] = q;
        }
        for x in 0..tree.num_infosets() {
            for s in tree.seqs_of(x) {
                for (&c, &q) in tree.children(s).iter().zip(&self.transition[s]) {
                    p[c] = p[x] * q;
                }
            }
        }
        p
    }
}
