use serde::{Deserialize, Serialize};

use super::GameTree;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sequence-form policy. With `root = None` this is a full-tree policy, otherwise a subtree
/// policy rooted at that infoset and zero everywhere outside its subtree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct SequencePolicy<R = f64> {
    pub values: Vec<R>,
    pub root: Option<usize>,
}

/// Behavioral policy laid out like a sequence-form vector: entry `x * A + a` is `μ(a | x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct BehavioralPolicy<R = f64> {
    pub probs: Vec<R>,
}

impl<R: Real> BehavioralPolicy<R> {
    pub fn uniform(tree: &GameTree) -> Self {
        BehavioralPolicy {
            probs: vec![R::one() / R::of_usize(tree.num_actions()); tree.num_sequences()],
        }
    }

    pub fn action_probs(&self, tree: &GameTree, x: usize) -> &[R] {
        &self.probs[tree.seqs_of(x)]
    }
}

/// Infosets a policy is defined on: the whole tree or the subtree at `root`.
pub(crate) fn support<'a>(tree: &'a GameTree, root: Option<usize>) -> Box<dyn Iterator<Item = usize> + 'a> {
    match root {
        None => Box::new(0..tree.num_infosets()),
        Some(r) => Box::new(tree.subtree(r).iter().copied()),
    }
}

impl<R: Real> SequencePolicy<R> {
    pub fn zeros(tree: &GameTree, root: Option<usize>) -> Self {
        SequencePolicy {
            values: vec![R::zero(); tree.num_sequences()],
            root,
        }
    }

    /// Uniform behavioral policy in sequence form.
    pub fn uniform(tree: &GameTree, root: Option<usize>) -> Self {
        behavioral_to_seq(tree, &BehavioralPolicy::uniform(tree), root)
            .expect("uniform distributions are on the simplex")
    }

    /// Probability of reaching infoset `x`: the parent sequence value, or one at the root level.
    pub fn reach(&self, tree: &GameTree, x: usize) -> R {
        if self.root == Some(x) {
            return R::one();
        }
        match tree.parent_seq(x) {
            Some(p) => self.values[p],
            None if self.root.is_none() => R::one(),
            None => R::zero(),
        }
    }

    /// Largest violation of nonnegativity, flow conservation and the zero-outside-subtree rule.
    pub fn violation(&self, tree: &GameTree) -> R {
        let mut worst = R::zero();
        if self.values.len() != tree.num_sequences() {
            return R::infinity();
        }
        for &v in &self.values {
            if v < R::zero() {
                worst = worst.max(-v);
            }
            if !v.is_finite() {
                return R::infinity();
            }
        }
        let mut inside = vec![self.root.is_none(); tree.num_infosets()];
        for x in support(tree, self.root) {
            inside[x] = true;
            let mass: R = self.values[tree.seqs_of(x)].iter().copied().sum();
            worst = worst.max((mass - self.reach(tree, x)).abs());
        }
        for (x, &ins) in inside.iter().enumerate() {
            if !ins {
                for s in tree.seqs_of(x) {
                    worst = worst.max(self.values[s].abs());
                }
            }
        }
        worst
    }

    pub fn validate(&self, tree: &GameTree, tol: f64) -> Result<()> {
        let v = self.violation(tree).as_f64();
        if v > tol || v.is_nan() {
            return Err(Error::InvalidPolicy(format!(
                "sequence-form constraints violated by {v:e}"
            )));
        }
        Ok(())
    }

    pub fn dot(&self, other: &[R]) -> R {
        self.values.iter().zip(other).map(|(&a, &b)| a * b).sum()
    }

    pub fn cast<S: Real>(&self) -> SequencePolicy<S> {
        SequencePolicy {
            values: self.values.iter().map(|v| S::of(v.as_f64())).collect(),
            root: self.root,
        }
    }
}

/// Conditional action distributions. Zero-reach infosets, and infosets outside a subtree
/// policy's support, get the uniform distribution.
pub fn seq_to_behavioral<R: Real>(tree: &GameTree, policy: &SequencePolicy<R>) -> Result<BehavioralPolicy<R>> {
    if policy.values.len() != tree.num_sequences() {
        return Err(Error::Dimension {
            expected: tree.num_sequences(),
            got: policy.values.len(),
        });
    }
    if let Some(s) = policy.values.iter().position(|&v| v < R::zero() || v.is_nan()) {
        return Err(Error::InvalidPolicy(format!("entry {s} is negative")));
    }
    let mut out = BehavioralPolicy::uniform(tree);
    for x in support(tree, policy.root) {
        let seqs = tree.seqs_of(x);
        let mass: R = policy.values[seqs.clone()].iter().copied().sum();
        if mass > R::zero() {
            for s in seqs {
                out.probs[s] = policy.values[s] / mass;
            }
        }
    }
    Ok(out)
}

/// Product of behavioral probabilities along each history, starting at `root` when given.
pub fn behavioral_to_seq<R: Real>(
    tree: &GameTree,
    behavioral: &BehavioralPolicy<R>,
    root: Option<usize>,
) -> Result<SequencePolicy<R>> {
    if behavioral.probs.len() != tree.num_sequences() {
        return Err(Error::Dimension {
            expected: tree.num_sequences(),
            got: behavioral.probs.len(),
        });
    }
    let tol = 1e-12_f64.max(R::epsilon().as_f64() * 8.0 * tree.num_actions() as f64);
    let mut out = SequencePolicy::zeros(tree, root);
    for x in support(tree, root) {
        let probs = behavioral.action_probs(tree, x);
        let total: R = probs.iter().copied().sum();
        if probs.iter().any(|&p| p < R::zero() || !p.is_finite()) || (total.as_f64() - 1.0).abs() > tol {
            return Err(Error::InvalidPolicy(format!(
                "distribution at `{}` is not on the simplex",
                tree.name(x)
            )));
        }
        let reach = out.reach(tree, x);
        for (s, &p) in tree.seqs_of(x).zip(probs) {
            out.values[s] = reach * p;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_tree::tree::fixtures::{depth_two, single};

    #[test]
    fn normalizes_single_infoset() {
        let t = single();
        let p = SequencePolicy { values: vec![0.3, 0.7], root: None };
        assert_eq!(seq_to_behavioral(&t, &p).unwrap().probs, vec![0.3, 0.7]);
        let d = SequencePolicy { values: vec![1.0, 0.0], root: None };
        assert_eq!(seq_to_behavioral(&t, &d).unwrap().probs, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_reach_is_uniform() {
        let t = depth_two();
        let p = SequencePolicy { values: vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0], root: None };
        let b = seq_to_behavioral(&t, &p).unwrap();
        assert_eq!(b.action_probs(&t, t.infoset("x2a").unwrap()), &[0.5, 0.5]);
    }

    #[test]
    fn negative_entry_rejected() {
        let t = single();
        let p = SequencePolicy { values: vec![-0.1, 1.1], root: None };
        assert!(seq_to_behavioral(&t, &p).is_err());
    }

    #[test]
    fn uniform_products() {
        let t = depth_two();
        let u = SequencePolicy::<f64>::uniform(&t, None);
        assert_eq!(u.values, vec![0.5, 0.5, 0.25, 0.25, 0.25, 0.25]);
        let x2a = t.infoset("x2a").unwrap();
        let s = SequencePolicy::<f64>::uniform(&t, Some(x2a));
        assert_eq!(s.values, vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0]);
        assert_eq!(s.violation(&t), 0.0);
    }

    #[test]
    fn deterministic_has_unit_path() {
        let t = depth_two();
        let b = BehavioralPolicy { probs: vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0] };
        let s = behavioral_to_seq(&t, &b, None).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn off_simplex_rejected() {
        let t = single();
        let b = BehavioralPolicy { probs: vec![0.5, 0.6] };
        assert!(behavioral_to_seq(&t, &b, None).is_err());
    }
}
