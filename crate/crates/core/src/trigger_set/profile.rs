use serde::{Deserialize, Serialize};

use super::vertices::{trigger_inner, TriggerVertex};
use crate::error::{Error, Result};
use crate::feedback::{DenseMatrix, MatrixView};
use crate::game_tree::{random_policy, random_simplex, GameTree, SequencePolicy};
use crate::scalar::Real;

/// Convex combination of trigger modifications: `λ` over trigger sequences and one subtree
/// policy `m[k]` rooted at the infoset of each trigger `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct TriggerProfile<R = f64> {
    pub lambda: Vec<R>,
    pub m: Vec<SequencePolicy<R>>,
}

impl<R: Real> TriggerProfile<R> {
    pub fn uniform(tree: &GameTree) -> Self {
        let n = tree.num_sequences();
        TriggerProfile {
            lambda: vec![R::one() / R::of_usize(n); n],
            m: (0..n)
                .map(|k| SequencePolicy::uniform(tree, Some(tree.split_seq(k).0)))
                .collect(),
        }
    }

    /// Random weights and random subtree policies.
    pub fn random<G: rand::Rng + ?Sized>(tree: &GameTree, rng: &mut G) -> Self {
        let n = tree.num_sequences();
        TriggerProfile {
            lambda: random_simplex(n, 0.1, rng),
            m: (0..n)
                .map(|k| random_policy(tree, Some(tree.split_seq(k).0), rng))
                .collect(),
        }
    }

    /// All weight on a single vertex; the other subtree policies are uniform.
    pub fn from_vertex(tree: &GameTree, vertex: &TriggerVertex<R>) -> Self {
        let mut p = Self::uniform(tree);
        p.lambda.iter_mut().for_each(|l| *l = R::zero());
        p.lambda[vertex.trigger] = R::one();
        p.m[vertex.trigger] = vertex.policy.clone();
        p
    }

    pub fn validate(&self, tree: &GameTree, tol: f64) -> Result<()> {
        let n = tree.num_sequences();
        if self.lambda.len() != n || self.m.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.lambda.len().min(self.m.len()),
            });
        }
        let total: R = self.lambda.iter().copied().sum();
        if self.lambda.iter().any(|&l| l < R::zero()) || (total.as_f64() - 1.0).abs() > tol {
            return Err(Error::InvalidPolicy("trigger weights are not a distribution".into()));
        }
        for (k, m) in self.m.iter().enumerate() {
            if m.root != Some(tree.split_seq(k).0) {
                return Err(Error::InvalidPolicy(format!("subtree policy {k} has the wrong root")));
            }
            m.validate(tree, tol)?;
        }
        Ok(())
    }

    /// Matrix-free `φ(λ, m) v`.
    pub fn apply(&self, tree: &GameTree, v: &[R]) -> Vec<R> {
        let total: R = self.lambda.iter().copied().sum();
        let mut out: Vec<R> = v.iter().map(|&x| x * total).collect();
        for x in 0..tree.num_infosets() {
            let above: R = tree.history(x).iter().map(|&k| self.lambda[k]).sum();
            for s in tree.seqs_of(x) {
                out[s] = out[s] - v[s] * (above + self.lambda[s]);
            }
        }
        for (k, &l) in self.lambda.iter().enumerate() {
            let fired = l * v[k];
            if fired == R::zero() {
                continue;
            }
            for &x in tree.subtree(tree.split_seq(k).0) {
                for s in tree.seqs_of(x) {
                    out[s] = out[s] + fired * self.m[k].values[s];
                }
            }
        }
        out
    }

    /// Dense `Σ_k λ_k (I - E_{⪰k} + m_k e_kᵀ)`.
    pub fn to_matrix(&self, tree: &GameTree) -> DenseMatrix<R> {
        let n = tree.num_sequences();
        let total: R = self.lambda.iter().copied().sum();
        let mut phi = DenseMatrix::identity(n).scaled(total);
        for k in 0..n {
            let l = self.lambda[k];
            if l == R::zero() {
                continue;
            }
            phi.add_at(k, k, -l);
            for x in tree.infosets_below(k) {
                for s in tree.seqs_of(x) {
                    phi.add_at(s, s, -l);
                }
            }
            for i in 0..n {
                let mi = self.m[k].values[i];
                if mi != R::zero() {
                    phi.add_at(i, k, l * mi);
                }
            }
        }
        phi
    }

    /// `⟨φ(λ, m), M⟩`.
    pub fn inner(&self, tree: &GameTree, mat: &impl MatrixView<R>) -> R {
        self.lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != R::zero())
            .map(|(k, &l)| l * trigger_inner(tree, k, &self.m[k].values, mat))
            .sum()
    }
}
