use super::{behavioral_to_seq, BehavioralPolicy, GameTree, SequencePolicy};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-layer descendant counts and the policy-norm recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct DescendantCounts {
    /// `at_infoset[x][h]` = |C_h(x)|, the number of layer-`h` infosets in the subtree of `x`
    /// (counting `x` itself at its own layer).
    pub at_infoset: Vec<Vec<usize>>,
    /// `at_seq[s][h]` = |C_h(x, a)|, layer-`h` infosets strictly below sequence `s`.
    pub at_seq: Vec<Vec<usize>>,
    /// X_{⪰x}.
    pub subtree_size: Vec<usize>,
    /// ‖Π^x‖₁, the largest L1 norm of a subtree policy rooted at `x`.
    pub norm_at: Vec<usize>,
    /// ‖Π‖₁.
    pub policy_norm: usize,
}

pub fn descendant_counts(tree: &GameTree) -> DescendantCounts {
    let n = tree.num_infosets();
    let h_max = tree.horizon();
    let mut at_infoset = vec![vec![0usize; h_max]; n];
    let mut at_seq = vec![vec![0usize; h_max]; tree.num_sequences()];
    let mut norm_at = vec![0usize; n];
    for x in (0..n).rev() {
        at_infoset[x][tree.layer_of(x)] = 1;
        let mut best = 0;
        for s in tree.seqs_of(x) {
            let mut norm = 0;
            for &c in tree.children(s) {
                for h in 0..h_max {
                    at_seq[s][h] += at_infoset[c][h];
                }
                norm += norm_at[c];
            }
            for h in 0..h_max {
                at_infoset[x][h] += at_seq[s][h];
            }
            best = best.max(norm);
        }
        norm_at[x] = 1 + best;
    }
    let subtree_size = at_infoset.iter().map(|c| c.iter().sum()).collect();
    let policy_norm = tree.layer(0).iter().map(|&x| norm_at[x]).sum();
    DescendantCounts {
        at_infoset,
        at_seq,
        subtree_size,
        norm_at,
        policy_norm,
    }
}

/// Balanced exploration policies, one per target layer, cached in both forms.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedPolicies<R = f64> {
    behavioral: Vec<BehavioralPolicy<R>>,
    sequence: Vec<SequencePolicy<R>>,
}

/// Balanced exploration policy for 0-based layer `h`: actions proportional to layer-`h`
/// descendant counts above `h`, uniform from `h` on. An infoset with no layer-`h`
/// descendants plays uniformly.
pub fn balanced_policy<R: Real>(tree: &GameTree, counts: &DescendantCounts, h: usize) -> Result<BehavioralPolicy<R>> {
    if h >= tree.horizon() {
        return Err(Error::InvalidLayer(h));
    }
    let mut b = BehavioralPolicy::uniform(tree);
    for x in 0..tree.num_infosets() {
        if tree.layer_of(x) >= h {
            continue;
        }
        let total = counts.at_infoset[x][h];
        if total == 0 {
            continue;
        }
        for s in tree.seqs_of(x) {
            b.probs[s] = R::of_usize(counts.at_seq[s][h]) / R::of_usize(total);
        }
    }
    Ok(b)
}

impl<R: Real> BalancedPolicies<R> {
    pub fn new(tree: &GameTree, counts: &DescendantCounts) -> Self {
        let mut behavioral = Vec::with_capacity(tree.horizon());
        let mut sequence = Vec::with_capacity(tree.horizon());
        for h in 0..tree.horizon() {
            let b = balanced_policy(tree, counts, h).expect("layer within horizon");
            sequence.push(behavioral_to_seq(tree, &b, None).expect("balanced policy is valid"));
            behavioral.push(b);
        }
        BalancedPolicies { behavioral, sequence }
    }

    pub fn behavioral(&self, h: usize) -> &BehavioralPolicy<R> {
        &self.behavioral[h]
    }

    pub fn sequence(&self, h: usize) -> &SequencePolicy<R> {
        &self.sequence[h]
    }

    /// μ^{⋆,h}_{1:h}(x, a) with `h` the layer of `x`.
    pub fn own_layer_reach(&self, tree: &GameTree, seq: usize) -> R {
        let x = seq / tree.num_actions();
        self.sequence[tree.layer_of(x)].values[seq]
    }

    /// μ^{⋆,h}_{g:h}(x, ·) for `x ⪰ x_g`, with `h` the layer of `x`: the product of the
    /// layer-`h` policy's action probabilities from `x_g` down to and including `x`.
    pub fn path_weight(&self, tree: &GameTree, x_g: usize, x: usize, a: usize) -> R {
        let b = &self.behavioral[tree.layer_of(x)];
        let mut w = b.probs[tree.seq(x, a)];
        if x == x_g {
            return w;
        }
        for &s in tree.history(x).iter().rev() {
            w = w * b.probs[s];
            if s / tree.num_actions() == x_g {
                return w;
            }
        }
        panic!("infoset {x} is not below {x_g}")
    }
}
