use super::TriggerVertex;
use crate::game_tree::{GameTree, SequencePolicy};
use crate::scalar::Real;

/// Minimizes `⟨v, loss⟩` over deterministic subtree policies rooted at each infoset.
/// Returns per-infoset optimal values and argmin actions (lowest index on ties).
fn subtree_dp<R: Real>(tree: &GameTree, infosets: &[usize], loss: &[R]) -> (Vec<R>, Vec<usize>) {
    let mut value = vec![R::zero(); tree.num_infosets()];
    let mut choice = vec![0usize; tree.num_infosets()];
    for &x in infosets.iter().rev() {
        let mut best = R::infinity();
        for (a, s) in tree.seqs_of(x).enumerate() {
            let v = tree.children(s).iter().fold(loss[s], |acc, &c| acc + value[c]);
            if v < best {
                best = v;
                choice[x] = a;
            }
        }
        value[x] = best;
    }
    (value, choice)
}

fn policy_from_choices<R: Real>(tree: &GameTree, roots: &[usize], root: Option<usize>, choice: &[usize]) -> SequencePolicy<R> {
    let mut p = SequencePolicy::zeros(tree, root);
    let mut stack = roots.to_vec();
    while let Some(x) = stack.pop() {
        let s = tree.seq(x, choice[x]);
        p.values[s] = R::one();
        stack.extend_from_slice(tree.children(s));
    }
    p
}

/// Best deterministic subtree policy at `root` against `loss`, and its value.
pub fn best_subtree_response<R: Real>(tree: &GameTree, root: usize, loss: &[R]) -> (SequencePolicy<R>, R) {
    let (value, choice) = subtree_dp(tree, tree.subtree(root), loss);
    (policy_from_choices(tree, &[root], Some(root), &choice), value[root])
}

/// Best deterministic full-tree policy against `loss`, and its value.
pub fn best_vertex<R: Real>(tree: &GameTree, loss: &[R]) -> (SequencePolicy<R>, R) {
    let all: Vec<usize> = (0..tree.num_infosets()).collect();
    let (value, choice) = subtree_dp(tree, &all, loss);
    let roots = tree.layer(0);
    let total = roots.iter().map(|&x| value[x]).sum();
    (policy_from_choices(tree, roots, None, &choice), total)
}

/// Minimum over deterministic trigger modifications of the cumulative deviation loss
/// `untriggered[k] + ⟨m, triggered[k]⟩`. `triggered[k]` is `Σ_t μᵗ_k ℓᵗ` (only the
/// subtree of `k`'s infoset is read) and `untriggered[k]` is `Σ_t ⟨(I - E_{⪰k}) μᵗ, ℓᵗ⟩`.
/// Ties go to the lowest trigger index.
pub fn best_trigger_response<R: Real>(tree: &GameTree, triggered: &[Vec<R>], untriggered: &[R]) -> (TriggerVertex<R>, R) {
    let mut best: Option<(usize, R)> = None;
    for k in 0..tree.num_sequences() {
        let x_g = tree.split_seq(k).0;
        let (value, _) = subtree_dp(tree, tree.subtree(x_g), &triggered[k]);
        let v = untriggered[k] + value[x_g];
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((k, v));
        }
    }
    let (k, v) = best.expect("trees have at least one sequence");
    let (policy, _) = best_subtree_response(tree, tree.split_seq(k).0, &triggered[k]);
    (TriggerVertex { trigger: k, policy }, v)
}
