use crate::error::{Error, Result};
use crate::game_tree::{GameTree, SequencePolicy};
use crate::scalar::Real;

/// Deterministic trigger modification: when `trigger` would be played, follow the
/// deterministic subtree policy rooted at the trigger's infoset instead.
#[derive(Clone, Debug, PartialEq)]
pub struct TriggerVertex<R = f64> {
    pub trigger: usize,
    pub policy: SequencePolicy<R>,
}

/// Number of deterministic policies on the subtree of each infoset (saturating).
pub fn subtree_policy_counts(tree: &GameTree) -> Vec<usize> {
    let mut count = vec![0usize; tree.num_infosets()];
    for x in (0..tree.num_infosets()).rev() {
        count[x] = tree
            .seqs_of(x)
            .map(|s| {
                tree.children(s)
                    .iter()
                    .fold(1usize, |acc, &c| acc.saturating_mul(count[c]))
            })
            .fold(0usize, |acc, n| acc.saturating_add(n));
    }
    count
}

/// |𝒱|, the number of deterministic full-tree policies (saturating).
pub fn num_policies(tree: &GameTree) -> usize {
    let counts = subtree_policy_counts(tree);
    tree.layer(0)
        .iter()
        .fold(1usize, |acc, &x| acc.saturating_mul(counts[x]))
}

/// |Φ₀|, the number of deterministic trigger modifications (saturating).
pub fn num_trigger_vertices(tree: &GameTree) -> usize {
    let counts = subtree_policy_counts(tree);
    (0..tree.num_infosets()).fold(0usize, |acc, x| {
        acc.saturating_add(counts[x].saturating_mul(tree.num_actions()))
    })
}

/// All combinations of one support set from each list.
fn product(lists: Vec<Vec<Vec<usize>>>) -> Vec<Vec<usize>> {
    lists.into_iter().fold(vec![Vec::new()], |acc, list| {
        acc.iter()
            .flat_map(|prefix| {
                list.iter().map(move |tail| {
                    let mut v = prefix.clone();
                    v.extend_from_slice(tail);
                    v
                })
            })
            .collect()
    })
}

/// Supports (sets of unit sequences) of all deterministic subtree policies rooted at `x`.
fn supports(tree: &GameTree, x: usize) -> Vec<Vec<usize>> {
    tree.seqs_of(x)
        .flat_map(|s| {
            let below = product(tree.children(s).iter().map(|&c| supports(tree, c)).collect());
            below.into_iter().map(move |mut v| {
                v.push(s);
                v
            })
        })
        .collect()
}

fn to_policy<R: Real>(tree: &GameTree, root: Option<usize>, support: &[usize]) -> SequencePolicy<R> {
    let mut p = SequencePolicy::zeros(tree, root);
    for &s in support {
        p.values[s] = R::one();
    }
    p
}

/// Deterministic subtree policies rooted at `x`, unreached choices omitted.
pub fn enumerate_subtree_policies<R: Real>(tree: &GameTree, x: usize, cap: usize) -> Result<Vec<SequencePolicy<R>>> {
    if subtree_policy_counts(tree)[x] > cap {
        return Err(Error::CapExceeded { what: "subtree policies", cap });
    }
    Ok(supports(tree, x)
        .iter()
        .map(|s| to_policy(tree, Some(x), s))
        .collect())
}

/// The vertex set 𝒱 of deterministic sequence-form policies.
pub fn enumerate_policies<R: Real>(tree: &GameTree, cap: usize) -> Result<Vec<SequencePolicy<R>>> {
    if num_policies(tree) > cap {
        return Err(Error::CapExceeded { what: "deterministic policies", cap });
    }
    let all = product(tree.layer(0).iter().map(|&x| supports(tree, x)).collect());
    Ok(all.iter().map(|s| to_policy(tree, None, s)).collect())
}

/// Φ₀: one vertex per trigger sequence and deterministic subtree policy at its infoset.
pub fn enumerate_trigger_vertices<R: Real>(tree: &GameTree, cap: usize) -> Result<Vec<TriggerVertex<R>>> {
    if num_trigger_vertices(tree) > cap {
        return Err(Error::CapExceeded { what: "trigger vertices", cap });
    }
    let mut out = Vec::new();
    for x in 0..tree.num_infosets() {
        let policies: Vec<SequencePolicy<R>> = enumerate_subtree_policies(tree, x, cap)?;
        for trigger in tree.seqs_of(x) {
            out.extend(policies.iter().map(|p| TriggerVertex {
                trigger,
                policy: p.clone(),
            }));
        }
    }
    Ok(out)
}

/// `(I - E_{⪰k}) μ + m μ_k` for trigger `k` and subtree policy `m` at `k`'s infoset.
pub fn apply_trigger<R: Real>(tree: &GameTree, trigger: usize, m: &[R], mu: &[R]) -> Vec<R> {
    let mut out = mu.to_vec();
    out[trigger] = R::zero();
    for x in tree.infosets_below(trigger) {
        for s in tree.seqs_of(x) {
            out[s] = R::zero();
        }
    }
    let fired = mu[trigger];
    let root = trigger / tree.num_actions();
    for &x in tree.subtree(root) {
        for s in tree.seqs_of(x) {
            out[s] = out[s] + m[s] * fired;
        }
    }
    out
}

pub fn apply_trigger_vertex<R: Real>(tree: &GameTree, vertex: &TriggerVertex<R>, mu: &[R]) -> Vec<R> {
    apply_trigger(tree, vertex.trigger, &vertex.policy.values, mu)
}

/// `⟨φ_{k→m}, M⟩ = Σ_{i not ⪰ k} M_ii + Σ_i m_i M_ik`.
pub fn trigger_inner<R: Real>(tree: &GameTree, trigger: usize, m: &[R], mat: &impl crate::feedback::MatrixView<R>) -> R {
    let mut acc = untriggered_trace(tree, trigger, mat);
    let root = trigger / tree.num_actions();
    for &x in tree.subtree(root) {
        for s in tree.seqs_of(x) {
            if m[s] != R::zero() {
                acc = acc + m[s] * mat.at(s, trigger);
            }
        }
    }
    acc
}

/// `⟨I - E_{⪰k}, M⟩ = trace(M) - Σ_{i ⪰ k} M_ii`.
pub fn untriggered_trace<R: Real>(tree: &GameTree, trigger: usize, mat: &impl crate::feedback::MatrixView<R>) -> R {
    let mut acc = mat.trace() - mat.at(trigger, trigger);
    for x in tree.infosets_below(trigger) {
        for s in tree.seqs_of(x) {
            acc = acc - mat.at(s, s);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_tree::tree::fixtures::{depth_two, single};
    use crate::game_tree::{descendant_counts, random_tree};

    #[test]
    fn vertex_counts_on_small_trees() {
        assert_eq!(enumerate_policies::<f64>(&single(), 100).unwrap().len(), 2);
        let t = depth_two();
        let v = enumerate_policies::<f64>(&t, 100).unwrap();
        assert_eq!(v.len(), 4);
        for p in &v {
            assert_eq!(p.violation(&t), 0.0);
        }
        assert_eq!(enumerate_trigger_vertices::<f64>(&single(), 100).unwrap().len(), 4);
    }

    #[test]
    fn cap_exceeded() {
        assert!(enumerate_policies::<f64>(&depth_two(), 3).is_err());
    }

    #[test]
    fn counting_bounds_on_random_trees() {
        for seed in 0..20 {
            let t = random_tree(seed, 3, 2, 2, 10_000).unwrap();
            let norm = descendant_counts(&t).policy_norm as u32;
            let a = t.num_actions();
            assert!(num_policies(&t) <= a.pow(norm));
            assert!(num_trigger_vertices(&t) <= t.num_infosets() * a.pow(norm + 1));
        }
    }

    #[test]
    fn hand_example() {
        let t = single();
        let v = TriggerVertex { trigger: 0, policy: SequencePolicy { values: vec![0.0, 1.0], root: Some(0) } };
        assert_eq!(apply_trigger_vertex(&t, &v, &[0.6, 0.4]), vec![0.0, 1.0]);
        // Never fires when the trigger has zero mass.
        assert_eq!(apply_trigger_vertex(&t, &v, &[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn vertices_map_policies_into_policies() {
        let t = random_tree(4, 3, 2, 2, 10_000).unwrap();
        let phis = enumerate_trigger_vertices::<f64>(&t, 100_000).unwrap();
        let vs = enumerate_policies::<f64>(&t, 100_000).unwrap();
        for phi in phis.iter().step_by(7) {
            for v in vs.iter().step_by(5) {
                let out = SequencePolicy { values: apply_trigger_vertex(&t, phi, &v.values), root: None };
                assert!(out.violation(&t) < 1e-12);
            }
        }
    }
}
