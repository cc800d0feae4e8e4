use crate::error::{Error, Result};
use crate::feedback::MatrixView;
use crate::game_tree::{GameTree, SequencePolicy};
use crate::scalar::{log_sum_exp, Real};
use crate::trigger_set::{trigger_inner, TriggerProfile, TriggerVertex};

/// `log Σ_i exp(score_i)` and the softmax weights.
pub fn brute_force_log_partition<R: Real>(scores: &[R]) -> Result<(R, Vec<R>)> {
    if scores.is_empty() {
        return Err(Error::InvalidGameFile("empty vertex list".into()));
    }
    let lse = log_sum_exp(scores.iter().copied());
    Ok((lse, scores.iter().map(|&s| (s - lse).exp()).collect()))
}

/// Trigger log-partition by enumeration: value and the softmax-averaged profile, with `m_k`
/// the conditional average of the subtree policies attached to trigger `k`.
pub fn brute_force_trigger<R: Real>(
    tree: &GameTree,
    vertices: &[TriggerVertex<R>],
    mat: &impl MatrixView<R>,
) -> Result<(R, TriggerProfile<R>)> {
    let scores: Vec<R> = vertices.iter().map(|v| -trigger_inner(tree, v.trigger, &v.policy.values, mat)).collect();
    let (value, p) = brute_force_log_partition(&scores)?;
    Ok((value, vertex_average(tree, vertices, &p)))
}

/// `Σ_i p_i φ_i` as a profile: `λ_k` sums the weights of trigger `k` and `m_k` is the
/// conditional average of its subtree policies (uniform when `λ_k = 0`).
pub fn vertex_average<R: Real>(tree: &GameTree, vertices: &[TriggerVertex<R>], p: &[R]) -> TriggerProfile<R> {
    let n = tree.num_sequences();
    let mut profile = TriggerProfile::uniform(tree);
    profile.lambda = vec![R::zero(); n];
    let mut sums = vec![vec![R::zero(); n]; n];
    for (v, &w) in vertices.iter().zip(p) {
        profile.lambda[v.trigger] = profile.lambda[v.trigger] + w;
        for (acc, &x) in sums[v.trigger].iter_mut().zip(&v.policy.values) {
            *acc = *acc + w * x;
        }
    }
    for k in 0..n {
        let l = profile.lambda[k];
        if l > R::zero() {
            profile.m[k].values = sums[k].iter().map(|&s| s / l).collect();
        }
    }
    profile
}

/// Vertex log-partition by enumeration: value and the softmax-weighted vertex average.
pub fn brute_force_vertex<R: Real>(vertices: &[SequencePolicy<R>], loss: &[R]) -> Result<(R, SequencePolicy<R>)> {
    let scores: Vec<R> = vertices.iter().map(|v| -v.dot(loss)).collect();
    let (value, p) = brute_force_log_partition(&scores)?;
    let mut avg = SequencePolicy { values: vec![R::zero(); loss.len()], root: vertices[0].root };
    for (v, &w) in vertices.iter().zip(&p) {
        for (a, &x) in avg.values.iter_mut().zip(&v.values) {
            *a = *a + w * x;
        }
    }
    Ok((value, avg))
}

/// `Σ_{v ∈ 𝒱^x} Π_{s ∈ v} b_s` over the given subtree vertices.
pub fn brute_force_kernel<R: Real>(vertices: &[SequencePolicy<R>], b: &[R]) -> R {
    vertices
        .iter()
        .map(|v| {
            v.values
                .iter()
                .zip(b)
                .filter(|(&x, _)| x > R::zero())
                .fold(R::one(), |acc, (_, &w)| acc * w)
        })
        .sum()
}
