use crate::error::{Error, Result};
use crate::game_tree::{behavioral_to_seq, BehavioralPolicy, GameTree, SequencePolicy};
use crate::scalar::{log_sum_exp, softmax_into, Real};

/// Per-infoset values `F_x(ℓ) = log Σ_a exp(-ℓ(x, a) + Σ_{c ∈ C(x,a)} F_c(ℓ))`.
pub fn vertex_inner<R: Real>(tree: &GameTree, loss: &[R]) -> Result<Vec<R>> {
    if loss.len() != tree.num_sequences() {
        return Err(Error::Dimension { expected: tree.num_sequences(), got: loss.len() });
    }
    if loss.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("loss vector"));
    }
    let mut f = vec![R::zero(); tree.num_infosets()];
    for x in (0..tree.num_infosets()).rev() {
        f[x] = log_sum_exp(tree.seqs_of(x).map(|s| below(tree, &f, s) - loss[s]).collect::<Vec<_>>());
    }
    Ok(f)
}

fn below<R: Real>(tree: &GameTree, f: &[R], s: usize) -> R {
    tree.children(s).iter().fold(R::zero(), |acc, &c| acc + f[c])
}

/// `F^𝒱(ℓ) = log Σ_{v ∈ 𝒱} exp(-⟨v, ℓ⟩)` and its negative gradient, the
/// softmax-weighted vertex average.
pub fn log_partition_vertex<R: Real>(tree: &GameTree, loss: &[R]) -> Result<(R, SequencePolicy<R>)> {
    let f = vertex_inner(tree, loss)?;
    let mut b = BehavioralPolicy::uniform(tree);
    let mut logits = vec![R::zero(); tree.num_actions()];
    for x in 0..tree.num_infosets() {
        for (a, s) in tree.seqs_of(x).enumerate() {
            logits[a] = below(tree, &f, s) - loss[s];
        }
        softmax_into(&logits, &mut b.probs[tree.seqs_of(x)]);
    }
    let value = tree.layer(0).iter().fold(R::zero(), |acc, &x| acc + f[x]);
    if !value.is_finite() {
        return Err(Error::NonFinite("log-partition value"));
    }
    Ok((value, behavioral_to_seq(tree, &b, None)?))
}

/// `log K_x(b, 𝟙)` for every infoset, where `K_x(b, 𝟙) = Σ_{v ∈ 𝒱^x} Π_{s ∈ v} b_s` is computed
/// through `K_x = Σ_a b(x, a) Π_{c ∈ C(x,a)} K_c`. Works in log space throughout.
pub fn kernel_log<R: Real>(tree: &GameTree, b: &[R]) -> Result<Vec<R>> {
    if b.len() != tree.num_sequences() {
        return Err(Error::Dimension { expected: tree.num_sequences(), got: b.len() });
    }
    if b.iter().any(|&v| !(v > R::zero())) {
        return Err(Error::InvalidPolicy("kernel weights must be positive".into()));
    }
    let neg_log: Vec<R> = b.iter().map(|v| -v.ln()).collect();
    vertex_inner(tree, &neg_log)
}

/// `K_x(b, 𝟙)`. May overflow to infinity for large weights; use [`kernel_log`] then.
pub fn kernel_eval<R: Real>(tree: &GameTree, b: &[R], x: usize) -> Result<R> {
    if x >= tree.num_infosets() {
        return Err(Error::UnknownInfoset(x.to_string()));
    }
    Ok(kernel_log(tree, b)?[x].exp())
}
