use super::Scaling;
use crate::error::{Error, Result};
use crate::game_tree::{seq_to_behavioral, GameTree, SequencePolicy};
use crate::scalar::{xlogx, Real};
use crate::trigger_set::TriggerProfile;

fn infosets(tree: &GameTree, root: Option<usize>) -> Vec<usize> {
    match root {
        None => (0..tree.num_infosets()).collect(),
        Some(r) => tree.subtree(r).to_vec(),
    }
}

/// `Σ_x weight(x) Σ_a μ(x, a) log μ(a | x)` over the infosets `μ` is defined on.
pub fn weighted_dilated_entropy<R: Real>(tree: &GameTree, mu: &SequencePolicy<R>, weight: impl Fn(usize) -> R) -> Result<R> {
    let b = seq_to_behavioral(tree, mu)?;
    let mut h = R::zero();
    for x in infosets(tree, mu.root) {
        let local = tree.seqs_of(x).fold(R::zero(), |acc, s| {
            let p = b.probs[s];
            if mu.values[s] > R::zero() { acc + mu.values[s] * p.ln() } else { acc }
        });
        h = h + weight(x) * local;
    }
    Ok(h)
}

/// `Σ_x weight(x) Σ_a μ(x, a) log(μ(a | x) / ν(a | x))`. Both policies must share a root.
pub fn weighted_dilated_kl<R: Real>(
    tree: &GameTree,
    mu: &SequencePolicy<R>,
    nu: &SequencePolicy<R>,
    weight: impl Fn(usize) -> R,
) -> Result<R> {
    if mu.root != nu.root {
        return Err(Error::InvalidPolicy("policies have different roots".into()));
    }
    let bm = seq_to_behavioral(tree, mu)?;
    let bn = seq_to_behavioral(tree, nu)?;
    let mut d = R::zero();
    for x in infosets(tree, mu.root) {
        let mut local = R::zero();
        for s in tree.seqs_of(x) {
            if mu.values[s] <= R::zero() {
                continue;
            }
            if bn.probs[s] <= R::zero() {
                return Err(Error::InvalidPolicy(format!("reference policy is zero at `{}`", tree.name(x))));
            }
            local = local + mu.values[s] * (bm.probs[s].ln() - bn.probs[s].ln());
        }
        d = d + weight(x) * local;
    }
    Ok(d)
}

/// Dilated entropy `H_{x_g}(μ)` (nonpositive).
pub fn dilated_entropy<R: Real>(tree: &GameTree, mu: &SequencePolicy<R>) -> Result<R> {
    weighted_dilated_entropy(tree, mu, |_| R::one())
}

pub fn dilated_kl<R: Real>(tree: &GameTree, mu: &SequencePolicy<R>, nu: &SequencePolicy<R>) -> Result<R> {
    weighted_dilated_kl(tree, mu, nu, |_| R::one())
}

/// `s Σ_k λ_k log λ_k + Σ_k λ_k Σ_{x ⪰ x_g} (1/w_{g}(x)) Σ_a m_k(x, a) log m_k(a | x)` with
/// outer scale `s` and weights `w` from `scaling`. With `Scaling::unit()` this is the trigger
/// dilated entropy, with balanced scaling its balanced variant.
pub fn trigger_dilated_entropy<R: Real>(tree: &GameTree, profile: &TriggerProfile<R>, scaling: &Scaling<R>) -> Result<R> {
    let mut h = scaling.outer() * profile.lambda.iter().fold(R::zero(), |acc, &l| acc + xlogx(l));
    for (k, &l) in profile.lambda.iter().enumerate() {
        if l == R::zero() {
            continue;
        }
        let x_g = tree.split_seq(k).0;
        h = h + l * weighted_dilated_entropy(tree, &profile.m[k], |x| R::one() / scaling.weight(x_g, x))?;
    }
    Ok(h)
}

/// Bregman divergence of [`trigger_dilated_entropy`].
pub fn trigger_dilated_kl<R: Real>(
    tree: &GameTree,
    p: &TriggerProfile<R>,
    q: &TriggerProfile<R>,
    scaling: &Scaling<R>,
) -> Result<R> {
    let mut d = R::zero();
    for (&a, &b) in p.lambda.iter().zip(&q.lambda) {
        if a > R::zero() {
            if b <= R::zero() {
                return Err(Error::InvalidPolicy("reference trigger weight is zero".into()));
            }
            d = d + a * (a.ln() - b.ln());
        }
    }
    d = d * scaling.outer();
    for (k, &l) in p.lambda.iter().enumerate() {
        if l == R::zero() {
            continue;
        }
        let x_g = tree.split_seq(k).0;
        d = d + l * weighted_dilated_kl(tree, &p.m[k], &q.m[k], |x| R::one() / scaling.weight(x_g, x))?;
    }
    Ok(d)
}
