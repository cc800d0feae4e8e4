use rand::Rng;

use super::LossMatrix;
use crate::error::{Error, Result};
use crate::game_tree::{sample_categorical, BehavioralPolicy, EpisodeEnvironment, GameTree, RewardSampler, Step, Trajectory};
use crate::scalar::Real;

/// `ℓ(x, a) = p(x) (1 - R̄(x, a))`, where `p(x)` is the environment's probability of leading
/// to `x` given the player's own actions along its history.
pub fn expected_loss<R: Real>(tree: &GameTree, env: &EpisodeEnvironment) -> Vec<R> {
    let reach = env.reach(tree);
    (0..tree.num_sequences())
        .map(|s| R::of(reach[tree.split_seq(s).0] * (1.0 - env.mean_reward[s])))
        .collect()
}

/// One episode under `policy`.
pub fn sample_trajectory<R: Real, G: Rng + ?Sized>(
    tree: &GameTree,
    env: &EpisodeEnvironment,
    policy: &BehavioralPolicy<R>,
    rng: &mut G,
) -> Trajectory {
    let mut steps = Vec::with_capacity(tree.horizon());
    let mut x = tree.layer(0)[sample_categorical(&env.initial, rng)];
    let mut probs = vec![0.0; tree.num_actions()];
    loop {
        for (p, &q) in probs.iter_mut().zip(policy.action_probs(tree, x)) {
            *p = q.as_f64();
        }
        let action = sample_categorical(&probs, rng);
        let s = tree.seq(x, action);
        let mean = env.mean_reward[s];
        let reward = match env.sampler {
            RewardSampler::Exact => mean,
            RewardSampler::Bernoulli => f64::from(u8::from(rng.random::<f64>() < mean)),
        };
        steps.push(Step { infoset: x, action, reward });
        let children = tree.children(s);
        if children.is_empty() {
            break;
        }
        x = children[sample_categorical(&env.transition[s], rng)];
    }
    Trajectory { steps }
}

/// Nonzero entries of a loss estimate, at most one per layer.
pub type SparseLoss<R> = Vec<(usize, R)>;

fn visited_loss<R: Real>(tree: &GameTree, step: &Step) -> (usize, R) {
    (tree.seq(step.infoset, step.action), R::of(1.0 - step.reward))
}

/// Implicit-exploration estimate `𝟙{visited} (1 - r) / (μ_{1:h}(x, a) + γ)`.
pub fn ix_estimator<R: Real>(tree: &GameTree, traj: &Trajectory, mu: &[R], gamma: R) -> Result<SparseLoss<R>> {
    traj.steps
        .iter()
        .map(|step| {
            let (s, l): (usize, R) = visited_loss(tree, step);
            let denom = mu[s] + gamma;
            if denom <= R::zero() {
                return Err(Error::ZeroReach { seq: s });
            }
            Ok((s, l / denom))
        })
        .collect()
}

/// Per-trigger family of estimates. Member `k = (x_g, a_g)` has denominator
/// `μ_{1:h} + γ (μ^{⋆,h}_{1:h} + μ_{1:g}(x_g, a_g) m_{k, g:h} 𝟙{x_h ⪰ x_g})`.
///
/// `balanced_reach[s]` is `μ^{⋆,h}_{1:h}(s)` with `h` the layer of `s`; `m[k]` is the
/// sequence-form subtree policy of trigger `k`. Triggers with `μ_{1:g}(x_g, a_g) = 0` get an
/// empty member since their matrix column vanishes.
pub fn adaptive_estimator<R: Real>(
    tree: &GameTree,
    traj: &Trajectory,
    mu: &[R],
    m: &[Vec<R>],
    balanced_reach: &[R],
    gamma: R,
) -> Result<Vec<SparseLoss<R>>> {
    let visited: Vec<(usize, R)> = traj.steps.iter().map(|st| visited_loss(tree, st)).collect();
    let mut family = vec![Vec::new(); tree.num_sequences()];
    for (k, member) in family.iter_mut().enumerate() {
        let mu_k = mu[k];
        if mu_k == R::zero() {
            continue;
        }
        let x_g = tree.split_seq(k).0;
        for &(s, l) in &visited {
            let x = tree.split_seq(s).0;
            let trig = if tree.in_subtree(x, x_g) { mu_k * m[k][s] } else { R::zero() };
            let denom = mu[s] + gamma * (balanced_reach[s] + trig);
            if denom <= R::zero() {
                return Err(Error::ZeroReach { seq: s });
            }
            member.push((s, l / denom));
        }
    }
    Ok(family)
}

/// `ℓ μᵀ`.
pub fn assemble_matrix<R: Real>(loss: &[R], mu: &[R]) -> Result<LossMatrix<R>> {
    if loss.len() != mu.len() {
        return Err(Error::Dimension { expected: mu.len(), got: loss.len() });
    }
    Ok(LossMatrix::RankOne { loss: loss.to_vec(), policy: mu.to_vec() })
}

/// `Σ_k μ_k ℓ̃^k e_kᵀ`.
pub fn assemble_adaptive_matrix<R: Real>(family: &[SparseLoss<R>], mu: &[R]) -> Result<LossMatrix<R>> {
    if family.len() != mu.len() {
        return Err(Error::Dimension { expected: mu.len(), got: family.len() });
    }
    let columns = family
        .iter()
        .zip(mu)
        .map(|(member, &w)| member.iter().map(|&(s, l)| (s, w * l)).collect())
        .collect();
    Ok(LossMatrix::Columns { dim: mu.len(), columns })
}

/// Dense vector of a sparse estimate.
pub fn densify<R: Real>(n: usize, sparse: &SparseLoss<R>) -> Vec<R> {
    let mut out = vec![R::zero(); n];
    for &(s, v) in sparse {
        out[s] = out[s] + v;
    }
    out
}
