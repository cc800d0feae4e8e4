use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{behavioral_to_seq, BehavioralPolicy, EpisodeEnvironment, GameFile, GameTree, RewardSampler, SequencePolicy};
use crate::scalar::Real;
use crate::error::{Error, Result};

/// Tree with `layers` layers where the number of layer-1 infosets and of children per
/// sequence are drawn uniformly from `1..=branching`. Deterministic in `seed`.
pub fn random_tree(seed: u64, layers: usize, branching: usize, num_actions: usize, cap: usize) -> Result<GameTree> {
    if layers == 0 || branching == 0 || num_actions == 0 {
        return Err(Error::InvalidGameFile("layers, branching and actions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut desc = GameFile {
        horizon: layers,
        layers: Vec::with_capacity(layers),
        num_actions,
        ..Default::default()
    };
    let roots = rng.random_range(1..=branching);
    desc.layers.push((0..roots).map(|i| format!("x1.{i}")).collect());
    let mut total = roots;
    for h in 1..layers {
        let mut next = Vec::new();
        for parent in &desc.layers[h - 1] {
            for a in 0..num_actions {
                let k = rng.random_range(1..=branching);
                let kids: Vec<String> = (0..k).map(|j| format!("x{}.{}", h + 1, next.len() + j)).collect();
                next.extend(kids.iter().cloned());
                desc.children.insert(format!("{parent},{a}"), kids);
            }
        }
        total += next.len();
        if total * num_actions > cap {
            return Err(Error::CapExceeded { what: "random tree sequences", cap });
        }
        desc.layers.push(next);
    }
    if total * num_actions > cap {
        return Err(Error::CapExceeded { what: "random tree sequences", cap });
    }
    GameTree::build(&desc)
}

/// Random environment: Dirichlet(1) rows via normalized exponentials and uniform mean rewards.
pub fn random_env<G: Rng + ?Sized>(tree: &GameTree, rng: &mut G) -> EpisodeEnvironment {
    let row = |n: usize, rng: &mut G| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    };
    let initial = row(tree.layer(0).len(), rng);
    let transition = (0..tree.num_sequences())
        .map(|s| row(tree.children(s).len(), rng))
        .collect();
    let mean_reward = (0..tree.num_sequences()).map(|_| rng.random::<f64>()).collect();
    EpisodeEnvironment {
        initial,
        transition,
        mean_reward,
        sampler: RewardSampler::Bernoulli,
    }
}

/// Random point on the simplex; with probability `sparse` a random vertex instead.
pub fn random_simplex<R: Real, G: Rng + ?Sized>(n: usize, sparse: f64, rng: &mut G) -> Vec<R> {
    if n > 0 && rng.random::<f64>() < sparse {
        let mut v = vec![R::zero(); n];
        v[rng.random_range(0..n)] = R::one();
        return v;
    }
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| R::of(v / s)).collect()
}

/// Random behavioral policy in sequence form; about one infoset in seven is deterministic.
pub fn random_policy<R: Real, G: Rng + ?Sized>(tree: &GameTree, root: Option<usize>, rng: &mut G) -> SequencePolicy<R> {
    let mut b = BehavioralPolicy::<R>::uniform(tree);
    for x in 0..tree.num_infosets() {
        let probs = random_simplex::<R, G>(tree.num_actions(), 0.15, rng);
        b.probs[tree.seqs_of(x)].copy_from_slice(&probs);
    }
    behavioral_to_seq(tree, &b, root).expect("random rows are on the simplex")
}

/// Fixed shape with a large policy norm relative to its depth: one root, `width` children
/// under every root action, one child under every layer-2 sequence.
pub fn wide_tree(width: usize, num_actions: usize) -> Result<GameTree> {
    let mut desc = GameFile {
        horizon: 3,
        layers: vec![vec!["r".to_string()], Vec::new(), Vec::new()],
        num_actions,
        ..Default::default()
    };
    for a in 0..num_actions {
        let kids: Vec<String> = (0..width).map(|j| format!("m{a}.{j}")).collect();
        for k in &kids {
            for b in 0..num_actions {
                let leaf = format!("{k}.{b}");
                desc.children.insert(format!("{k},{b}"), vec![leaf.clone()]);
                desc.layers[2].push(leaf);
            }
        }
        desc.layers[1].extend(kids.iter().cloned());
        desc.children.insert(format!("r,{a}"), kids);
    }
    GameTree::build(&desc)
}
