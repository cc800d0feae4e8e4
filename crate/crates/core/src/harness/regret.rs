use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_tree::{seq_to_behavioral, BehavioralPolicy, EfgGame, GameTree, SequencePolicy};
use crate::trigger_set::{best_trigger_response, best_vertex, TriggerVertex};

/// `Σ_{i ⪰ k} v_i` for every sequence `k`.
fn descendant_sums(tree: &GameTree, v: &[f64]) -> Vec<f64> {
    let mut below = vec![0.0; tree.num_infosets()];
    let mut out = vec![0.0; tree.num_sequences()];
    for x in (0..tree.num_infosets()).rev() {
        for s in tree.seqs_of(x) {
            out[s] = tree.children(s).iter().fold(v[s], |acc, &c| acc + below[c]);
            below[x] += out[s];
        }
    }
    out
}

/// Running sufficient statistics for exact trigger and external regret.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTracker {
    pub episodes: usize,
    /// `Σ_t ⟨μᵗ, ℓᵗ⟩`.
    pub cum_loss: f64,
    /// `Σ_t ℓᵗ`.
    pub loss_sum: Vec<f64>,
    /// `triggered[k] = Σ_t μᵗ_k ℓᵗ`.
    pub triggered: Vec<Vec<f64>>,
    /// `untriggered[k] = Σ_t ⟨(I - E_{⪰k}) μᵗ, ℓᵗ⟩`.
    pub untriggered: Vec<f64>,
}

impl RegretTracker {
    pub fn new(tree: &GameTree) -> Self {
        let n = tree.num_sequences();
        RegretTracker {
            episodes: 0,
            cum_loss: 0.0,
            loss_sum: vec![0.0; n],
            triggered: vec![vec![0.0; n]; n],
            untriggered: vec![0.0; n],
        }
    }

    pub fn record(&mut self, tree: &GameTree, mu: &[f64], loss: &[f64]) -> Result<()> {
        let n = tree.num_sequences();
        if mu.len() != n || loss.len() != n {
            return Err(Error::Dimension { expected: n, got: mu.len().min(loss.len()) });
        }
        let prod: Vec<f64> = mu.iter().zip(loss).map(|(a, b)| a * b).collect();
        let total: f64 = prod.iter().sum();
        let below = descendant_sums(tree, &prod);
        for k in 0..n {
            self.untriggered[k] += total - below[k];
            if mu[k] != 0.0 {
                for (w, &l) in self.triggered[k].iter_mut().zip(loss) {
                    *w += mu[k] * l;
                }
            }
        }
        for (s, &l) in self.loss_sum.iter_mut().zip(loss) {
            *s += l;
        }
        self.cum_loss += total;
        self.episodes += 1;
        Ok(())
    }

    /// Best deterministic trigger deviation in hindsight and its cumulative loss.
    pub fn best_trigger(&self, tree: &GameTree) -> (TriggerVertex<f64>, f64) {
        best_trigger_response(tree, &self.triggered, &self.untriggered)
    }

    /// `Σ_t ⟨μᵗ, ℓᵗ⟩ - min_φ Σ_t ⟨φ μᵗ, ℓᵗ⟩`; zero before any episode.
    pub fn trigger_regret(&self, tree: &GameTree) -> f64 {
        if self.episodes == 0 {
            return 0.0;
        }
        self.cum_loss - self.best_trigger(tree).1
    }

    /// `Σ_t ⟨μᵗ, ℓᵗ⟩ - min_v ⟨v, Σ_t ℓᵗ⟩`.
    pub fn external_regret(&self, tree: &GameTree) -> f64 {
        if self.episodes == 0 {
            return 0.0;
        }
        self.cum_loss - best_vertex(tree, &self.loss_sum).1
    }
}

pub fn trigger_regret(tree: &GameTree, history: &[(SequencePolicy, Vec<f64>)]) -> Result<f64> {
    let mut tr = RegretTracker::new(tree);
    for (mu, l) in history {
        tr.record(tree, &mu.values, l)?;
    }
    Ok(tr.trigger_regret(tree))
}

pub fn external_regret(tree: &GameTree, history: &[(SequencePolicy, Vec<f64>)]) -> Result<f64> {
    let mut tr = RegretTracker::new(tree);
    for (mu, l) in history {
        tr.record(tree, &mu.values, l)?;
    }
    Ok(tr.external_regret(tree))
}

/// Gap of the uniform mixture over `profiles[t]` (one sequence-form policy per player):
/// the largest average gain any player gets from a trigger deviation. Losses are read off
/// the game's terminal payoffs, independently of the reduced environments.
pub fn efce_gap(game: &EfgGame, profiles: &[Vec<SequencePolicy>]) -> Result<f64> {
    if profiles.is_empty() {
        return Ok(0.0);
    }
    let players = game.views.len();
    let mut trackers: Vec<RegretTracker> = game.views.iter().map(|v| RegretTracker::new(&v.tree)).collect();
    for joint in profiles {
        if joint.len() != players {
            return Err(Error::Dimension { expected: players, got: joint.len() });
        }
        let behavioral: Vec<BehavioralPolicy> = joint
            .iter()
            .zip(&game.views)
            .map(|(mu, v)| seq_to_behavioral(&v.tree, mu))
            .collect::<Result<_>>()?;
        for (i, tr) in trackers.iter_mut().enumerate() {
            let l = game.terminal_losses(i, &behavioral)?;
            tr.record(&game.views[i].tree, &joint[i].values, &l)?;
        }
    }
    let t = profiles.len() as f64;
    Ok(trackers
        .iter()
        .zip(&game.views)
        .map(|(tr, v)| tr.trigger_regret(&v.tree) / t)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_tree::tree::fixtures::single;
    use crate::game_tree::{kuhn_poker, random_policy, random_tree};
    use crate::trigger_set::{apply_trigger_vertex, enumerate_policies, enumerate_trigger_vertices};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn empty_history() {
        let t = single();
        let tr = RegretTracker::new(&t);
        assert_eq!((tr.trigger_regret(&t), tr.external_regret(&t)), (0.0, 0.0));
    }

    #[test]
    fn best_vertex_replayed_has_zero_external_regret() {
        let t = random_tree(5, 3, 2, 2, 10_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let losses: Vec<Vec<f64>> = (0..10).map(|_| (0..t.num_sequences()).map(|_| rng.random()).collect()).collect();
        let mut sum = vec![0.0; t.num_sequences()];
        for l in &losses {
            sum.iter_mut().zip(l).for_each(|(s, v)| *s += v);
        }
        let (v, _) = best_vertex(&t, &sum);
        let hist: Vec<_> = losses.into_iter().map(|l| (v.clone(), l)).collect();
        assert!(external_regret(&t, &hist).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tracker_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..50 {
            let t = random_tree(seed, 1 + seed as usize % 3, 2, 2, 10_000).unwrap();
            let hist: Vec<(SequencePolicy, Vec<f64>)> = (0..4)
                .map(|_| (random_policy(&t, None, &mut rng), (0..t.num_sequences()).map(|_| rng.random()).collect()))
                .collect();
            let total: f64 = hist.iter().map(|(m, l)| dot(&m.values, l)).sum();
            let brute_tr = enumerate_trigger_vertices::<f64>(&t, 100_000)
                .unwrap()
                .iter()
                .map(|phi| total - hist.iter().map(|(m, l)| dot(&apply_trigger_vertex(&t, phi, &m.values), l)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let brute_ext = enumerate_policies::<f64>(&t, 100_000)
                .unwrap()
                .iter()
                .map(|v| total - hist.iter().map(|(_, l)| dot(&v.values, l)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((trigger_regret(&t, &hist).unwrap() - brute_tr).abs() < 1e-10);
            assert!((external_regret(&t, &hist).unwrap() - brute_ext).abs() < 1e-10);
        }
    }

    #[test]
    fn single_profile_gap_is_nonnegative() {
        let game = EfgGame::new(kuhn_poker()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let joint: Vec<SequencePolicy> = game.views.iter().map(|v| random_policy(&v.tree, None, &mut rng)).collect();
            assert!(efce_gap(&game, &[joint]).unwrap() >= -1e-12);
        }
    }
}
