use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game_tree::{random_env, seq_to_behavioral, BehavioralPolicy, EfgGame, EpisodeEnvironment, GameTree, SequencePolicy};
use crate::trigger_set::best_vertex;

/// What the adversary fixes for one episode.
#[derive(Clone, Debug, PartialEq)]
pub enum Round {
    Environment(EpisodeEnvironment),
    /// A raw loss vector; full feedback only.
    Loss(Vec<f64>),
}

/// Chooses each episode's round before the learner's policy for that episode is revealed.
pub trait Adversary {
    /// `previous` is the learner's policy in the episode before `episode` (zero-based).
    fn round(&mut self, episode: usize, previous: Option<&SequencePolicy>) -> Result<Round>;
}

/// Replays a fixed list of rounds cyclically.
pub struct Schedule {
    rounds: Vec<Round>,
}

impl Schedule {
    pub fn new(rounds: Vec<Round>) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::Config("empty schedule".into()));
        }
        Ok(Schedule { rounds })
    }
}

impl Adversary for Schedule {
    fn round(&mut self, episode: usize, _: Option<&SequencePolicy>) -> Result<Round> {
        Ok(self.rounds[episode % self.rounds.len()].clone())
    }
}

/// A fresh random environment every episode, reproducible from `(seed, episode)`.
pub struct RandomEnvironments {
    tree: Arc<GameTree>,
    seed: u64,
}

impl RandomEnvironments {
    pub fn new(tree: Arc<GameTree>, seed: u64) -> Self {
        RandomEnvironments { tree, seed }
    }
}

impl Adversary for RandomEnvironments {
    fn round(&mut self, episode: usize, _: Option<&SequencePolicy>) -> Result<Round> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(episode as u64);
        Ok(Round::Environment(random_env(&self.tree, &mut rng)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OpponentPlay {
    /// Fixed behavioral policies for every player; the learner's own entry is ignored.
    Fixed(Vec<BehavioralPolicy>),
    /// Each opponent best-responds to the learner's previous policy, others uniform.
    BestResponse,
}

/// The learner is one player of an extensive-form game; the other players' policies
/// induce its environment.
pub struct EfgOpponents {
    game: Arc<EfgGame>,
    player: usize,
    play: OpponentPlay,
}

impl EfgOpponents {
    pub fn new(game: Arc<EfgGame>, player: usize, play: OpponentPlay) -> Result<Self> {
        if player >= game.views.len() {
            return Err(Error::Config(format!("player {player} out of range")));
        }
        if let OpponentPlay::Fixed(p) = &play {
            if p.len() != game.views.len() {
                return Err(Error::Dimension { expected: game.views.len(), got: p.len() });
            }
        }
        Ok(EfgOpponents { game, player, play })
    }

    pub fn game(&self) -> &EfgGame {
        &self.game
    }

    /// Opponent policies for the coming episode.
    pub fn policies(&self, previous: Option<&SequencePolicy>) -> Result<Vec<BehavioralPolicy>> {
        let views = &self.game.views;
        let own = match previous {
            Some(mu) => seq_to_behavioral(&views[self.player].tree, mu)?,
            None => BehavioralPolicy::uniform(&views[self.player].tree),
        };
        let mut policies: Vec<BehavioralPolicy> = match &self.play {
            OpponentPlay::Fixed(p) => p.clone(),
            OpponentPlay::BestResponse => views.iter().map(|v| BehavioralPolicy::uniform(&v.tree)).collect(),
        };
        policies[self.player] = own;
        if self.play == OpponentPlay::BestResponse {
            for j in (0..views.len()).filter(|&j| j != self.player) {
                let l = self.game.terminal_losses(j, &policies)?;
                let (v, _) = best_vertex(&views[j].tree, &l);
                policies[j] = seq_to_behavioral(&views[j].tree, &v)?;
            }
        }
        Ok(policies)
    }
}

impl Adversary for EfgOpponents {
    fn round(&mut self, _: usize, previous: Option<&SequencePolicy>) -> Result<Round> {
        let policies = self.policies(previous)?;
        Ok(Round::Environment(self.game.reduce(self.player, &policies)?.env))
    }
}
