use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversary::{Adversary, Round};
use super::metrics::MetricRow;
use super::regret::RegretTracker;
use crate::error::{Error, Result};
use crate::feedback::{expected_loss, sample_trajectory};
use crate::game_tree::{seq_to_behavioral, BehavioralPolicy, EfgGame, GameTree, SequencePolicy};
use crate::learners::{Feedback, FeedbackMode, Learner};
use crate::trigger_set::residual;

/// Episodes after which metrics are recorded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cadence {
    /// 1, 2, 4, ... and the final episode.
    #[default]
    Pow2,
    Every(usize),
}

impl Cadence {
    pub fn hit(self, t: usize, total: usize) -> bool {
        t == total
            || match self {
                Cadence::Pow2 => t.is_power_of_two(),
                Cadence::Every(n) => n > 0 && t % n == 0,
            }
    }

    pub fn points(self, total: usize) -> Vec<usize> {
        (1..=total).filter(|&t| self.hit(t, total)).collect()
    }
}

impl std::str::FromStr for Cadence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "pow2" {
            return Ok(Cadence::Pow2);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Cadence::Every(n)),
            _ => Err(Error::Config(format!("cadence must be `pow2` or a positive integer, got `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub episodes: usize,
    pub feedback: FeedbackMode,
    pub seed: u64,
    pub cadence: Cadence,
    /// Keep every played policy in the history.
    pub keep_policies: bool,
}

impl RunOptions {
    pub fn new(episodes: usize, feedback: FeedbackMode, seed: u64) -> Self {
        RunOptions { episodes, feedback, seed, cadence: Cadence::Pow2, keep_policies: false }
    }
}

/// Outcome of one learner's run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunHistory {
    pub rows: Vec<MetricRow>,
    pub tracker: RegretTracker,
    pub policies: Vec<SequencePolicy>,
    /// Largest `‖φᵗ μᵗ - μᵗ‖_∞` over the played policies (zero for external-regret learners).
    pub max_residual: f64,
}

impl RunHistory {
    fn new(tree: &GameTree) -> Self {
        RunHistory { rows: Vec::new(), tracker: RegretTracker::new(tree), policies: Vec::new(), max_residual: 0.0 }
    }

    /// Records the policy about to be played.
    fn play(&mut self, tree: &GameTree, learner: &dyn Learner<f64>, keep: bool) {
        let mu = learner.policy();
        if let Some(p) = learner.profile() {
            self.max_residual = self.max_residual.max(residual(tree, p, &mu.values));
        }
        if keep {
            self.policies.push(mu.clone());
        }
    }

    fn row(&self, tree: &GameTree, gap: Option<f64>) -> MetricRow {
        let t = self.tracker.episodes;
        let tr = self.tracker.trigger_regret(tree);
        MetricRow {
            t,
            cum_loss: self.tracker.cum_loss,
            trigger_regret: tr,
            external_regret: self.tracker.external_regret(tree),
            regret_over_sqrt_t: tr / (t as f64).sqrt(),
            efce_gap: gap,
        }
    }
}

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

/// Runs `learner` against `adversary`. Regret is always measured against the expected
/// losses, also under bandit feedback.
pub fn run_adversarial(
    tree: &GameTree,
    learner: &mut dyn Learner<f64>,
    adversary: &mut dyn Adversary,
    opts: &RunOptions,
) -> Result<RunHistory> {
    let mut hist = RunHistory::new(tree);
    let mut previous: Option<SequencePolicy> = None;
    for t in 0..opts.episodes {
        let round = adversary.round(t, previous.as_ref()).map_err(|e| e.at_episode(t + 1))?;
        hist.play(tree, learner, opts.keep_policies);
        let mu = learner.policy().clone();
        let loss = match &round {
            Round::Environment(env) => expected_loss(tree, env),
            Round::Loss(l) => l.clone(),
        };
        hist.tracker.record(tree, &mu.values, &loss)?;
        let step = match (opts.feedback, &round) {
            (FeedbackMode::Full, _) => learner.observe(Feedback::Full(&loss)),
            (FeedbackMode::Bandit, Round::Environment(env)) => {
                let b = seq_to_behavioral(tree, &mu)?;
                let traj = sample_trajectory(tree, env, &b, &mut episode_rng(opts.seed, t));
                learner.observe(Feedback::Bandit(&traj))
            }
            (FeedbackMode::Bandit, Round::Loss(_)) => Err(Error::Config("bandit feedback needs environments".into())),
        };
        step.map_err(|e| e.at_episode(t + 1))?;
        if opts.cadence.hit(t + 1, opts.episodes) {
            hist.rows.push(hist.row(tree, None));
        }
        previous = Some(mu);
    }
    Ok(hist)
}

/// Joint outcome of self-play.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfPlayHistory {
    pub players: Vec<RunHistory>,
    /// Per-episode product policies (when kept).
    pub profiles: Vec<Vec<SequencePolicy>>,
    /// Largest `|Σ_i u_i|` over episodes, in raw payoff units.
    pub max_utility_sum: f64,
}

/// Uncoupled self-play: each player's environment is reduced from the others' current
/// policies, and each learner sees only its own feedback. Bandit episodes sample one joint
/// play of the game. Rows carry the gap of the running average correlated policy.
pub fn run_self_play(game: &EfgGame, learners: &mut [Box<dyn Learner<f64>>], opts: &RunOptions) -> Result<SelfPlayHistory> {
    let m = game.views.len();
    if learners.len() != m {
        return Err(Error::Dimension { expected: m, got: learners.len() });
    }
    let mut players: Vec<RunHistory> = game.views.iter().map(|v| RunHistory::new(&v.tree)).collect();
    let mut gap_trackers: Vec<RegretTracker> = game.views.iter().map(|v| RegretTracker::new(&v.tree)).collect();
    let mut profiles = Vec::new();
    let mut max_utility_sum: f64 = 0.0;
    for t in 0..opts.episodes {
        let joint: Vec<SequencePolicy> = learners.iter().map(|l| l.policy().clone()).collect();
        let behavioral: Vec<BehavioralPolicy> = joint
            .iter()
            .zip(&game.views)
            .map(|(mu, v)| seq_to_behavioral(&v.tree, mu))
            .collect::<Result<_>>()?;
        for (i, l) in learners.iter().enumerate() {
            players[i].play(&game.views[i].tree, l.as_ref(), false);
        }
        let utilities = game.expected_utilities(&behavioral)?;
        max_utility_sum = max_utility_sum.max(utilities.iter().sum::<f64>().abs());
        let mut losses = Vec::with_capacity(m);
        for (i, view) in game.views.iter().enumerate() {
            let env = game.reduce(i, &behavioral)?.env;
            let loss = expected_loss(&view.tree, &env);
            players[i].tracker.record(&view.tree, &joint[i].values, &loss)?;
            gap_trackers[i].record(&view.tree, &joint[i].values, &game.terminal_losses(i, &behavioral)?)?;
            losses.push(loss);
        }
        match opts.feedback {
            FeedbackMode::Full => {
                for (l, loss) in learners.iter_mut().zip(&losses) {
                    l.observe(Feedback::Full(loss)).map_err(|e| e.at_episode(t + 1))?;
                }
            }
            FeedbackMode::Bandit => {
                let trajs = game.sample_joint(&behavioral, &mut episode_rng(opts.seed, t))?;
                for (l, traj) in learners.iter_mut().zip(&trajs) {
                    l.observe(Feedback::Bandit(traj)).map_err(|e| e.at_episode(t + 1))?;
                }
            }
        }
        if opts.keep_policies {
            profiles.push(joint);
        }
        if opts.cadence.hit(t + 1, opts.episodes) {
            let n = (t + 1) as f64;
            let gap = gap_trackers
                .iter()
                .zip(&game.views)
                .map(|(tr, v)| tr.trigger_regret(&v.tree) / n)
                .fold(f64::NEG_INFINITY, f64::max);
            for (p, v) in players.iter_mut().zip(&game.views) {
                let row = p.row(&v.tree, Some(gap));
                p.rows.push(row);
            }
        }
    }
    Ok(SelfPlayHistory { players, profiles, max_utility_sum })
}
