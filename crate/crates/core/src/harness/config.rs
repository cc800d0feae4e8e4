use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::adversary::{Adversary, EfgOpponents, OpponentPlay, RandomEnvironments, Round, Schedule};
use super::metrics::{write_config_echo, write_metrics};
use super::run::{run_adversarial, run_self_play, Cadence, RunHistory, RunOptions};
use crate::error::{Error, Result};
use crate::game_tree::{kuhn_poker, random_tree, wide_tree, BehavioralPolicy, EfgGame, EpisodeEnvironment, GameFile, GameTree};
use crate::learners::{default_hyper, new_learner, Algorithm, FeedbackMode, Hyper, Learner, DEFAULT_DELTA, DEFAULT_ETA_CONST};

/// Where the decision problem comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GameSource {
    Kuhn,
    Random { seed: u64, layers: usize, branching: usize, actions: usize },
    Wide { width: usize, actions: usize },
    File(PathBuf),
}

fn parse_params(s: &str) -> Result<Vec<(&str, usize)>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{p}`")))?;
            let v = v.parse().map_err(|_| Error::Config(format!("`{k}` must be a nonnegative integer")))?;
            Ok((k, v))
        })
        .collect()
}

impl FromStr for GameSource {
    type Err = Error;

    /// `kuhn`, `gen:random:seed=1,layers=3,branching=2,actions=2`, `gen:wide:width=3,actions=2`,
    /// or a path to a JSON tree description.
    fn from_str(s: &str) -> Result<Self> {
        if s == "kuhn" {
            return Ok(GameSource::Kuhn);
        }
        let Some(rest) = s.strip_prefix("gen:") else {
            return Ok(GameSource::File(PathBuf::from(s)));
        };
        let (kind, params) = rest.split_once(':').unwrap_or((rest, ""));
        let params = parse_params(params)?;
        let get = |key: &str, default: usize| -> Result<usize> {
            for &(k, v) in &params {
                if k == key {
                    return Ok(v);
                }
            }
            Ok(default)
        };
        for &(k, _) in &params {
            if !["seed", "layers", "branching", "actions", "width"].contains(&k) {
                return Err(Error::Config(format!("unknown generator parameter `{k}`")));
            }
        }
        match kind {
            "random" => Ok(GameSource::Random {
                seed: get("seed", 0)? as u64,
                layers: get("layers", 3)?,
                branching: get("branching", 2)?,
                actions: get("actions", 2)?,
            }),
            "wide" => Ok(GameSource::Wide { width: get("width", 3)?, actions: get("actions", 2)? }),
            _ => Err(Error::Config(format!("unknown generator `{kind}`"))),
        }
    }
}

/// A loaded game: a bare tree with an optional environment schedule, or a multi-player game.
pub enum LoadedGame {
    Tree { tree: Arc<GameTree>, schedule: Vec<EpisodeEnvironment> },
    Efg(Arc<EfgGame>),
}

/// Largest `X A` accepted from generators.
const GENERATOR_CAP: usize = 100_000;

impl GameSource {
    pub fn load(&self) -> Result<LoadedGame> {
        Ok(match self {
            GameSource::Kuhn => LoadedGame::Efg(Arc::new(EfgGame::new(kuhn_poker())?)),
            GameSource::Random { seed, layers, branching, actions } => LoadedGame::Tree {
                tree: Arc::new(random_tree(*seed, *layers, *branching, *actions, GENERATOR_CAP)?),
                schedule: Vec::new(),
            },
            GameSource::Wide { width, actions } => LoadedGame::Tree { tree: Arc::new(wide_tree(*width, *actions)?), schedule: Vec::new() },
            GameSource::File(path) => {
                let desc = GameFile::load(path)?;
                let tree = GameTree::build(&desc)?;
                let schedule = desc
                    .schedule
                    .iter()
                    .map(|e| EpisodeEnvironment::from_file(&tree, e))
                    .collect::<Result<_>>()?;
                LoadedGame::Tree { tree: Arc::new(tree), schedule }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentMode {
    Uniform,
    #[default]
    BestResponse,
}

impl FromStr for OpponentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(OpponentMode::Uniform),
            "best-response" => Ok(OpponentMode::BestResponse),
            _ => Err(Error::Config(format!("unknown opponent `{s}`"))),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub game: String,
    pub algorithm: Algorithm,
    pub feedback: FeedbackMode,
    pub episodes: usize,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: f64,
    pub eta_const: f64,
    pub seed: u64,
    /// One for a learner against an adversary, the game's player count for self-play.
    pub players: usize,
    /// Opponents of a single learner in a multi-player game.
    pub opponent: OpponentMode,
    pub out: Option<PathBuf>,
    pub cadence: Cadence,
    pub resync_every: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            game: "kuhn".into(),
            algorithm: Algorithm::EfceOmd,
            feedback: FeedbackMode::Full,
            episodes: 1024,
            eta: None,
            gamma: None,
            delta: DEFAULT_DELTA,
            eta_const: DEFAULT_ETA_CONST,
            seed: 0,
            players: 1,
            opponent: OpponentMode::default(),
            out: None,
            cadence: Cadence::Pow2,
            resync_every: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("the number of episodes must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)".into()));
        }
        if self.players == 0 {
            return Err(Error::Config("at least one player is required".into()));
        }
        if let Cadence::Every(n) = self.cadence {
            if n == 0 || self.episodes % n != 0 {
                return Err(Error::Config("the cadence must divide the number of episodes".into()));
            }
        }
        Ok(())
    }

    /// Tuned defaults with any explicit overrides applied.
    pub fn hyper(&self, tree: &GameTree) -> Hyper {
        let mut h = default_hyper(tree, self.algorithm, self.feedback, self.episodes, self.delta, self.eta_const);
        if let Some(e) = self.eta {
            h.eta = e;
        }
        if let Some(g) = self.gamma {
            h.gamma = g;
        }
        h.resync_every = self.resync_every;
        h
    }
}

/// Histories of a configured run: one for an adversarial run, one per player in self-play.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub histories: Vec<RunHistory>,
    pub max_utility_sum: Option<f64>,
}

/// Loads the game, builds learners and the adversary, runs, and writes metrics when an
/// output directory is configured.
pub fn run_config(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let source: GameSource = config.game.parse()?;
    let opts = RunOptions { cadence: config.cadence, ..RunOptions::new(config.episodes, config.feedback, config.seed) };
    let output = match source.load()? {
        LoadedGame::Tree { tree, schedule } => {
            if config.players != 1 {
                return Err(Error::Config("self-play needs a multi-player game".into()));
            }
            let mut learner: Box<dyn Learner<f64>> = new_learner(tree.clone(), config.algorithm, config.hyper(&tree))?;
            let mut adversary: Box<dyn Adversary> = if schedule.is_empty() {
                Box::new(RandomEnvironments::new(tree.clone(), config.seed))
            } else {
                Box::new(Schedule::new(schedule.into_iter().map(Round::Environment).collect())?)
            };
            let h = run_adversarial(&tree, learner.as_mut(), adversary.as_mut(), &opts)?;
            RunOutput { histories: vec![h], max_utility_sum: None }
        }
        LoadedGame::Efg(game) => {
            if config.players == 1 {
                let tree = Arc::new(game.views[0].tree.clone());
                let play = match config.opponent {
                    OpponentMode::Uniform => OpponentPlay::Fixed(game.views.iter().map(|v| BehavioralPolicy::uniform(&v.tree)).collect()),
                    OpponentMode::BestResponse => OpponentPlay::BestResponse,
                };
                let mut adversary = EfgOpponents::new(game.clone(), 0, play)?;
                let mut learner = new_learner(tree.clone(), config.algorithm, config.hyper(&tree))?;
                let h = run_adversarial(&tree, learner.as_mut(), &mut adversary, &opts)?;
                RunOutput { histories: vec![h], max_utility_sum: None }
            } else {
                if config.players != game.views.len() {
                    return Err(Error::Config(format!("the game has {} players", game.views.len())));
                }
                let mut learners = game
                    .views
                    .iter()
                    .map(|v| {
                        let tree = Arc::new(v.tree.clone());
                        let hp = config.hyper(&tree);
                        new_learner(tree, config.algorithm, hp)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sp = run_self_play(&game, &mut learners, &opts)?;
                RunOutput { histories: sp.players, max_utility_sum: Some(sp.max_utility_sum) }
            }
        }
    };
    if let Some(dir) = &config.out {
        write_config_echo(&dir.join("config.json"), config)?;
        if output.histories.len() == 1 {
            write_metrics(&dir.join("metrics.csv"), &output.histories[0].rows)?;
        } else {
            for (i, h) in output.histories.iter().enumerate() {
                write_metrics(&dir.join(format!("metrics_p{i}.csv")), &h.rows)?;
            }
        }
    }
    Ok(output)
}
