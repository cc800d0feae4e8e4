//! Turn-based extensive-form games and their per-player tree-form views.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::{sample_categorical, RewardSampler};
use super::{BehavioralPolicy, EpisodeEnvironment, GameFile, GameTree, Step, Trajectory};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EfgNode {
    Chance { outcomes: Vec<(f64, EfgNode)> },
    Decision {
        player: usize,
        infoset: String,
        children: Vec<EfgNode>,
    },
    /// Raw utilities, one per player.
    Terminal { payoffs: Vec<f64> },
}

/// A game with perfect recall. Every decision node has exactly `num_actions` children;
/// smaller action sets are padded with duplicate children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Efg {
    pub root: EfgNode,
    pub num_players: usize,
    pub num_actions: usize,
    /// Utility bounds used to map payoffs to rewards in `[0, 1]`.
    pub payoff_range: (f64, f64),
}

impl Efg {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.payoff_range;
        if !(hi > lo) {
            return Err(Error::InvalidGameFile("empty payoff range".into()));
        }
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                EfgNode::Chance { outcomes } => {
                    let total: f64 = outcomes.iter().map(|(p, _)| p).sum();
                    if outcomes.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidGameFile("chance outcomes are not a distribution".into()));
                    }
                    stack.extend(outcomes.iter().map(|(_, c)| c));
                }
                EfgNode::Decision { player, children, infoset } => {
                    if *player >= self.num_players || children.len() != self.num_actions {
                        return Err(Error::InvalidGameFile(format!("malformed decision at `{infoset}`")));
                    }
                    stack.extend(children.iter());
                }
                EfgNode::Terminal { payoffs } => {
                    if payoffs.len() != self.num_players || payoffs.iter().any(|&u| u < lo || u > hi) {
                        return Err(Error::InvalidGameFile("terminal payoffs out of range".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn reward(&self, u: f64) -> f64 {
        let (lo, hi) = self.payoff_range;
        (u - lo) / (hi - lo)
    }
}

/// One player's tree-form view of an [`Efg`]. Paths that end before the player has made
/// `horizon` decisions continue through padding infosets whose actions are all equivalent,
/// so every episode has exactly `horizon` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerView {
    pub player: usize,
    pub tree: GameTree,
    infoset_of: HashMap<String, usize>,
    /// Padding infoset entered after a terminal that follows the keyed own sequence.
    pad_after: HashMap<Option<usize>, usize>,
}

type OwnSeq = Option<(String, usize)>;

fn pad_name(parent: &OwnSeq) -> String {
    match parent {
        None => "pad".to_string(),
        Some((n, a)) => format!("{n}:{a}:pad"),
    }
}

impl PlayerView {
    pub fn build(efg: &Efg, player: usize) -> Result<Self> {
        efg.validate()?;
        // name -> (parent own sequence, depth, discovery order)
        let mut infos: HashMap<String, (OwnSeq, usize, usize)> = HashMap::new();
        let mut early: BTreeMap<String, (OwnSeq, usize)> = BTreeMap::new();
        let mut horizon = 0;
        let mut stack: Vec<(&EfgNode, OwnSeq, usize)> = vec![(&efg.root, None, 0)];
        let mut terminals = Vec::new();
        while let Some((node, own, depth)) = stack.pop() {
            match node {
                EfgNode::Chance { outcomes } => {
                    for (_, c) in outcomes.iter().rev() {
                        stack.push((c, own.clone(), depth));
                    }
                }
                EfgNode::Decision { player: p, infoset, children } if *p == player => {
                    let order = infos.len();
                    let entry = infos
                        .entry(infoset.clone())
                        .or_insert((own.clone(), depth + 1, order));
                    if entry.0 != own || entry.1 != depth + 1 {
                        return Err(Error::InvalidGameFile(format!(
                            "infoset `{infoset}` violates perfect recall"
                        )));
                    }
                    for (a, c) in children.iter().enumerate().rev() {
                        stack.push((c, Some((infoset.clone(), a)), depth + 1));
                    }
                }
                EfgNode::Decision { children, .. } => {
                    for c in children.iter().rev() {
                        stack.push((c, own.clone(), depth));
                    }
                }
                EfgNode::Terminal { .. } => {
                    horizon = horizon.max(depth);
                    terminals.push((own, depth));
                }
            }
        }
        if horizon == 0 {
            return Err(Error::InvalidGameFile(format!("player {player} never acts")));
        }
        for (own, depth) in terminals {
            if depth < horizon {
                early.insert(pad_name(&own), (own, depth));
            }
        }
        // (depth, is padding, discovery order, name, parent)
        let mut names: Vec<(usize, bool, usize, String, OwnSeq)> = infos
            .into_iter()
            .map(|(n, (p, d, o))| (d, false, o, n, p))
            .collect();
        let mut pads: Vec<(OwnSeq, String)> = Vec::new();
        let mut frontier: Vec<(OwnSeq, usize)> = early.into_values().collect();
        while let Some((parent, depth)) = frontier.pop() {
            let name = pad_name(&parent);
            names.push((depth + 1, true, 0, name.clone(), parent.clone()));
            pads.push((parent, name.clone()));
            if depth + 1 < horizon {
                for a in 0..efg.num_actions {
                    frontier.push((Some((name.clone(), a)), depth + 1));
                }
            }
        }
        names.sort_by(|a, b| (a.0, a.1, a.2, &a.3).cmp(&(b.0, b.1, b.2, &b.3)));
        let mut desc = GameFile {
            horizon,
            layers: vec![Vec::new(); horizon],
            num_actions: efg.num_actions,
            ..Default::default()
        };
        for (d, _, _, name, parent) in &names {
            desc.layers[d - 1].push(name.clone());
            if let Some((pn, a)) = parent {
                desc.children
                    .entry(format!("{pn},{a}"))
                    .or_default()
                    .push(name.clone());
            }
        }
        let tree = GameTree::build(&desc)?;
        let to_seq = |own: &OwnSeq| -> Result<Option<usize>> {
            Ok(match own {
                None => None,
                Some((n, a)) => Some(tree.seq(tree.infoset(n)?, *a)),
            })
        };
        let mut pad_after = HashMap::new();
        for (parent, name) in &pads {
            pad_after.insert(to_seq(parent)?, tree.infoset(name)?);
        }
        let infoset_of = names
            .iter()
            .map(|(_, _, _, n, _)| Ok((n.clone(), tree.infoset(n)?)))
            .collect::<Result<_>>()?;
        Ok(PlayerView {
            player,
            tree,
            infoset_of,
            pad_after,
        })
    }

    pub fn infoset(&self, name: &str) -> Result<usize> {
        self.infoset_of
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownInfoset(name.to_string()))
    }

    fn depth_of(&self, own: Option<usize>) -> usize {
        own.map_or(0, |s| self.tree.layer_of(s / self.tree.num_actions()) + 1)
    }
}

/// Outcome of [`EfgGame::reduce`]: the environment plus sequences whose transition
/// denominators vanished under the co-players' policies.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub env: EpisodeEnvironment,
    pub unreachable: Vec<usize>,
}

/// A game together with every player's view.
#[derive(Clone, Debug, PartialEq)]
pub struct EfgGame {
    pub efg: Efg,
    pub views: Vec<PlayerView>,
}

enum Padded {
    Enter { from: Option<usize>, pad: usize },
    Leaf(usize),
}

#[derive(Default)]
struct Accum {
    initial: HashMap<usize, f64>,
    edges: HashMap<(usize, usize), f64>,
    reward_num: Vec<f64>,
    reward_den: Vec<f64>,
}

impl EfgGame {
    pub fn new(efg: Efg) -> Result<Self> {
        let views = (0..efg.num_players)
            .map(|i| PlayerView::build(&efg, i))
            .collect::<Result<_>>()?;
        Ok(EfgGame { efg, views })
    }

    fn check_policies(&self, policies: &[BehavioralPolicy<f64>]) -> Result<()> {
        if policies.len() != self.views.len() {
            return Err(Error::Dimension {
                expected: self.views.len(),
                got: policies.len(),
            });
        }
        for (v, p) in self.views.iter().zip(policies) {
            if p.probs.len() != v.tree.num_sequences() {
                return Err(Error::Dimension {
                    expected: v.tree.num_sequences(),
                    got: p.probs.len(),
                });
            }
        }
        Ok(())
    }

    fn prob(&self, policies: &[BehavioralPolicy<f64>], player: usize, infoset: &str, a: usize) -> f64 {
        let v = &self.views[player];
        let x = v.infoset_of[infoset];
        policies[player].probs[v.tree.seq(x, a)]
    }

    /// Visits every own infoset entry and every terminal with the chance and co-player
    /// reach `rho` and the player's last own sequence.
    fn walk(
        &self,
        player: usize,
        policies: &[BehavioralPolicy<f64>],
        mut on_enter: impl FnMut(Option<usize>, usize, f64),
        mut on_terminal: impl FnMut(Option<usize>, f64, &[f64]),
    ) {
        let view = &self.views[player];
        let mut stack: Vec<(&EfgNode, Option<usize>, f64)> = vec![(&self.efg.root, None, 1.0)];
        while let Some((node, own, rho)) = stack.pop() {
            match node {
                EfgNode::Chance { outcomes } => {
                    for (p, c) in outcomes {
                        stack.push((c, own, rho * p));
                    }
                }
                EfgNode::Decision { player: p, infoset, children } if *p == player => {
                    let x = view.infoset_of[infoset];
                    on_enter(own, x, rho);
                    for (a, c) in children.iter().enumerate() {
                        stack.push((c, Some(view.tree.seq(x, a)), rho));
                    }
                }
                EfgNode::Decision { player: p, infoset, children } => {
                    for (a, c) in children.iter().enumerate() {
                        let q = self.prob(policies, *p, infoset, a);
                        stack.push((c, own, rho * q));
                    }
                }
                EfgNode::Terminal { payoffs } => on_terminal(own, rho, payoffs),
            }
        }
    }

    /// Padding entered after a terminal that follows `own`, and the final sequences at the
    /// horizon. Every padding action is followed.
    fn padded(&self, player: usize, own: Option<usize>, out: &mut Vec<Padded>) {
        let view = &self.views[player];
        let mut frontier = vec![own];
        while let Some(s) = frontier.pop() {
            if view.depth_of(s) == view.tree.horizon() {
                out.push(Padded::Leaf(s.expect("horizon is positive")));
                continue;
            }
            let pad = view.pad_after[&s];
            out.push(Padded::Enter { from: s, pad });
            frontier.extend(view.tree.seqs_of(pad).map(Some));
        }
    }

    /// Environment faced by `player` when co-players follow `policies`. Transitions are
    /// ratios of summed chance and co-player reach; rewards sit at the last step.
    pub fn reduce(&self, player: usize, policies: &[BehavioralPolicy<f64>]) -> Result<Reduction> {
        self.check_policies(policies)?;
        let view = &self.views[player];
        let tree = &view.tree;
        let n = tree.num_sequences();
        let acc = std::cell::RefCell::new(Accum {
            reward_num: vec![0.0; n],
            reward_den: vec![0.0; n],
            ..Default::default()
        });
        let enter = |own: Option<usize>, x: usize, rho: f64| {
            let mut acc = acc.borrow_mut();
            match own {
                None => *acc.initial.entry(x).or_default() += rho,
                Some(s) => *acc.edges.entry((s, x)).or_default() += rho,
            }
        };
        let mut path = Vec::new();
        self.walk(player, policies, enter, |own, rho, payoffs| {
            let r = self.efg.reward(payoffs[player]);
            path.clear();
            self.padded(player, own, &mut path);
            let mut acc = acc.borrow_mut();
            for step in &path {
                match *step {
                    Padded::Enter { from: None, pad } => *acc.initial.entry(pad).or_default() += rho,
                    Padded::Enter { from: Some(p), pad } => *acc.edges.entry((p, pad)).or_default() += rho,
                    Padded::Leaf(s) => {
                        acc.reward_num[s] += rho * r;
                        acc.reward_den[s] += rho;
                    }
                }
            }
        });
        let acc = acc.into_inner();
        let mut env = EpisodeEnvironment::uniform(tree, 0.0);
        env.sampler = RewardSampler::Bernoulli;
        let total: f64 = acc.initial.values().sum();
        for (pos, x) in tree.layer(0).iter().enumerate() {
            env.initial[pos] = acc.initial.get(x).copied().unwrap_or(0.0) / total;
        }
        let mut unreachable = Vec::new();
        for s in 0..n {
            let kids = tree.children(s);
            if kids.is_empty() {
                let den = acc.reward_den[s];
                env.mean_reward[s] = if den > 0.0 { (acc.reward_num[s] / den).clamp(0.0, 1.0) } else { 0.0 };
                if den <= 0.0 {
                    unreachable.push(s);
                }
                continue;
            }
            let row: Vec<f64> = kids
                .iter()
                .map(|&c| acc.edges.get(&(s, c)).copied().unwrap_or(0.0))
                .collect();
            let den: f64 = row.iter().sum();
            if den > 0.0 {
                env.transition[s] = row.iter().map(|v| v / den).collect();
            } else {
                unreachable.push(s);
            }
        }
        Ok(Reduction { env, unreachable })
    }

    /// Loss vector of `player` against co-players, accumulated terminal by terminal:
    /// `Σ_z reach_{-i}(z) (1 - r_i(z))` on the last (padded) sequence of each terminal and
    /// zero elsewhere. Differs from the expected loss of the reduced environment only by a
    /// per-layer constant.
    pub fn terminal_losses(&self, player: usize, policies: &[BehavioralPolicy<f64>]) -> Result<Vec<f64>> {
        self.check_policies(policies)?;
        let tree = &self.views[player].tree;
        let mut loss = vec![0.0; tree.num_sequences()];
        let mut path = Vec::new();
        self.walk(player, policies, |_, _, _| {}, |own, rho, payoffs| {
            let r = self.efg.reward(payoffs[player]);
            path.clear();
            self.padded(player, own, &mut path);
            for step in &path {
                if let Padded::Leaf(s) = *step {
                    loss[s] += rho * (1.0 - r);
                }
            }
        });
        Ok(loss)
    }

    /// Expected raw utility of every player under independent behavioral play.
    pub fn expected_utilities(&self, policies: &[BehavioralPolicy<f64>]) -> Result<Vec<f64>> {
        self.check_policies(policies)?;
        let mut out = vec![0.0; self.efg.num_players];
        let mut stack = vec![(&self.efg.root, 1.0)];
        while let Some((node, p)) = stack.pop() {
            match node {
                EfgNode::Chance { outcomes } => stack.extend(outcomes.iter().map(|(q, c)| (c, p * q))),
                EfgNode::Decision { player, infoset, children } => {
                    for (a, c) in children.iter().enumerate() {
                        stack.push((c, p * self.prob(policies, *player, infoset, a)));
                    }
                }
                EfgNode::Terminal { payoffs } => {
                    for (o, u) in out.iter_mut().zip(payoffs) {
                        *o += p * u;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Plays one joint episode and returns each player's own trajectory. The terminal reward
    /// is placed on each player's final (possibly padded) step.
    pub fn sample_joint<G: Rng + ?Sized>(&self, policies: &[BehavioralPolicy<f64>], rng: &mut G) -> Result<Vec<Trajectory>> {
        self.check_policies(policies)?;
        let mut trajs = vec![Trajectory::default(); self.views.len()];
        let mut node = &self.efg.root;
        loop {
            match node {
                EfgNode::Chance { outcomes } => {
                    let probs: Vec<f64> = outcomes.iter().map(|(p, _)| *p).collect();
                    node = &outcomes[sample_categorical(&probs, rng)].1;
                }
                EfgNode::Decision { player, infoset, children } => {
                    let view = &self.views[*player];
                    let x = view.infoset_of[infoset];
                    let a = sample_categorical(policies[*player].action_probs(&view.tree, x), rng);
                    trajs[*player].steps.push(Step { infoset: x, action: a, reward: 0.0 });
                    node = &children[a];
                }
                EfgNode::Terminal { payoffs } => {
                    for (i, (view, traj)) in self.views.iter().zip(trajs.iter_mut()).enumerate() {
                        let mut own = traj.steps.last().map(|s| view.tree.seq(s.infoset, s.action));
                        while view.depth_of(own) < view.tree.horizon() {
                            let pad = view.pad_after[&own];
                            let a = sample_categorical(policies[i].action_probs(&view.tree, pad), rng);
                            traj.steps.push(Step { infoset: pad, action: a, reward: 0.0 });
                            own = Some(view.tree.seq(pad, a));
                        }
                        if let Some(last) = traj.steps.last_mut() {
                            last.reward = self.efg.reward(payoffs[i]);
                        }
                    }
                    return Ok(trajs);
                }
            }
        }
    }
}

const CARDS: [&str; 3] = ["J", "Q", "K"];

/// Three-card Kuhn poker with ante 1 and bet 1. Player 0 acts first: check (0) or bet (1);
/// facing a bet the actions are fold (0) and call (1).
pub fn kuhn_poker() -> Efg {
    let showdown = |c1: usize, c2: usize, stake: f64| {
        let u = if c1 > c2 { stake } else { -stake };
        EfgNode::Terminal { payoffs: vec![u, -u] }
    };
    let term = |u: f64| EfgNode::Terminal { payoffs: vec![u, -u] };
    let mut deals = Vec::new();
    for c1 in 0..3 {
        for c2 in 0..3 {
            if c1 == c2 {
                continue;
            }
            let (n1, n2) = (CARDS[c1], CARDS[c2]);
            let after_check = EfgNode::Decision {
                player: 1,
                infoset: format!("{n2}:c"),
                children: vec![
                    showdown(c1, c2, 1.0),
                    EfgNode::Decision {
                        player: 0,
                        infoset: format!("{n1}:cb"),
                        children: vec![term(-1.0), showdown(c1, c2, 2.0)],
                    },
                ],
            };
            let after_bet = EfgNode::Decision {
                player: 1,
                infoset: format!("{n2}:b"),
                children: vec![term(1.0), showdown(c1, c2, 2.0)],
            };
            deals.push((
                1.0 / 6.0,
                EfgNode::Decision {
                    player: 0,
                    infoset: n1.to_string(),
                    children: vec![after_check, after_bet],
                },
            ));
        }
    }
    Efg {
        root: EfgNode::Chance { outcomes: deals },
        num_players: 2,
        num_actions: 2,
        payoff_range: (-2.0, 2.0),
    }
}
