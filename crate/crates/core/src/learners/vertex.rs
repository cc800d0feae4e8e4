use std::sync::Arc;

use super::snapshot::{from_f64, mismatch, to_f64};
use super::{loss_vector, Algorithm, Feedback, Hyper, Learner, Snapshot, SnapshotState, SNAPSHOT_VERSION};
use crate::error::{Error, Result};
use crate::game_tree::{behavioral_to_seq, seq_to_behavioral, BehavioralPolicy, GameTree, SequencePolicy};
use crate::partition::log_partition_vertex;
use crate::scalar::{softmax_into, Real};
use crate::trigger_set::enumerate_policies;

/// Multiplicative weights over the enumerated deterministic policies.
pub struct VertexMwu<R: Real> {
    tree: Arc<GameTree>,
    hyper: Hyper,
    vertices: Vec<SequencePolicy<R>>,
    log_weights: Vec<R>,
    mu: SequencePolicy<R>,
    episode: usize,
}

impl<R: Real> VertexMwu<R> {
    pub fn new(tree: Arc<GameTree>, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        let vertices = enumerate_policies(&tree, hyper.enumeration_cap)?;
        let n = vertices.len();
        let mut l = VertexMwu {
            mu: SequencePolicy::zeros(&tree, None),
            tree,
            hyper,
            vertices,
            log_weights: vec![R::zero(); n],
            episode: 0,
        };
        l.refresh();
        Ok(l)
    }

    pub(crate) fn restore(tree: Arc<GameTree>, hyper: Hyper, episode: usize, st: &SnapshotState) -> Result<Self> {
        let mut l = Self::new(tree, hyper)?;
        let SnapshotState::Weights { log_weights } = st else { return Err(mismatch()) };
        l.log_weights = from_f64(log_weights, l.vertices.len())?;
        l.episode = episode;
        l.refresh();
        Ok(l)
    }

    fn refresh(&mut self) {
        let mut p = vec![R::zero(); self.vertices.len()];
        softmax_into(&self.log_weights, &mut p);
        self.mu.values.iter_mut().for_each(|v| *v = R::zero());
        for (v, &w) in self.vertices.iter().zip(&p) {
            for (a, &x) in self.mu.values.iter_mut().zip(&v.values) {
                *a = *a + w * x;
            }
        }
    }
}

impl<R: Real> Learner<R> for VertexMwu<R> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::VertexMwu
    }

    fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    fn episode(&self) -> usize {
        self.episode
    }

    fn policy(&self) -> &SequencePolicy<R> {
        &self.mu
    }

    fn observe(&mut self, feedback: Feedback<'_, R>) -> Result<()> {
        let loss = loss_vector(&self.tree, &feedback, &self.mu.values, R::of(self.hyper.gamma))?;
        let eta = R::of(self.hyper.eta);
        for (w, v) in self.log_weights.iter_mut().zip(&self.vertices) {
            *w = *w - eta * v.dot(&loss);
        }
        self.episode += 1;
        self.refresh();
        Ok(())
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            algorithm: Algorithm::VertexMwu,
            hyper: self.hyper.clone(),
            episode: self.episode,
            state: SnapshotState::Weights { log_weights: to_f64(&self.log_weights) },
        }
    }
}

enum Form<R> {
    Leader { cumulative: Vec<R> },
    Step,
}

/// Mirror descent with the dilated entropy. The leader form evaluates the vertex recursion
/// at the cumulative loss; the step form reweights each behavioral row by the one-step
/// recursion values.
pub struct DilatedOmd<R: Real> {
    tree: Arc<GameTree>,
    algorithm: Algorithm,
    hyper: Hyper,
    form: Form<R>,
    behavioral: BehavioralPolicy<R>,
    mu: SequencePolicy<R>,
    episode: usize,
}

impl<R: Real> DilatedOmd<R> {
    pub fn new(tree: Arc<GameTree>, algorithm: Algorithm, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        let form = match algorithm {
            Algorithm::DilatedOmd => Form::Leader { cumulative: vec![R::zero(); tree.num_sequences()] },
            Algorithm::DilatedOmdInc => Form::Step,
            a => return Err(Error::Config(format!("{a} is not a dilated-entropy learner"))),
        };
        // The dilated entropy is minimized by the uniform distribution over vertices.
        let mu = log_partition_vertex(&tree, &vec![R::zero(); tree.num_sequences()])?.1;
        let behavioral = seq_to_behavioral(&tree, &mu)?;
        Ok(DilatedOmd { tree, algorithm, hyper, form, behavioral, mu, episode: 0 })
    }

    pub(crate) fn restore(tree: Arc<GameTree>, algorithm: Algorithm, hyper: Hyper, episode: usize, st: &SnapshotState) -> Result<Self> {
        let mut l = Self::new(tree, algorithm, hyper)?;
        let n = l.tree.num_sequences();
        match (&mut l.form, st) {
            (Form::Leader { cumulative }, SnapshotState::CumulativeLoss { loss }) => {
                *cumulative = from_f64(loss, n)?;
                let scaled: Vec<R> = cumulative.iter().map(|&c| c * R::of(l.hyper.eta)).collect();
                l.mu = log_partition_vertex(&l.tree, &scaled)?.1;
            }
            (Form::Step, SnapshotState::Behavioral { probs }) => {
                l.behavioral.probs = from_f64(probs, n)?;
                l.mu = behavioral_to_seq(&l.tree, &l.behavioral, None)?;
            }
            _ => return Err(mismatch()),
        }
        l.episode = episode;
        Ok(l)
    }

    fn step(&mut self, loss: &[R]) -> Result<()> {
        let tree = &self.tree;
        let eta = R::of(self.hyper.eta);
        match &mut self.form {
            Form::Leader { cumulative } => {
                for (c, &l) in cumulative.iter_mut().zip(loss) {
                    *c = *c + l;
                }
                let scaled: Vec<R> = cumulative.iter().map(|&c| c * eta).collect();
                self.mu = log_partition_vertex(tree, &scaled)?.1;
            }
            Form::Step => {
                let mut inc = vec![R::zero(); tree.num_infosets()];
                let mut logits = vec![R::zero(); tree.num_actions()];
                for x in (0..tree.num_infosets()).rev() {
                    for (a, s) in tree.seqs_of(x).enumerate() {
                        let below = tree.children(s).iter().fold(R::zero(), |acc, &c| acc + inc[c]);
                        logits[a] = self.behavioral.probs[s].ln() + below - eta * loss[s];
                    }
                    inc[x] = softmax_into(&logits, &mut self.behavioral.probs[tree.seqs_of(x)]);
                }
                self.mu = behavioral_to_seq(tree, &self.behavioral, None)?;
            }
        }
        self.episode += 1;
        Ok(())
    }
}

impl<R: Real> Learner<R> for DilatedOmd<R> {
    fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    fn episode(&self) -> usize {
        self.episode
    }

    fn policy(&self) -> &SequencePolicy<R> {
        &self.mu
    }

    fn observe(&mut self, feedback: Feedback<'_, R>) -> Result<()> {
        let loss = loss_vector(&self.tree, &feedback, &self.mu.values, R::of(self.hyper.gamma))?;
        self.step(&loss)
    }

    fn snapshot(&self) -> Snapshot {
        let state = match &self.form {
            Form::Leader { cumulative } => SnapshotState::CumulativeLoss { loss: to_f64(cumulative) },
            Form::Step => SnapshotState::Behavioral { probs: to_f64(&self.behavioral.probs) },
        };
        Snapshot {
            version: SNAPSHOT_VERSION,
            algorithm: self.algorithm,
            hyper: self.hyper.clone(),
            episode: self.episode,
            state,
        }
    }
}
