use std::sync::Arc;

use super::snapshot::{from_f64, mismatch, to_f64};
use super::{loss_vector, Algorithm, Feedback, Hyper, Learner, Snapshot, SnapshotState, SNAPSHOT_VERSION};
use crate::error::Result;
use crate::feedback::{assemble_matrix, LossMatrix};
use crate::game_tree::{GameTree, SequencePolicy};
use crate::partition::vertex_average;
use crate::scalar::{softmax_into, Real};
use crate::trigger_set::{enumerate_trigger_vertices, fixed_point, trigger_inner, TriggerProfile, TriggerVertex};

/// Multiplicative weights over the enumerated deterministic trigger modifications. Only
/// practical on small trees; serves as the reference for the recursive learners.
pub struct PhiHedge<R: Real> {
    tree: Arc<GameTree>,
    hyper: Hyper,
    vertices: Vec<TriggerVertex<R>>,
    log_weights: Vec<R>,
    weights: Vec<R>,
    profile: TriggerProfile<R>,
    mu: SequencePolicy<R>,
    episode: usize,
}

impl<R: Real> PhiHedge<R> {
    pub fn new(tree: Arc<GameTree>, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        let vertices = enumerate_trigger_vertices(&tree, hyper.enumeration_cap)?;
        let n = vertices.len();
        let mut l = PhiHedge {
            profile: TriggerProfile::uniform(&tree),
            mu: SequencePolicy::zeros(&tree, None),
            tree,
            hyper,
            vertices,
            log_weights: vec![R::zero(); n],
            weights: vec![R::zero(); n],
            episode: 0,
        };
        l.refresh()?;
        Ok(l)
    }

    pub(crate) fn restore(tree: Arc<GameTree>, hyper: Hyper, episode: usize, st: &SnapshotState) -> Result<Self> {
        let mut l = Self::new(tree, hyper)?;
        let SnapshotState::Weights { log_weights } = st else { return Err(mismatch()) };
        l.log_weights = from_f64(log_weights, l.vertices.len())?;
        l.episode = episode;
        l.refresh()?;
        Ok(l)
    }

    /// Current probabilities over [`PhiHedge::vertices`].
    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub fn vertices(&self) -> &[TriggerVertex<R>] {
        &self.vertices
    }

    fn refresh(&mut self) -> Result<()> {
        softmax_into(&self.log_weights, &mut self.weights);
        self.profile = vertex_average(&self.tree, &self.vertices, &self.weights);
        self.mu = fixed_point(&self.tree, &self.profile)?;
        Ok(())
    }

    pub fn step_matrix(&mut self, mat: &LossMatrix<R>) -> Result<()> {
        let eta = R::of(self.hyper.eta);
        for (w, v) in self.log_weights.iter_mut().zip(&self.vertices) {
            *w = *w - eta * trigger_inner(&self.tree, v.trigger, &v.policy.values, mat);
        }
        self.episode += 1;
        self.refresh()
    }
}

impl<R: Real> Learner<R> for PhiHedge<R> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::PhiHedge
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

    fn profile(&self) -> Option<&TriggerProfile<R>> {
        Some(&self.profile)
    }

    fn observe(&mut self, feedback: Feedback<'_, R>) -> Result<()> {
        let mat = match feedback {
            Feedback::Matrix(m) => m.clone(),
            _ => assemble_matrix(&loss_vector(&self.tree, &feedback, &self.mu.values, R::of(self.hyper.gamma))?, &self.mu.values)?,
        };
        self.step_matrix(&mat)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            algorithm: Algorithm::PhiHedge,
            hyper: self.hyper.clone(),
            episode: self.episode,
            state: SnapshotState::Weights { log_weights: to_f64(&self.log_weights) },
        }
    }
}
