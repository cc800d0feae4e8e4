use std::sync::Arc;

use super::snapshot::{from_f64, mismatch, to_f64};
use super::{loss_vector, Algorithm, Feedback, Hyper, Learner, Snapshot, SnapshotState, SNAPSHOT_VERSION};
use crate::error::{Error, Result};
use crate::feedback::{adaptive_estimator, assemble_adaptive_matrix, assemble_matrix, DenseMatrix, LossMatrix};
use crate::game_tree::{descendant_counts, BalancedPolicies, BehavioralPolicy, GameTree, SequencePolicy};
use crate::partition::{incremental_update, log_partition_scaled, Scaling, TriggerState};
use crate::scalar::Real;
use crate::trigger_set::{fixed_point, TriggerProfile};

enum Form<R> {
    Ftrl { cumulative: DenseMatrix<R> },
    Incremental { cumulative: Option<DenseMatrix<R>> },
}

/// Trigger-regret minimizer driven by the (plain or balanced) trigger log-partition
/// function, in leader form or one-step form.
pub struct TriggerOmd<R: Real> {
    tree: Arc<GameTree>,
    algorithm: Algorithm,
    hyper: Hyper,
    scaling: Scaling<R>,
    /// `μ^{⋆,h}_{1:h}` at each sequence's own layer; balanced learners only.
    balanced_reach: Option<Vec<R>>,
    form: Form<R>,
    state: TriggerState<R>,
    /// Recursion values of the last update: `F^t` in leader form, the increments otherwise.
    inner: Vec<Vec<R>>,
    profile: TriggerProfile<R>,
    mu: SequencePolicy<R>,
    episode: usize,
}

impl<R: Real> TriggerOmd<R> {
    pub fn new(tree: Arc<GameTree>, algorithm: Algorithm, hyper: Hyper) -> Result<Self> {
        let (scaling, balanced_reach) = if algorithm.is_balanced() {
            let bp = BalancedPolicies::<R>::new(&tree, &descendant_counts(&tree));
            let reach = (0..tree.num_sequences()).map(|s| bp.own_layer_reach(&tree, s)).collect();
            (Scaling::balanced(&tree, &bp)?, Some(reach))
        } else {
            (Scaling::unit(), None)
        };
        Self::with_scaling(tree, algorithm, hyper, scaling, balanced_reach)
    }

    /// Learner with explicit scaling; used to check degenerate scalings.
    pub fn with_scaling(
        tree: Arc<GameTree>,
        algorithm: Algorithm,
        hyper: Hyper,
        scaling: Scaling<R>,
        balanced_reach: Option<Vec<R>>,
    ) -> Result<Self> {
        if !algorithm.is_trigger() || algorithm == Algorithm::PhiHedge {
            return Err(Error::Config(format!("{algorithm} is not a trigger log-partition learner")));
        }
        hyper.validate()?;
        let n = tree.num_sequences();
        let zero = DenseMatrix::zeros(n);
        let grad = log_partition_scaled(&tree, &zero, R::of(hyper.eta), &scaling)?;
        let incremental = matches!(algorithm, Algorithm::EfceOmdInc | Algorithm::BalancedEfceOmdInc);
        let form = if incremental {
            Form::Incremental { cumulative: hyper.resync_every.map(|_| DenseMatrix::zeros(n)) }
        } else {
            Form::Ftrl { cumulative: zero }
        };
        let profile = grad.state.profile(&tree);
        let mu = fixed_point(&tree, &profile)?;
        Ok(TriggerOmd {
            tree,
            algorithm,
            hyper,
            scaling,
            balanced_reach,
            form,
            state: grad.state,
            inner: grad.inner,
            profile,
            mu,
            episode: 0,
        })
    }

    pub(crate) fn restore(tree: Arc<GameTree>, algorithm: Algorithm, hyper: Hyper, episode: usize, st: &SnapshotState) -> Result<Self> {
        let mut l = Self::new(tree, algorithm, hyper)?;
        let n = l.tree.num_sequences();
        match (&mut l.form, st) {
            (Form::Ftrl { cumulative }, SnapshotState::CumulativeMatrix { dim, data }) => {
                if *dim != n {
                    return Err(Error::Dimension { expected: n, got: *dim });
                }
                *cumulative = DenseMatrix::from_fn(n, |i, j| R::of(data[i * n + j]));
                let grad = log_partition_scaled(&l.tree, cumulative, R::of(l.hyper.eta), &l.scaling)?;
                l.state = grad.state;
                l.inner = grad.inner;
            }
            (Form::Incremental { cumulative }, SnapshotState::Trigger { lambda, m, cumulative: cum }) => {
                l.state.lambda = from_f64(lambda, n)?;
                if m.len() != n {
                    return Err(Error::Dimension { expected: n, got: m.len() });
                }
                l.state.m = m.iter().map(|p| Ok(BehavioralPolicy { probs: from_f64(p, n)? })).collect::<Result<_>>()?;
                if let (Some(c), Some(data)) = (cumulative.as_mut(), cum) {
                    *c = DenseMatrix::from_fn(n, |i, j| R::of(data[i * n + j]));
                }
            }
            _ => return Err(mismatch()),
        }
        l.episode = episode;
        l.refresh()?;
        Ok(l)
    }

    pub fn state(&self) -> &TriggerState<R> {
        &self.state
    }

    /// `F^t_{k, x}` (leader form) or the last increments `F̃^t_{k, x}` (one-step form).
    pub fn inner_values(&self) -> &[Vec<R>] {
        &self.inner
    }

    pub fn scaling(&self) -> &Scaling<R> {
        &self.scaling
    }

    fn refresh(&mut self) -> Result<()> {
        self.profile = self.state.profile(&self.tree);
        self.mu = fixed_point(&self.tree, &self.profile)?;
        Ok(())
    }

    fn estimate(&self, feedback: &Feedback<'_, R>) -> Result<LossMatrix<R>> {
        let tree = &self.tree;
        let gamma = R::of(self.hyper.gamma);
        match (feedback, &self.balanced_reach) {
            (Feedback::Matrix(m), _) => Ok((*m).clone()),
            (Feedback::Bandit(traj), Some(reach)) => {
                let m: Vec<Vec<R>> = self.profile.m.iter().map(|p| p.values.clone()).collect();
                let family = adaptive_estimator(tree, traj, &self.mu.values, &m, reach, gamma)?;
                assemble_adaptive_matrix(&family, &self.mu.values)
            }
            _ => assemble_matrix(&loss_vector(tree, feedback, &self.mu.values, gamma)?, &self.mu.values),
        }
    }

    /// One update with an explicit loss matrix.
    pub fn step_matrix(&mut self, mat: &LossMatrix<R>) -> Result<()> {
        let n = self.tree.num_sequences();
        let eta = R::of(self.hyper.eta);
        match &mut self.form {
            Form::Ftrl { cumulative } => {
                cumulative.add_scaled(mat, R::one())?;
                let grad = log_partition_scaled(&self.tree, cumulative, eta, &self.scaling)?;
                self.state = grad.state;
                self.inner = grad.inner;
            }
            Form::Incremental { cumulative } => {
                self.inner = incremental_update(&self.tree, &mut self.state, mat, eta, &self.scaling)?;
                if let Some(c) = cumulative.as_mut() {
                    c.add_scaled(mat, R::one())?;
                    let every = self.hyper.resync_every.expect("cumulative kept only when resyncing");
                    if (self.episode + 1) % every == 0 {
                        self.state = log_partition_scaled(&self.tree, c, eta, &self.scaling)?.state;
                    }
                }
                debug_assert_eq!(self.state.lambda.len(), n);
            }
        }
        self.episode += 1;
        self.refresh()
    }
}

impl<R: Real> Learner<R> for TriggerOmd<R> {
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

    fn profile(&self) -> Option<&TriggerProfile<R>> {
        Some(&self.profile)
    }

    fn observe(&mut self, feedback: Feedback<'_, R>) -> Result<()> {
        let mat = self.estimate(&feedback)?;
        self.step_matrix(&mat)
    }

    fn snapshot(&self) -> Snapshot {
        let state = match &self.form {
            Form::Ftrl { cumulative } => SnapshotState::CumulativeMatrix {
                dim: self.tree.num_sequences(),
                data: to_f64(cumulative.as_slice()),
            },
            Form::Incremental { cumulative } => SnapshotState::Trigger {
                lambda: to_f64(&self.state.lambda),
                m: self.state.m.iter().map(|b| to_f64(&b.probs)).collect(),
                cumulative: cumulative.as_ref().map(|c| to_f64(c.as_slice())),
            },
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
