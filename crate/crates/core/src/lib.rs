//! No-regret learning on tree-form adversarial decision problems: trigger-regret
//! minimization via log-partition recursions, balanced variants for bandit feedback,
//! dilated-entropy mirror descent, and brute-force oracles over vertex enumerations.

pub mod error;
pub mod feedback;
pub mod game_tree;
pub mod harness;
pub mod learners;
pub mod partition;
pub mod scalar;
pub mod trigger_set;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SequencePolicyF64 = game_tree::SequencePolicy<f64>;
pub type SequencePolicyF32 = game_tree::SequencePolicy<f32>;
pub type BehavioralPolicyF64 = game_tree::BehavioralPolicy<f64>;
pub type BehavioralPolicyF32 = game_tree::BehavioralPolicy<f32>;
pub type TriggerProfileF64 = trigger_set::TriggerProfile<f64>;
pub type TriggerProfileF32 = trigger_set::TriggerProfile<f32>;
pub type TriggerStateF64 = partition::TriggerState<f64>;
pub type TriggerStateF32 = partition::TriggerState<f32>;
pub type DenseMatrixF64 = feedback::DenseMatrix<f64>;
pub type DenseMatrixF32 = feedback::DenseMatrix<f32>;
