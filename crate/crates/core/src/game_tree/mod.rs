//! Tree-form decision problems, sequence-form policies and game generators.

mod balanced;
mod efg;
mod env;
mod policy;
mod random;
pub(crate) mod tree;

pub use balanced::{balanced_policy, descendant_counts, BalancedPolicies, DescendantCounts};
pub use efg::{kuhn_poker, Efg, EfgGame, EfgNode, PlayerView, Reduction};
pub use env::{EpisodeEnvironment, RewardSampler, Step, Trajectory};
pub(crate) use env::sample_categorical;
pub use policy::{behavioral_to_seq, seq_to_behavioral, BehavioralPolicy, SequencePolicy};
pub use random::{random_env, random_policy, random_simplex, random_tree, wide_tree};
pub use tree::{EnvFile, GameFile, GameTree};
