//! Log-partition functions over trigger and vertex sets, their gradients, the matching
//! dilated entropies and enumeration oracles.

mod brute_force;
mod entropy;
mod scaled;
mod vertex;

pub use brute_force::{brute_force_kernel, brute_force_log_partition, brute_force_trigger, brute_force_vertex, vertex_average};
pub use entropy::{
    dilated_entropy, dilated_kl, trigger_dilated_entropy, trigger_dilated_kl, weighted_dilated_entropy,
    weighted_dilated_kl,
};
pub use scaled::{
    incremental_update, log_partition_balanced, log_partition_scaled, log_partition_trigger, Scaling,
    TriggerGradient, TriggerState,
};
pub use vertex::{kernel_eval, kernel_log, log_partition_vertex, vertex_inner};
