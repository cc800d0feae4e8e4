//! Trigger modifications, vertex enumerations, fixed points and best trigger responses.

mod best_response;
mod fixed_point;
mod profile;
mod vertices;

pub use best_response::{best_subtree_response, best_trigger_response, best_vertex};
pub use fixed_point::{fixed_point, residual};
pub use profile::TriggerProfile;
pub use vertices::{
    apply_trigger, apply_trigger_vertex, enumerate_policies, enumerate_subtree_policies,
    enumerate_trigger_vertices, num_policies, num_trigger_vertices, subtree_policy_counts,
    trigger_inner, untriggered_trace, TriggerVertex,
};
