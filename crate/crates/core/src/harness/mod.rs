//! Experiment drivers, exact regret metrics, CSV output and run configuration.

mod adversary;
mod config;
mod metrics;
mod regret;
mod run;
mod verify;

pub use adversary::{Adversary, EfgOpponents, OpponentPlay, RandomEnvironments, Round, Schedule};
pub use config::{run_config, GameSource, LoadedGame, OpponentMode, RunConfig, RunOutput};
pub use metrics::{read_metrics, write_config_echo, write_metrics, MetricRow};
pub use regret::{efce_gap, external_regret, trigger_regret, RegretTracker};
pub use run::{run_adversarial, run_self_play, Cadence, RunHistory, RunOptions, SelfPlayHistory};
pub use verify::{
    check_balancing, check_equivalences, check_feedback, check_fixed_point, check_log_partition, check_online_to_batch,
    check_variational, equivalence_runs, oracle_games, rel_err, verify_all, CheckReport, ORACLE_CAP,
};
