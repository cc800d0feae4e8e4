use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use efce::harness::{run_config, verify_all, Cadence, OpponentMode, RunConfig};
use efce::learners::{Algorithm, FeedbackMode, DEFAULT_DELTA, DEFAULT_ETA_CONST};

#[derive(Parser)]
#[command(name = "efce", version, about = "Trigger-regret learners and correlated-equilibrium self-play")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one learner against an adversary, or all players in self-play.
    Run(RunArgs),
    /// Run the built-in self checks and exit nonzero if any fails.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// `kuhn`, `gen:random:seed=..,layers=..,branching=..,actions=..`, `gen:wide:width=..,actions=..`
    /// or a JSON tree file.
    #[arg(long, env = "EFCE_GAME", default_value = "kuhn")]
    game: String,
    #[arg(long, env = "EFCE_ALGO", default_value = "efce-omd")]
    algo: Algorithm,
    #[arg(long, env = "EFCE_FEEDBACK", default_value = "full")]
    feedback: FeedbackMode,
    /// Number of episodes.
    #[arg(long = "T", env = "EFCE_T", default_value_t = 1024)]
    episodes: usize,
    #[arg(long, env = "EFCE_ETA")]
    eta: Option<f64>,
    #[arg(long, env = "EFCE_GAMMA")]
    gamma: Option<f64>,
    #[arg(long, env = "EFCE_DELTA", default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Multiplier of the default full-feedback learning rate.
    #[arg(long, env = "EFCE_ETA_CONST", default_value_t = DEFAULT_ETA_CONST)]
    eta_const: f64,
    #[arg(long, env = "EFCE_SEED", default_value_t = 0)]
    seed: u64,
    /// 1 for a single learner, 2 for self-play on a two-player game.
    #[arg(long, env = "EFCE_PLAYERS", default_value_t = 1)]
    players: usize,
    /// Opponent of a single learner in a multi-player game: `uniform` or `best-response`.
    #[arg(long, env = "EFCE_OPPONENT", default_value = "best-response")]
    opponent: OpponentMode,
    #[arg(long, env = "EFCE_OUT")]
    out: Option<PathBuf>,
    /// `pow2` or a fixed episode interval.
    #[arg(long, env = "EFCE_CADENCE", default_value = "pow2")]
    cadence: Cadence,
    /// Recompute the one-step forms from the cumulative loss every this many episodes.
    #[arg(long, env = "EFCE_RESYNC_EVERY")]
    resync_every: Option<usize>,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            game: a.game,
            algorithm: a.algo,
            feedback: a.feedback,
            episodes: a.episodes,
            eta: a.eta,
            gamma: a.gamma,
            delta: a.delta,
            eta_const: a.eta_const,
            seed: a.seed,
            players: a.players,
            opponent: a.opponent,
            out: a.out,
            cadence: a.cadence,
            resync_every: a.resync_every,
        }
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let config = RunConfig::from(args);
    let out = run_config(&config).with_context(|| format!("running {} on {}", config.algorithm, config.game))?;
    for (i, h) in out.histories.iter().enumerate() {
        let Some(last) = h.rows.last() else { continue };
        let who = if out.histories.len() > 1 { format!("player {i}: ") } else { String::new() };
        println!(
            "{who}T = {}, cumulative loss {:.6}, trigger regret {:.6}, external regret {:.6}, regret/sqrt(T) {:.6}{}",
            last.t,
            last.cum_loss,
            last.trigger_regret,
            last.external_regret,
            last.regret_over_sqrt_t,
            last.efce_gap.map_or(String::new(), |g| format!(", gap {g:.6e}")),
        );
    }
    if let Some(dir) = &config.out {
        println!("metrics written to {}", dir.display());
    }
    Ok(())
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => {
            run(args)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let reports = verify_all();
            for r in &reports {
                println!("{r}");
            }
            let ok = reports.iter().all(|r| r.passed);
            println!("{}", if ok { "all checks passed" } else { "some checks failed" });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
