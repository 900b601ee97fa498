//! `relog`: train neural oracles, abstract rules, learn rule weights,
//! evaluate, explain and render.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "relog", version, about = "Weighted first-order action rules for reinforcement learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand; flags override the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Environment: getout, threefishes or loot.
    #[arg(long)]
    pub env: Option<String>,
    /// Variant: base, plus (GetOut+) or colored (3Fishes-C, Loot-C).
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the neural actor-critic oracle with PPO.
    TrainNeural {
        #[command(flatten)]
        common: Common,
        /// Total environment steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Generate candidate rules by oracle-guided beam search.
    Abstract {
        #[command(flatten)]
        common: Common,
        /// Neural oracle checkpoint.
        #[arg(long, conflicts_with = "scripted")]
        oracle: Option<PathBuf>,
        /// Use the hand-coded GetOut player as the oracle.
        #[arg(long)]
        scripted: bool,
        #[arg(long)]
        beam_width: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// Keep every refinement without scoring (template enumeration).
        #[arg(long)]
        no_guidance: bool,
    },
    /// Learn rule weights with the actor-critic updates.
    TrainLogic {
        #[command(flatten)]
        common: Common,
        /// Candidate rule file, optionally weight-prefixed.
        #[arg(long)]
        rules: PathBuf,
        /// Neural checkpoint whose critic bootstraps the TD errors; a fresh
        /// PPO run is made when absent.
        #[arg(long)]
        critic: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Weight rows (program size).
        #[arg(long)]
        slots: Option<usize>,
        /// Keep the top-k rules of every weight row after training.
        #[arg(long)]
        prune: Option<usize>,
    },
    /// Evaluate a logic or neural checkpoint (or the random policy).
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to evaluate; the uniform random policy when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        /// Pick the most probable action instead of sampling.
        #[arg(long)]
        greedy: bool,
        /// Rewrite a body predicate before evaluating, e.g. `--swap is_bigger_than same_color`.
        #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
        swap: Option<Vec<String>>,
    },
    /// Attribute the chosen action at one replayed step to the input atoms.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Step of the greedy replay to explain.
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Attribution rows printed to the terminal.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Print ASCII frames of an episode and optionally dump it as CSV.
    Render {
        #[command(flatten)]
        common: Common,
        /// Policy checkpoint; uniform random actions when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        steps: usize,
        /// Trajectory CSV destination.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::TrainNeural { common, steps } => commands::train_neural(&common, steps),
        Command::Abstract { common, oracle, scripted, beam_width, depth, no_guidance } => {
            commands::abstract_rules(&common, oracle.as_deref(), scripted, beam_width, depth, no_guidance)
        }
        Command::TrainLogic { common, rules, critic, steps, slots, prune } => {
            commands::train_logic(&common, &rules, critic.as_deref(), steps, slots, prune)
        }
        Command::Eval { common, checkpoint, episodes, greedy, swap } => {
            commands::eval(&common, checkpoint.as_deref(), episodes, greedy, swap.as_deref())
        }
        Command::Explain { common, checkpoint, step, top } => commands::explain(&common, &checkpoint, step, top),
        Command::Render { common, checkpoint, steps, trajectory } => {
            commands::render(&common, checkpoint.as_deref(), steps, trajectory.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<commands::UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
