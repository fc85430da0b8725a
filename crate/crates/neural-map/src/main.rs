use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use neural_map::cli::{
    cmd_eval, cmd_gen_mazes, cmd_gradcheck, cmd_heatmap, cmd_train, parse_sizes, seed_from_env,
    CliError, EvalArgs, GenMazesArgs, HeatmapArgs, TrainArgs,
};

#[derive(Parser)]
#[command(
    name = "neural-map",
    version,
    about = "Spatial external memory for maze-navigation agents: maze sets, training, \
             evaluation, attention export, and gradient verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a held-out maze set and print per-size counts.
    GenMazes {
        /// Number of distinct mazes to produce.
        #[arg(long)]
        count: usize,
        /// Odd sizes as comma-separated values or ranges, e.g. "7-15" or "5,9-13".
        #[arg(long, default_value = "5-15")]
        sizes: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (one maze per line).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an agent, then evaluate it on held-out and training-distribution mazes.
    Train {
        /// Run config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Agent override: neural-map, lstm, mqn, random, or oracle.
        #[arg(long)]
        agent: Option<String>,
        /// Environment-step budget override.
        #[arg(long)]
        steps: Option<u64>,
        /// Held-out maze set to exclude from training and report on.
        #[arg(long)]
        test_set: PathBuf,
        /// Run directory for the config copy, metrics, checkpoints, and report.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint over a maze set.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        maze_set: PathBuf,
        /// Per-episode step cap.
        #[arg(long, default_value_t = 500)]
        cap: usize,
        /// Also write the bucketed report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one greedy episode and export per-step attention over map cells.
    Heatmap {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        maze_set: PathBuf,
        /// Maze id (decimal or 0x-hex) or @index into the set.
        #[arg(long)]
        maze_id: String,
        /// Attention CSV destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference check of every gradient rule and the composed memory step.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let env_seed = std::env::var("NMAP_SEED").ok();
    let seed_override = seed_from_env(env_seed.as_deref())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::GenMazes { count, sizes, seed, out: path } => {
            let sizes = parse_sizes(&sizes)?;
            let seed = seed_override.unwrap_or(seed);
            cmd_gen_mazes(&GenMazesArgs { count, sizes, seed, out: path }, &mut out)
        }
        Command::Train { config, agent, steps, test_set, out_dir } => {
            cmd_train(&TrainArgs { config, agent, steps, test_set, out_dir, seed_override }, &mut out)
                .map(|_| ())
        }
        Command::Eval { checkpoint, maze_set, cap, out: report } => {
            cmd_eval(&EvalArgs { checkpoint, maze_set, cap, out: report, seed_override }, &mut out)
                .map(|_| ())
        }
        Command::Heatmap { checkpoint, maze_set, maze_id, out: path } => cmd_heatmap(
            &HeatmapArgs { checkpoint, maze_set, maze_id, out: path, seed_override },
            &mut out,
        ),
        Command::Gradcheck { seed } => cmd_gradcheck(seed_override.unwrap_or(seed), &mut out),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are successes; anything else is a usage error
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        let _ = writeln!(std::io::stderr(), "error: {e}");
        std::process::exit(e.exit_code());
    }
}
