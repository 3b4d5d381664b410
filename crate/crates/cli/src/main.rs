use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use convince_cli::{cmd_generate, cmd_run, cmd_sweep, load_config, parse_mode, CliError};

/// Collaborative cross-camera analytics simulator.
#[derive(Parser)]
#[command(name = "convince", version)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in scenario used when no --config is given.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write per-camera detection and ground-truth logs.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one experiment and write its report.
    Run {
        /// isolated, collaborative or knowledge-sharing
        #[arg(long)]
        mode: String,
        /// Comma-separated camera ids sharing state (knowledge-sharing only).
        #[arg(long)]
        subset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Read logs written by `generate` instead of synthesizing them.
        #[arg(long)]
        logs: Option<PathBuf>,
    },
    /// Knowledge-sharing accuracy over nested camera subsets and many seeds.
    Sweep {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// First seed; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the scenario as TOML.
    ShowConfig,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref(), cli.preset.as_deref())?;
    match cli.command {
        Command::Generate { seed } => {
            let files = cmd_generate(&cfg, seed.unwrap_or(cfg.seed), &cli.out)?;
            println!("wrote {} files to {}", files.len(), cli.out.display());
        }
        Command::Run { mode, subset, seed, logs } => {
            let mode = parse_mode(&mode, subset.as_deref())?;
            let r = cmd_run(&cfg, &mode, seed.unwrap_or(cfg.seed), logs.as_deref(), &cli.out)?;
            println!("{}: accuracy {:.4}, mean transmitted fraction {:.4}", r.mode, r.accuracy, r.mean_fraction);
        }
        Command::Sweep { seeds, seed } => {
            let rows = cmd_sweep(&cfg, seeds, seed.unwrap_or(cfg.seed), &cli.out)?;
            for r in rows {
                println!("{} cameras: accuracy {:.4} ± {:.4}", r.subset_size, r.mean_accuracy, r.stddev);
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => ExitCode::from(2),
    }
}
