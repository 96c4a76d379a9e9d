use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optomech_cli::{load, run, Experiment, Flags, Level};

#[derive(Parser)]
#[command(name = "optomech", version, about = "Optomechanical array experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for all random streams.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; capped by OPTOMECH_THREADS.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling vectors, coupling matrices and the completed basis.
    Modes(Common),
    /// Phonon walks with and without disorder.
    Walk(Common),
    /// Heat injected at one element, optical and nearest-neighbour coupling.
    Heat(Common),
    /// Single-excitation transfer schedules and their dissipative check.
    Shuttle(Common),
    /// Runs the invariant and oracle checks.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["fast", "full"])]
        level: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, common, level) = match cli.command {
        Command::Modes(c) => (Experiment::Modes, c, None),
        Command::Walk(c) => (Experiment::Walk, c, None),
        Command::Heat(c) => (Experiment::Heat, c, None),
        Command::Shuttle(c) => (Experiment::Shuttle, c, None),
        Command::Validate { common, level } => (Experiment::Validate, common, level),
    };
    let result = level
        .map(|l| l.parse::<Level>())
        .transpose()
        .and_then(|level| {
            let flags =
                Flags { config: common.config, seed: common.seed, out: common.out, threads: common.threads, level };
            load(experiment, &flags)
        })
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(m) => {
            for f in &m.files {
                log::info!("wrote {} ({} bytes)", f.name, f.bytes);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let optomech_cli::CliError::ChecksFailed(names) = &e {
                eprintln!("failed: {}", names.join(", "));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
