use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdlab_cli::{describe, list, run, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "rdlab", version, about = "Reaction-diffusion scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write artifacts plus a manifest.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "RDLAB_OUT", default_value = "rdlab-out")]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Only scenarios whose id matches this glob.
        #[arg(long)]
        filter: Option<String>,
        /// Treat Inconclusive verdicts as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Print scenarios with resolved parameters and expected artifacts.
    Describe {
        config: PathBuf,
        #[arg(long)]
        filter: Option<String>,
    },
    /// Print scenario ids and kinds.
    List {
        config: PathBuf,
        #[arg(long)]
        filter: Option<String>,
    },
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Config(_) => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, jobs, filter, strict } => {
            let opts = RunOptions { out, jobs, filter, strict };
            match run(&config, &opts) {
                Ok(summary) => {
                    for e in &summary.entries {
                        println!("{:<12} {:<28} {}", e.status, e.id, e.summary);
                    }
                    for e in &summary.errors {
                        eprintln!("error: {e}");
                    }
                    println!("manifest: {}", summary.manifest.display());
                    if summary.success() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => report(&e),
            }
        }
        Command::Describe { config, filter } => match describe(&config, filter.as_deref()) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
        Command::List { config, filter } => match list(&config, filter.as_deref()) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
    }
}
