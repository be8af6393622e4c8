use std::path::PathBuf;

use clap::{Parser, Subcommand};
use orlicz_elastica::cli;

#[derive(Parser)]
#[command(name = "orlicz-elastica", version, about = "Nonlinear small-strain elasticity with Orlicz bulk energy")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the case described by a config file and write CSV outputs.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verification suites to run after the solve; overrides verify.suite.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Run refinement-ladder verification suites.
    Verify {
        /// all, or a comma-separated list of mms, harmonic, curl, estimate.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
        /// Restrict to the case and solver settings of this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List registered cases.
    ListCases,
}

fn main() {
    cli::init_threads_from_env();
    let args = Args::parse();
    let mut out = std::io::stdout().lock();
    let code = match args.command {
        Command::Solve { config, out: dir, suite } => cli::run_case(&config, dir.as_deref(), suite.as_deref(), &mut out),
        Command::Verify { suite, levels, out: dir, config } => {
            cli::run_verify(&suite, levels, &dir, config.as_deref(), &mut out)
        }
        Command::ListCases => cli::run_list_cases(&mut out),
    };
    std::process::exit(code);
}
