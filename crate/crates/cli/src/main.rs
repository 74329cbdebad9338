use std::path::PathBuf;
use std::process::ExitCode;

use arealaw_cli::config::{Overrides, ScenarioConfig};
use arealaw_cli::{run, Command, RunError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arealaw", version, about = "Entanglement, divisibility and Zassenhaus checks for small open systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entropy trace, bound report and divisibility verdict for one model
    Simulate(Common),
    /// Initial-rate bound for one model or a seeded ensemble
    Bound(Common),
    /// Semi-group residuals at split times
    Divisibility(Common),
    /// Spin-boson closed forms against exact evolution
    Spinboson(Common),
    /// Truncation-order scan of the Zassenhaus product
    Zassenhaus(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

fn execute(command: Command, args: Common) -> Result<(), RunError> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    cfg.apply(&Overrides { seed: args.seed, t_max: args.tmax, steps: args.steps, out: args.out });
    let summary = run(command, &cfg)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Bound(a) => (Command::Bound, a),
        Cmd::Divisibility(a) => (Command::Divisibility, a),
        Cmd::Spinboson(a) => (Command::SpinBoson, a),
        Cmd::Zassenhaus(a) => (Command::Zassenhaus, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
