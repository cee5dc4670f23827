use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(name = "isomon", version, about = "Discrete isomonodromic deformations of Fuchsian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DirArg {
    S1,
    S2,
    Alternate,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Exponents,
    Gauge,
    Monodromy,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate Schlesinger steps from a state file and write the orbit.
    Evolve {
        state: PathBuf,
        #[arg(long, value_enum, default_value = "s1")]
        dir: DirArg,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Orbit trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare the monodromy with the starting state every K steps.
        #[arg(long, value_name = "K")]
        verify_monodromy: Option<usize>,
    },
    /// Build the confluence graph between spectral-type classes.
    Degenerations {
        /// Spectral types, one per line or a JSON list of strings.
        #[arg(long, conflicts_with = "oshima_3pt", required_unless_present = "oshima_3pt")]
        seeds: Option<PathBuf>,
        /// Seed with the thirteen four-parameter types.
        #[arg(long)]
        oshima_3pt: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Arrows `A -> B`, one per line, to look up in the graph.
        #[arg(long)]
        expected: Option<PathBuf>,
    },
    /// Run invariant suites on a state file.
    Verify {
        state: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve {
            state,
            dir,
            steps,
            out,
            verify_monodromy,
        } => commands::evolve(&state, dir, steps, out.as_deref(), verify_monodromy),
        Command::Degenerations {
            seeds,
            oshima_3pt,
            out,
            dot,
            expected,
        } => commands::degenerations(seeds.as_deref(), oshima_3pt, out.as_deref(), dot.as_deref(), expected.as_deref()),
        Command::Verify { state, suite } => commands::verify(&state, suite),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
