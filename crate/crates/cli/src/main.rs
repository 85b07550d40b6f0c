use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gestr_core::experiment::{default_workers, run_sweep, write_outputs, ExperimentError, SweepOptions, SweepSpec};
use gestr_core::joint::{solve_joint, SolveError, SolverMode, DEFAULT_GRID_SEGMENTS};
use gestr_core::model::{Link, Scenario};
use gestr_core::scenario::{generate, GenerationConfig};

#[derive(Parser)]
#[command(name = "gestr", version, about = "Semantic-bit network simulator and joint optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write results.csv, summary.csv and metadata.json.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (capped by GESTR_MAX_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
        /// Extraction-ratio grid segments; overrides the spec.
        #[arg(long = "grid-M")]
        grid_m: Option<usize>,
        /// Solver modes to run; overrides the spec. Repeatable.
        #[arg(long = "mode")]
        modes: Vec<SolverMode>,
        /// Fill the wall_ms column (output is then no longer reproducible).
        #[arg(long)]
        wall_time: bool,
    },
    /// Generate one scenario from a generation config.
    GenScenario {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the joint subproblem of one (device, base station, subchannel) link.
    SolveOne {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        md: usize,
        #[arg(long)]
        bs: usize,
        #[arg(long)]
        subch: usize,
        #[arg(long = "grid-M", default_value_t = DEFAULT_GRID_SEGMENTS)]
        grid_m: usize,
        #[arg(long, default_value_t = SolverMode::Joint)]
        mode: SolverMode,
    },
}

enum Failure {
    Config(String),
    Solver(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Solve { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(_) | SolveError::EmptyGrid => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { spec, out, workers, grid_m, modes, wall_time } => {
            let mut sweep = SweepSpec::from_toml(&read(&spec)?)?;
            if let Some(m) = grid_m {
                sweep.grid_segments = m;
            }
            if !modes.is_empty() {
                sweep.modes = modes;
            }
            let opts = SweepOptions { workers: workers.unwrap_or_else(default_workers), record_wall_time: wall_time };
            let result = run_sweep(&sweep, &opts)?;
            write_outputs(&result, &out)
                .map_err(|e| Failure::Config(format!("cannot write {}: {e}", out.display())))?;
            print!("{}", result.summary_csv());
            eprintln!("wrote {} rows to {}", result.records.len(), out.display());
        }
        Command::GenScenario { config, seed, out } => {
            let config = GenerationConfig::from_toml(&read(&config)?).map_err(|e| Failure::Config(e.to_string()))?;
            let scenario = generate(&config.with_seed(seed)).map_err(|e| Failure::Config(e.to_string()))?;
            write(&out, &scenario.to_toml())?;
        }
        Command::SolveOne { scenario, md, bs, subch, grid_m, mode } => {
            let scenario = Scenario::from_toml(&read(&scenario)?).map_err(|e| Failure::Config(e.to_string()))?;
            let decision = solve_joint(&scenario, Link::new(md, bs, subch), grid_m, mode)?;
            let text = toml::to_string(&decision).map_err(|e| Failure::Solver(e.to_string()))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
