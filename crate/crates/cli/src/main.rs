mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "cylmatter", version, about = "Growth factors, phase diagrams and branch sampling for cylinder-separable lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct Solver {
    /// Azimuthal discretization of each extremal circle.
    #[arg(long, default_value_t = 40)]
    pub discretization: usize,
    /// LP residual tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tolerance: f64,
}

#[derive(Debug, Args, Clone)]
pub struct Sampling {
    /// Experiment spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Number of samples; overrides the spec.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Sampler seed; overrides the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ledger policy; overrides the spec.
    #[arg(long, value_parser = ["static", "measurement-aware"])]
    pub policy: Option<String>,
    /// Azimuthal discretization; overrides the spec.
    #[arg(long)]
    pub discretization: Option<usize>,
    /// LP residual tolerance; overrides the spec.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Growth factor λ(φ) on a uniform grid over [0, 2π).
    Growth {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Largest simulable input angle θ (degrees) against φ ∈ [0, π].
    PhaseDiagram {
        /// Graph degree; repeat for several curves.
        #[arg(long, required = true)]
        delta: Vec<u32>,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Temperature of the thermal input noise.
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Long-range power-law interactions: θ against α for the telescoping
    /// family, or a single convergence report with --alpha.
    Longrange {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1)]
        dim: u32,
        /// Interaction cutoff distance for --alpha reports.
        #[arg(long, default_value_t = 2000)]
        cutoff: u64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Upper end of the α sweep.
        #[arg(long, default_value_t = 6.0)]
        alpha_max: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sample measurement outcomes of an experiment spec.
    Simulate {
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        common: Common,
    },
    /// Compare sampled outcomes with the exact distribution.
    Verify {
        #[command(flatten)]
        sampling: Sampling,
        /// TV distance accepted as a pass.
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Matter existence bounds per dimension, or a recursion trajectory with --recursion.
    Thresholds {
        /// Largest dimension in the table.
        #[arg(long, default_value_t = 5)]
        dim: u32,
        /// Graph degree used for the lower bound instead of 2·D.
        #[arg(long)]
        delta: Option<u32>,
        /// Also report the lower bound with exponent 2D + 1.
        #[arg(long)]
        literal: bool,
        /// Per-site input radius r of the chain recursion R ↦ r/(1 − R).
        #[arg(long)]
        recursion: Option<f64>,
        /// Starting radius R_1 of the recursion (defaults to r).
        #[arg(long)]
        r1: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Largest input radius for B(r, √(1−r²)) state spaces on degree-Δ graphs.
    SearchSpace {
        #[arg(long, default_value_t = 3)]
        delta: u32,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        phi: f64,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Growth { common, .. }
            | Command::PhaseDiagram { common, .. }
            | Command::Longrange { common, .. }
            | Command::Simulate { common, .. }
            | Command::Verify { common, .. }
            | Command::Thresholds { common, .. }
            | Command::SearchSpace { common, .. } => common,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    let common = cli.command.common().clone();
    let table = match commands::run(&cli.command, common.format) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    let written = match &common.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            table.write(common.format, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            table.write(common.format, &mut w).and_then(|_| w.flush())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {}", Failure::BadInput(e.to_string()).message());
        return ExitCode::from(4);
    }
    ExitCode::SUCCESS
}
