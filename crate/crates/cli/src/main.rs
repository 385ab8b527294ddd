mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Moment-envelope calculus and Monte Carlo verification for polynomial
/// martingales.
#[derive(Parser, Debug)]
#[command(name = "polymart", version, about)]
struct Cli {
    /// Worker threads for simulation.
    #[arg(long, global = true, env = "POLYMART_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate, compose and tabulate moment envelopes.
    #[command(subcommand)]
    Envelope(EnvelopeCmd),
    /// Build the ζ chain and print every stage.
    Zeta(ZetaArgs),
    /// Tail bound of an envelope by convex conjugation.
    Tail(TailArgs),
    /// Draw samples of Q and write them out.
    Simulate(RunArgs),
    /// Check the bound against simulation and write a report.
    Verify(RunArgs),
}

#[derive(Args, Debug)]
struct Source {
    /// Scenario file defining extra envelope names.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum EnvelopeCmd {
    /// ν(p) at one or more orders.
    Eval {
        #[arg(long)]
        name: String,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[command(flatten)]
        source: Source,
    },
    /// (ν_a ⊗ ν_b)(p) and the minimizing split.
    Otimes {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[command(flatten)]
        source: Source,
    },
    /// ν on an evenly spaced grid.
    Table {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[command(flatten)]
        source: Source,
    },
    /// GLS norm sup_p |ξ|_p / ν(p) of an input law.
    Norm {
        #[arg(long)]
        name: String,
        /// `rademacher`, `pareto:R`, `pareto:R:mean` or `pareto:R:sym`.
        #[arg(long)]
        law: String,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[command(flatten)]
        source: Source,
    },
    /// List the catalog names.
    List,
}

#[derive(Args, Debug)]
struct ZetaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// common_independent, inside_independent, vector_independent or martingale.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    reverse: bool,
    /// Comma-separated envelope names, one per factor.
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
}

#[derive(Args, Debug)]
struct TailArgs {
    #[arg(long)]
    name: String,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<f64>,
    /// Multiplier k in min(1, inf_p (kν(p)/x)^p).
    #[arg(long, default_value_t = 1.0)]
    norm_factor: f64,
    #[command(flatten)]
    source: Source,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario file, or a report to re-run.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the plan seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the plan replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<polymart::Error> for Failure {
    fn from(e: polymart::Error) -> Self {
        use polymart::Error::*;
        match e {
            NonFinite(_) | DivergentIntegral { .. } | InfiniteMoment { .. } | DegenerateVariance { .. } | EmptySample
            | StateSpaceTooLarge { .. } | Io(_) => Failure::numeric(e.to_string()),
            _ => Failure::config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let result = match cli.command {
        Command::Envelope(cmd) => commands::envelope(cmd),
        Command::Zeta(args) => commands::zeta(args),
        Command::Tail(args) => commands::tail(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Verify(args) => commands::verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
