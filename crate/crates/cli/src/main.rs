//! `stoqwalk`: instance tooling, random-walk verification experiments and
//! verifier compilation from the command line.

mod commands;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{UsageError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "stoqwalk", version, about = "Projection uniform stoquastic Hamiltonians and random-walk verification")]
pub struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Print the structured report instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check an instance file against every structural invariant.
    Validate { file: PathBuf },
    /// Generate an instance.
    Gen(GenArgs),
    /// Ground energy, gap and residual.
    Spectrum {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Dense)]
        method: MethodArg,
    },
    /// Configuration graph queries.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Run the random-walk verifier.
    Verify(VerifyArgs),
    /// Truncated groundstates and the boundary-energy inequality.
    #[command(subcommand)]
    Expansion(ExpansionCommand),
    /// Compile a verifier circuit into a clock Hamiltonian.
    Compile {
        circuit: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Input string (default: all zeros).
        #[arg(long)]
        input: Option<String>,
    },
    /// Exact acceptance probability of a verifier circuit.
    Simulate {
        circuit: PathBuf,
        /// Input string (default: all zeros).
        #[arg(long)]
        input: Option<String>,
        /// Also maximise over witnesses.
        #[arg(long)]
        optimal_witness: bool,
        /// Witness amplitudes as a JSON array (default: uniform superposition).
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Run the acceptance battery.
    Suite {
        /// Reduced sizes.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the summary table here as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dense,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Hypercube,
    Ghz,
    Random,
    RandomCovering,
    Frustrated,
    Planted,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Number of terms (default: n).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ground energy floor for `frustrated`.
    #[arg(long, default_value_t = 0.05)]
    pub min_energy: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum GraphCommand {
    /// Neighbours of one string with edge multiplicities.
    Neighbors { file: PathBuf, x: String },
    /// Bad strings of an instance.
    Badness {
        file: PathBuf,
        #[arg(long, conflicts_with = "string")]
        all: bool,
        #[arg(long)]
        string: Option<String>,
    },
    /// Boundary, volume and conductance of a set of strings.
    Cut {
        file: PathBuf,
        /// File of whitespace-separated strings.
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        exclude_self_loops: bool,
    },
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, required_unless_present = "calibrate")]
    pub start: Option<String>,
    /// Walk length (default: 100 n m).
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability of staying put at each step.
    #[arg(long, default_value_t = 0.0)]
    pub lazy: f64,
    /// Write the steps of trial 0 as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Search for the smallest doubling T reaching the target rejection.
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long, default_value_t = 0.5)]
    pub target: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_steps: u64,
    /// Random starts sampled during calibration.
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    /// Write rejection probability against T (powers of two up to --steps) as CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ExpansionCommand {
    /// Truncate the groundstate and measure the boundary of its support.
    NiceSet {
        file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Test the boundary-energy inequality on random non-negative states.
    CheckBoundary {
        file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    match commands::run(&cli) {
        Ok(out) => {
            let text = if cli.json { report::render(&out.report) } else { out.text.clone() };
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::from(out.exit_code() as u8)
        }
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
