use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qergo", version, about = "Weak values, complex conditional probabilities and their exact identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every exact identity on `trials` random instances and write a JSON
    /// array of residual reports.
    Check(CheckArgs),
    /// Monte Carlo run of the direct wavefunction measurement; one row per
    /// position.
    Direct(DirectArgs),
    /// Reconstruct the overlap matrix from conditional probabilities and
    /// compare with the gauged truth.
    Reconstruct(ReconstructArgs),
    /// Qubit demo, commutator equivalence, finite-difference fit and the
    /// wavepacket velocity check.
    Dynamics(DynamicsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..=1024))]
    pub dim: u32,
    /// Number of random instances, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Residual threshold; a report passes when its largest residual is below it.
    #[arg(long, default_value_t = 1e-9, value_parser = positive_f64)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DirectArgs {
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..=1024))]
    pub dim: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Pointer rotation angle in radians.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub theta: f64,
    /// Trials per position, split evenly between the two pointer readouts.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub shots: u64,
    /// Prepare this position eigenstate instead of a random state.
    #[arg(long)]
    pub basis_state: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(2..=1024))]
    pub dim: u32,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Both the entrywise error and the unitarity residual must stay below this.
    #[arg(long, default_value_t = 1e-10, value_parser = positive_f64)]
    pub tol: f64,
    /// Project the phase reference onto the complement of this vector of the
    /// initial basis.
    #[arg(long)]
    pub orthogonal_ref: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Wavepacket grid size (a power of two).
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(4..))]
    pub dim: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Absolute tolerance of the commutator equivalence.
    #[arg(long, default_value_t = 1e-12, value_parser = positive_f64)]
    pub tol: f64,
    /// Largest central-difference step; the fit halves it three times.
    #[arg(long, default_value_t = 0.02, value_parser = positive_f64)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub hbar: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive finite number, got {s}"))
    }
}
