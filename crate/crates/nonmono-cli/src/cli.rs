//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nonmono::rules::TauChoice;

#[derive(Debug, Parser)]
#[command(
    name = "nonmono",
    version,
    about = "Relaxed Chambolle-Pock solver for nonmonotone inclusions"
)]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the iteration and write a trace.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Print the stepsize and relaxation windows.
    #[command(allow_negative_numbers = true)]
    Window(PlanArgs),
    /// Check a semimonotonicity certificate.
    #[command(allow_negative_numbers = true)]
    Certify(CertifyArgs),
    /// Compare the certified relaxation bound with the spectral one.
    #[command(allow_negative_numbers = true)]
    Spectral(SpectralArgs),
    /// Print a problem in the JSON problem format.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum CertSource {
    /// Certificates stored with the problem.
    #[default]
    Shipped,
    /// Scalar moduli quoted for a builtin.
    Printed,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Problem file or `builtin:name[:p1,p2,...]`.
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// A value, or `max` for τ = 1/(γ|L|²).
    #[arg(long, value_parser = parse_tau)]
    pub tau: Option<TauChoice>,
    #[arg(long, value_enum, default_value_t)]
    pub certs: CertSource,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Stop when the residual norm drops to this value.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    /// CSV trace.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Primal start; random (seeded by NONMONO_SEED) when neither start is given.
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub y0: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Square matrix D of a linear operator (file or inline JSON).
    #[arg(long, conflicts_with = "problem", requires = "m")]
    pub matrix: Option<String>,
    #[arg(long = "M", id = "m")]
    pub m: Option<String>,
    #[arg(long = "R", id = "r", conflicts_with = "optimal_r")]
    pub r: Option<String>,
    /// Print the largest R for the given M.
    #[arg(long = "optimal-R", id = "optimal_r")]
    pub optimal_r: bool,
    /// Validate the certificates stored with a problem.
    #[arg(long)]
    pub problem: Option<String>,
    /// Graph samples for operators without a matrix form.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Restrict to the range of the preconditioner.
    #[arg(long)]
    pub projected: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub problem: String,
}

pub fn parse_tau(s: &str) -> Result<TauChoice, String> {
    if s.eq_ignore_ascii_case("max") {
        return Ok(TauChoice::Max);
    }
    s.parse::<f64>()
        .map(TauChoice::Value)
        .map_err(|_| format!("expected a number or `max`, got `{s}`"))
}
