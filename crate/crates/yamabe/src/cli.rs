use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::io::Format;

#[derive(Debug, Parser)]
#[command(name = "yamabe", version, about = "Batch evaluation, solving and auditing for sigma_k Yamabe equations")]
pub struct Cli {
    /// JSON run configuration: {"seed": ..., "params": {...}}.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every sampled quantity; recorded in the output.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gamma_k membership and sigma_1..sigma_k of eigenvalue vectors.
    ConeCheck(ConeCheckArgs),
    /// Curvature function values, and A^u at points of a field.
    Eval(EvalArgs),
    /// The exact bubble solution of a spec.
    Bubble(BubbleArgs),
    /// Newton solve of the radial equation.
    Solve(SolveArgs),
    /// Homotopy continuation from the semilinear equation.
    Continue(SolveArgs),
    /// Sup-inf audit of a field against the explicit Harnack bound.
    AuditHarnack(AuditArgs),
    /// Run a property suite: invariance, lemma2, touching, duality, concavity or all.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ConeCheck(_) => "cone-check",
            Command::Eval(_) => "eval",
            Command::Bubble(_) => "bubble",
            Command::Solve(_) => "solve",
            Command::Continue(_) => "continue",
            Command::AuditHarnack(_) => "audit-harnack",
            Command::Verify(_) => "verify",
        }
    }
}

/// Curvature-function selection; `--t` switches to the homotopy family.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConeCheckArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Dimension, needed only for the shorthand `e`.
    #[arg(long)]
    pub n: Option<usize>,
    /// File with one vector per line.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Vectors such as `1,2,3`, `(-1,1,1)` or `e`; place vectors that start
    /// with `-` after `--`.
    pub vectors: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// JSON field descriptor (analytic or gridded).
    #[arg(long, value_name = "PATH")]
    pub field: Option<PathBuf>,
    /// Evaluation point for the field; repeatable.
    #[arg(long = "point", allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// Eigenvalue vectors, spelled as for `cone-check`.
    pub lambdas: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BubbleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Number of grid intervals.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub far_field: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// JSON field descriptor (analytic or gridded).
    #[arg(long, value_name = "PATH")]
    pub field: Option<PathBuf>,
    /// Ball radius R.
    #[arg(long = "radius", visible_alias = "R")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Threshold delta; derived from --k when absent, else 1.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Spec used to derive delta and to certify the field as a solution.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: String,
}
