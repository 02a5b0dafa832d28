use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "symfit",
    version,
    about = "Symmetry-family models for r^T contingency tables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a list of models and report goodness-of-fit statistics.
    Fit(FitArgs),
    /// Partition G²(S) into G²(OQS[f]) and G²(ME).
    Partition(PartitionArgs),
    /// Run a Monte Carlo study from a study file.
    Simulate(SimulateArgs),
    /// Summarize a table: dimensions, margins, moments and orbits.
    Describe(DescribeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TableInput {
    /// Table file (TOML).
    #[arg(long)]
    pub input: PathBuf,
    /// `equal` for u_i = i, or a file of r whitespace- or comma-separated scores.
    /// Defaults to the scores in the table file, else `equal`.
    #[arg(long)]
    pub scores: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub table: TableInput,
    /// Comma-separated model tags: s, qs, oqs, poqs, oqsf:NAME, mh, me, ml.
    #[arg(long, default_value = "s,poqs,mh,me")]
    pub models: String,
    /// Axis whose β is fixed at zero in the parameter display.
    #[arg(long, default_value_t = 1)]
    pub ref_axis: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub table: TableInput,
    /// Generator of OQS[f]: kl, pearson or another built-in name.
    #[arg(long, default_value = "kl")]
    pub fspec: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Study file (TOML).
    #[arg(long)]
    pub input: PathBuf,
    /// Overrides the seed in the study file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[command(flatten)]
    pub output: Output,
}
