use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ekrw", version, about = "Extremal intersecting set and graph families")]
pub struct Cli {
    /// Emit a JSON report, and JSON errors.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads for parallel operations.
    #[arg(long, global = true, env = "EKRW_THREADS", default_value_t = 1)]
    pub threads: usize,

    /// Seed for sampled operations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Materialize a named family.
    Construct(ConstructArgs),
    /// Exact size of a named family or reference bound.
    Count(CountArgs),
    /// Check intersection properties of a family file.
    Verify(VerifyArgs),
    /// Exact maximum nontrivial d-wise t-intersecting family.
    Search(SearchArgs),
    /// Compare the reference family sizes at (n, k, d).
    Extremal(ExtremalArgs),
    /// Which theorems apply at (n, k, d, t).
    Thresholds(ThresholdArgs),
    /// Bracket the density root for (t, d).
    Beta(BetaArgs),
    /// Certificates for a forbidden intersection size.
    #[command(subcommand)]
    Forbidden(ForbiddenCommand),
    /// Intersecting graph families.
    #[command(subcommand)]
    Graphs(GraphsCommand),
    /// Product measure of a family.
    Mu(MuArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    /// e.g. "M(11,7,3,3)"
    #[arg(long)]
    pub spec: String,
    /// Output family file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[group(skip)]
#[command(group = ArgGroup::new("what").required(true).args(["spec", "bound"]))]
pub struct CountArgs {
    #[arg(long)]
    pub spec: Option<String>,
    /// One of HM, EKR, FranklUB, MI.
    #[arg(long, requires = "params")]
    pub bound: Option<String>,
    /// Comma-separated bound parameters.
    #[arg(long, value_delimiter = ',', requires = "bound")]
    pub params: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub family: PathBuf,
    /// Check d-wise t-intersection for this d.
    #[arg(long)]
    pub dwise: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Check that the members share fewer than t points.
    #[arg(long)]
    pub nontrivial: bool,
    /// Check the m-wise consequence for every m up to d.
    #[arg(long, requires = "dwise")]
    pub lemma: bool,
    /// Test isomorphism with a second family file.
    #[arg(long)]
    pub isomorphic: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long)]
    pub nontrivial: bool,
    /// Stop after this many nodes in total, counting resumed ones.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Continue from a checkpoint file; also the default checkpoint target.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Seconds between checkpoint writes.
    #[arg(long, default_value_t = 30.0)]
    pub checkpoint_interval: f64,
    /// Write the best family found here.
    #[arg(long)]
    pub witness: Option<PathBuf>,
    /// Do not start from the best named construction.
    #[arg(long)]
    pub no_seed_constructions: bool,
    /// Cross-check against exhaustive search (small instances only).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtremalArgs {
    /// A value, a list "a,b" or a range "a..b".
    #[arg(long)]
    pub n: String,
    #[arg(long)]
    pub k: String,
    #[arg(long)]
    pub d: String,
    /// Print a table instead of a report.
    #[arg(long, value_enum)]
    pub format: Option<TableFormat>,
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub n: String,
    #[arg(long)]
    pub k: String,
    #[arg(long)]
    pub d: String,
    #[arg(long, default_value = "1")]
    pub t: String,
    #[arg(long, value_enum)]
    pub format: Option<TableFormat>,
}

#[derive(Debug, Args, Serialize)]
pub struct BetaArgs {
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub d: usize,
    /// Bracket width, as "a/b", a decimal, or "1e-9".
    #[arg(long, default_value = "1e-9")]
    pub tol: String,
    /// Compare a density against the bracket.
    #[arg(long)]
    pub p: Option<String>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForbiddenCommand {
    /// Certificate for avoiding intersection size l among k-sets.
    Cert {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// Ground-set size for the implied bound.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Check certificates for every small l at this k.
    SmallL {
        #[arg(long)]
        k: usize,
    },
    /// Check the pairwise intersection sizes of a family file.
    Check {
        #[arg(long)]
        family: PathBuf,
        /// Comma-separated allowed sizes.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["not_equal", "not_congruent"])]
        allowed: Vec<usize>,
        /// Forbid exactly this size.
        #[arg(long, conflicts_with = "not_congruent")]
        not_equal: Option<usize>,
        /// Forbid sizes congruent to k modulo this value.
        #[arg(long)]
        not_congruent: Option<usize>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct GraphShape {
    #[arg(long)]
    pub n: usize,
    /// Size of the single chosen block.
    #[arg(long, conflicts_with = "parts", required_unless_present = "parts")]
    pub s: Option<usize>,
    /// Comma-separated part sizes for the multipartite construction.
    #[arg(long, value_delimiter = ',')]
    pub parts: Vec<usize>,
    #[arg(long)]
    pub t: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphsCommand {
    /// Exact family size and the EKR-type comparison.
    Count(GraphShape),
    /// Search for two members without the common subgraph.
    Verify {
        #[command(flatten)]
        shape: GraphShape,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: GraphMode,
        /// Pairs to draw in sampled mode.
        #[arg(long, default_value_t = 1000)]
        pairs: u64,
        /// Override the required degree into R.
        #[arg(long)]
        min_degree: Option<usize>,
    },
}

#[derive(Debug, Args, Serialize)]
#[group(skip)]
#[command(group = ArgGroup::new("source").required(true).args(["family", "spec"]))]
pub struct MuArgs {
    #[arg(long)]
    pub family: Option<PathBuf>,
    #[arg(long)]
    pub spec: Option<String>,
    /// Bias, as "a/b" or a decimal.
    #[arg(long)]
    pub p: String,
    /// Also evaluate in floating point.
    #[arg(long)]
    pub approx: bool,
}
