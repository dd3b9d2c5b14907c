use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convord::SelectionRule;

#[derive(Debug, Parser)]
#[command(name = "convord", version, about = "Convex-order checks, diatomic decompositions and martingale couplings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check mu ≺ nu in the given order; exit 0 if it holds, 1 if not.
    CheckOrder(CheckOrderArgs),
    /// Decompose a convex-ordered pair into weighted triples.
    Decompose(DecomposeArgs),
    /// Sample the martingale coupling into a CSV file.
    Simulate(SimulateArgs),
    /// Run the martingale and marginal tests on a sample file.
    Verify(VerifyArgs),
    /// Exact report for symmetric jumps, where compounding breaks the order.
    Counterexample(CounterexampleArgs),
    /// End-to-end run on the reference pair with Exp(1) jumps.
    Figure1(Figure1Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Order {
    Cx,
    Icx,
    St,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::Cx => "cx",
            Order::Icx => "icx",
            Order::St => "st",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Compound,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    LeftCurtain,
    FirstAdmissible,
}

impl From<Rule> for SelectionRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::LeftCurtain => SelectionRule::LeftCurtain,
            Rule::FirstAdmissible => SelectionRule::FirstAdmissible,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckOrderArgs {
    #[arg(value_enum)]
    pub order: Order,
    /// Distribution JSON for the smaller law.
    pub mu: PathBuf,
    /// Distribution JSON for the larger law.
    pub nu: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    pub mu: PathBuf,
    pub nu: PathBuf,
    #[arg(long, value_enum, default_value = "left-curtain")]
    pub rule: Rule,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Decomposition JSON (as written by `decompose`).
    #[arg(long, conflicts_with_all = ["mu", "nu"], required_unless_present_all = ["mu", "nu"])]
    pub decomposition: Option<PathBuf>,
    /// Decompose this pair first instead of reading a decomposition.
    #[arg(long, requires = "nu")]
    pub mu: Option<PathBuf>,
    #[arg(long, requires = "mu")]
    pub nu: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "left-curtain")]
    pub rule: Rule,
    /// Jump law: `exp:<rate>`, `const:<c>` or `discrete:<file>` (compound mode).
    #[arg(long, required_if_eq("mode", "compound"), conflicts_with = "rate")]
    pub jumps: Option<String>,
    /// Poisson intensity (poisson mode).
    #[arg(long, required_if_eq("mode", "poisson"))]
    pub rate: Option<f64>,
    /// Number of samples.
    #[arg(short = 'n', long = "n", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, env = "CONVORD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Sample CSV written by `simulate`.
    pub samples: PathBuf,
    /// Reference draws per side for continuous jump laws.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1000..))]
    pub reference_n: u64,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Figure1Args {
    #[arg(long, env = "CONVORD_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'n', long = "n", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1000..))]
    pub n: u64,
    /// Reference draws per side for the two-sample test.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1000..))]
    pub reference_n: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}
