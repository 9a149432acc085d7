use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Seed used when neither `--seed` nor `BBS_SEED` is given. It is written
/// into the report like any other seed.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "bbs",
    version,
    about = "Multicolor box-ball system experiments"
)]
pub struct Cli {
    /// Worker threads for the parallel experiments (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Also write the experiment spec (replayable with `bbs run`).
    #[arg(long, global = true)]
    pub save_spec: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// Print the simplex vectors and their Gram report.
    Basis(BasisArgs),
    /// Apply a word of T_i / T_i^-1 repeatedly.
    Evolve(EvolveArgs),
    /// Apply the inverse of a word repeatedly.
    Invert(EvolveArgs),
    /// Run the carrier for one or all colors.
    Carrier(CarrierArgs),
    /// Apply a scalar Pitman transform to a CSV path.
    Pitman(PitmanArgs),
    /// Reversibility and good-set report for one color.
    Classify(ClassifyArgs),
    /// Build and analyze the two-color counterexamples.
    Examples(ExamplesArgs),
    /// Sample an i.i.d. configuration.
    Sample(SampleArgs),
    /// Chi-square test that T_i preserves an i.i.d. law.
    InvarianceTest(InvarianceArgs),
    /// Rescaled walks against their Brownian limit.
    Donsker(DonskerArgs),
    /// KS test that T_i preserves Brownian motion with drift.
    BmInvariance(BmArgs),
    /// Write the path encoding of a configuration as CSV.
    Encode(EncodeArgs),
    /// Replay an experiment spec written by --save-spec.
    #[serde(skip)]
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Basis(_) => "basis",
            Command::Evolve(_) => "evolve",
            Command::Invert(_) => "invert",
            Command::Carrier(_) => "carrier",
            Command::Pitman(_) => "pitman",
            Command::Classify(_) => "classify",
            Command::Examples(_) => "examples",
            Command::Sample(_) => "sample",
            Command::InvarianceTest(_) => "invariance-test",
            Command::Donsker(_) => "donsker",
            Command::BmInvariance(_) => "bm-invariance",
            Command::Encode(_) => "encode",
            Command::Run(_) => "run",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Sample(a) => a.seed,
            Command::InvarianceTest(a) => a.seed,
            Command::Donsker(a) => a.seed,
            Command::BmInvariance(a) => a.seed,
            _ => None,
        }
    }

    /// Fills in an unset seed so the recorded spec replays exactly.
    pub fn resolve_seed(&mut self) {
        let slot = match self {
            Command::Sample(a) => &mut a.seed,
            Command::InvarianceTest(a) => &mut a.seed,
            Command::Donsker(a) => &mut a.seed,
            Command::BmInvariance(a) => &mut a.seed,
            _ => return,
        };
        slot.get_or_insert(DEFAULT_SEED);
    }

    pub fn outputs(&self) -> Vec<&Path> {
        let paths: Vec<&Option<PathBuf>> = match self {
            Command::Evolve(a) | Command::Invert(a) => vec![&a.output],
            Command::Pitman(a) => vec![&a.output],
            Command::Examples(a) => vec![&a.output],
            Command::Sample(a) => vec![&a.output],
            Command::InvarianceTest(a) => vec![&a.csv],
            Command::Donsker(a) => vec![&a.dump],
            Command::BmInvariance(a) => vec![&a.dump],
            Command::Encode(a) => vec![&a.output],
            _ => vec![],
        };
        paths.into_iter().flatten().map(|p| p.as_path()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ConfigInput {
    /// Configuration file in the `kappa=K offset=N cells=...` format.
    #[arg(long, conflicts_with = "config")]
    pub config_file: Option<PathBuf>,
    /// The same format inline.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BasisArgs {
    #[arg(long)]
    pub kappa: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteArg {
    Pitman,
    Direct,
    /// Run both and fail on the first disagreement.
    Both,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub input: ConfigInput,
    /// Word such as "+1+2-1"; defaults to the full update +1+2...+kappa.
    #[arg(long, allow_hyphen_values = true)]
    pub word: Option<String>,
    /// Number of times the word is applied.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = RouteArg::Pitman)]
    pub route: RouteArg,
    /// Shorthand for `--route direct` (the carrier oracle).
    #[arg(long, conflicts_with = "route")]
    pub direct: bool,
    /// Also print the state after each letter of the first step.
    #[arg(long)]
    pub trace: bool,
    /// Print a JSON report instead of the configuration lines.
    #[arg(long)]
    pub json: bool,
    /// Write the final configuration in the text format.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CarrierArgs {
    #[command(flatten)]
    pub input: ConfigInput,
    /// Color to carry; all colors when omitted.
    #[arg(long)]
    pub color: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// One-sided transform started at the anchor.
    OneSided,
    TwoSided,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PitmanArgs {
    /// CSV with header `n,value` and consecutive indices.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub transform: Transform,
    /// Extend the path linearly with these slopes outside the window;
    /// without them the path is treated as windowed.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"], allow_hyphen_values = true)]
    pub slopes: Option<Vec<f64>>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: ConfigInput,
    #[arg(long)]
    pub color: usize,
    /// Half-width of the range used for the good-set proxy.
    #[arg(long, default_value_t = 100)]
    pub horizon: i64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExamplesArgs {
    /// a, b or c.
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Write the configuration in the text format.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    /// Probabilities p0,p1,...,pk.
    #[arg(long, value_delimiter = ',', conflicts_with = "c")]
    pub probs: Option<Vec<f64>>,
    /// Near-critical drift coefficients c0,...,ck (with --n).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "n"
    )]
    pub c: Option<Vec<f64>>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub first: i64,
    #[arg(long, default_value_t = 1000, allow_hyphen_values = true)]
    pub last: i64,
    #[arg(long, env = "BBS_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InvarianceArgs {
    /// Checked against the length of --probs when given.
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
    #[arg(long)]
    pub color: usize,
    /// Analysis window size.
    #[arg(long, default_value_t = 10_000)]
    pub sites: usize,
    /// Block length of the patterns counted.
    #[arg(long, default_value_t = 2)]
    pub word: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, env = "BBS_SEED")]
    pub seed: Option<u64>,
    /// CSV of pattern counts against their expectation.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DonskerArgs {
    #[arg(long, default_value_t = 1)]
    pub kappa: usize,
    /// Drift coefficients c0,...,ck summing to 0 (default: c0 = 1/2,
    /// the rest sharing -1/2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    /// Walk steps between grid nodes (default: n, one node per unit).
    #[arg(long)]
    pub stride: Option<u64>,
    /// KS bound per coordinate of X(1).
    #[arg(long, default_value_t = 0.02)]
    pub ks_threshold: f64,
    /// Bound on the off-diagonal sample covariances of X(1).
    #[arg(long, default_value_t = 0.05)]
    pub cov_threshold: f64,
    #[arg(long, env = "BBS_SEED")]
    pub seed: Option<u64>,
    /// CSV dump (x, S1..Sk) of the first sampled path.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BmArgs {
    #[arg(long)]
    pub kappa: usize,
    /// Drift coefficients c0,...,ck summing to 0 with c0 > ci.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Vec<f64>,
    #[arg(long = "L", default_value_t = 50.0)]
    pub l: f64,
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[arg(long = "Lprime", default_value_t = 25.0)]
    pub lprime: f64,
    /// Half-width of the window the truncation condition is checked on.
    #[arg(long, default_value_t = 12.5)]
    pub analysis: f64,
    #[arg(long, default_value_t = 5000)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0.035)]
    pub threshold: f64,
    #[arg(long, env = "BBS_SEED")]
    pub seed: Option<u64>,
    /// CSV dump (x, S1..Sk) of the first sampled path.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub input: ConfigInput,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long)]
    pub spec: PathBuf,
}
