//! The `eldiv` command-line interface.
//!
//! Every command resolves its arguments into a configuration object, runs
//! the corresponding library routine and prints the result as a text table,
//! CSV, or a versioned JSON envelope (`schemas/report.schema.json`). Exit
//! codes: 0 on success, 2 for usage and parse errors, 3 for numerical failure.

mod commands;
pub mod data;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::ElError;
use output::{envelope, error_envelope, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "eldiv", version, about = "Empirical likelihood inference with phi-divergence test statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Maximum EL estimate, log empirical likelihood and standard errors.
    Estimate(EstimateArgs),
    /// Test a simple null (mean models) or a CoV constraint (cov model).
    Test(TestArgs),
    /// Confidence intervals by test inversion.
    Ci(CiArgs),
    /// Approximate power curves for a scalar mean.
    Power(PowerArgs),
    /// Per-observation influence functions.
    Influence(InfluenceArgs),
    /// Monte Carlo coverage study.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Test(_) => "test",
            Command::Ci(_) => "ci",
            Command::Power(_) => "power",
            Command::Influence(_) => "influence",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// E[X − θ] = 0
    Mean,
    /// Mean θ with variance θ² + 1 (two equations, one parameter).
    Meanvar,
    /// First two raw moments; tests and intervals concern the CoV.
    Cov,
}

impl ModelArg {
    fn name(self) -> &'static str {
        match self {
            ModelArg::Mean => "mean",
            ModelArg::Meanvar => "meanvar",
            ModelArg::Cov => "cov",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// newcomb:day1, newcomb:day2, newcomb:day3, newcomb:all, or a CSV path.
    #[arg(long)]
    pub data: String,
    #[arg(long, value_enum, default_value_t = ModelArg::Mean)]
    pub model: ModelArg,
    /// Skip the first row of a CSV file.
    #[arg(long)]
    pub header: bool,
}

/// Which statistics to compute. Lists are comma separated.
#[derive(Args, Debug, Clone, Default)]
pub struct FamilyArgs {
    /// Power-divergence parameters (default 0, the EL ratio).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub lambda: Option<Vec<String>>,
    /// Rényi orders; each gives an S-type statistic.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub renyi: Option<Vec<String>>,
    /// T, S, wald, score, lm. The last three need `--model cov`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub statistic: Option<Vec<String>>,
}

impl FamilyArgs {
    fn given(&self) -> bool {
        self.lambda.is_some() || self.renyi.is_some() || self.statistic.is_some()
    }
}

#[derive(Args, Debug, Clone)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug, Clone)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub families: FamilyArgs,
    /// Null value of θ (mean models).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub theta0: Option<Vec<String>>,
    /// Hypothesised coefficient of variation (cov model, default 1).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Args, Debug, Clone)]
pub struct CiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub families: FamilyArgs,
    /// Confidence levels (default 0.95).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub level: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Beta1,
    Beta2,
}

#[derive(Args, Debug, Clone)]
pub struct PowerArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub families: FamilyArgs,
    /// Null mean μ₀ (default: the estimate).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub theta0: Option<Vec<String>>,
    /// Alternatives μ*; defaults to 81 points over θ̂ ± 4·sd/√n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub grid: Option<Vec<String>>,
    /// First-order (beta1) or noncentral chi-square (beta2) approximation.
    #[arg(long, value_enum, default_value_t = MethodArg::Beta1)]
    pub method: MethodArg,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Use the threshold φ″(1)χ²/(2n) without the h′(0) factor.
    #[arg(long)]
    pub paper_strict: bool,
}

#[derive(Args, Debug, Clone)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Evaluation point (default: the estimate).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub theta0: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    /// Mean under the mean–variance model.
    Simple,
    /// Coefficient of variation under the CoV model.
    Cov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    /// N(θ, θ² + 1)
    NormalTheta,
    /// N(1, 1)
    Normal,
    /// Poisson(1)
    Poisson,
    /// 1 + √0.6 · t₅
    T5,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// simple-theta0, simple-theta1, contaminated, cov-normal, cov-poisson, cov-t5.
    #[arg(long)]
    pub preset: Option<String>,
    /// With a composite preset: 5000 replications instead of 20 000.
    #[arg(long)]
    pub fast: bool,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, value_enum)]
    pub distribution: Option<DistributionArg>,
    /// True mean (simple) or tested CoV (cov).
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Sample size per replication (default 30).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of replications (default 1000).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; each replication derives its own stream from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of shifted observations per sample.
    #[arg(long)]
    pub contaminate: Option<usize>,
    /// Confidence levels (default 0.95).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub level: Option<Vec<String>>,
    #[command(flatten)]
    pub families: FamilyArgs,
    /// Also invert composite statistics to report interval widths.
    #[arg(long)]
    pub widths: bool,
}

/// Parse `args` (including the program name), run, and write to `out`/`err`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{rendered}");
            return EXIT_OK;
        }
    };
    let name = cli.command.name();
    let start = Instant::now();
    match commands::execute(&cli.command) {
        Ok(result) => {
            let text = match cli.format {
                Format::Json => {
                    let env = envelope(name, &result.config, result.results, start.elapsed().as_secs_f64());
                    let mut s = serde_json::to_string_pretty(&env).expect("serializable");
                    s.push('\n');
                    s
                }
                Format::Csv => result.table.render_csv(),
                Format::Text => result.table.render_text(),
            };
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(&e);
            if cli.format == Format::Json {
                let env = error_envelope(name, &e, code);
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&env).expect("serializable"));
            }
            let _ = writeln!(err, "eldiv {name}: {e}");
            code
        }
    }
}

pub fn exit_code(e: &ElError) -> i32 {
    if e.is_usage() {
        EXIT_USAGE
    } else {
        EXIT_NUMERICAL
    }
}

/// Entry point used by the `eldiv` binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
