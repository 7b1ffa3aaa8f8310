//! `lanebias`: fit paired two-day sprint results, screen outliers, combine
//! events and re-rank single-race lists.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lanebias::{Bandwidth, LanePolicy, MomentScale, Tails};

/// Exit codes; clap itself exits with 2 on bad usage.
pub const EXIT_IO: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_FIT: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "lanebias",
    version,
    about = "Lane advantage in paired two-day sprint races"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit each event, screen outliers and refit.
    Fit(FitArgs),
    /// Combine events (event CSVs or a `label,d_hat,se` summary CSV).
    Meta(MetaArgs),
    /// Shift single-race times by the lane difference and re-rank.
    Speculate(SpeculateArgs),
    /// Standardized residual checks on the cleaned fit of one event.
    Validate(ValidateArgs),
    /// Skaters needed for a target standard error, and the resulting power.
    Power(PowerArgs),
    /// Monte Carlo calibration of the estimator on synthetic events.
    Mc(McArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Screening {
    /// Outlier threshold for t1, t2 and t3.
    #[arg(long, default_value_t = lanebias::diagnostics::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// `two_sided` flags |t1|, |t2| above the threshold; `upper` only slow runs.
    #[arg(long, default_value = "two_sided")]
    pub tails: Tails,
    /// `warn_day1` trusts the day-1 lane when both days show the same lane.
    #[arg(long, default_value = "warn_day1")]
    pub lane_policy: LanePolicy,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub screening: Screening,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct MetaArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub screening: Screening,
    /// Coverage of the prediction range for a new event's d.
    #[arg(long, default_value_t = 0.90)]
    pub coverage: f64,
    /// Also contrast the fastest half of each field with the rest.
    #[arg(long)]
    pub split_half: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SpeculateArgs {
    pub input: PathBuf,
    /// Lane difference in seconds; rounded to whole centiseconds.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub d: f64,
    /// Emit the list as if every skater had drawn the other lane.
    #[arg(long)]
    pub swap: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ValidateTable {
    Residuals,
    KdeAve,
    KdeDiff,
    Adjusted,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub screening: Screening,
    /// `silverman`, or a fixed bandwidth such as `0.4`.
    #[arg(long, default_value = "silverman")]
    pub bandwidth: Bandwidth,
    /// Denominator scaling for skewness and kurtosis: `unbiased` or `biased`.
    #[arg(long, default_value = "unbiased", value_parser = parse_scale)]
    pub moments: MomentScale,
    /// Which table `--format csv` writes.
    #[arg(long, value_enum, default_value = "residuals")]
    pub table: ValidateTable,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct PowerArgs {
    /// Run-to-run standard deviation in seconds.
    #[arg(long, default_value_t = 0.25)]
    pub sigma: f64,
    /// Target standard error of d.
    #[arg(long)]
    pub se: f64,
    /// Lane difference to detect.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub d: f64,
    /// One-sided level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.30)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub d: f64,
    #[command(flatten)]
    pub output: Output,
}

fn parse_scale(s: &str) -> Result<MomentScale, String> {
    match s {
        "unbiased" => Ok(MomentScale::Unbiased),
        "biased" => Ok(MomentScale::Biased),
        other => Err(format!("expected `unbiased` or `biased`, got {other:?}")),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<lanebias::Error>() {
            return match e {
                lanebias::Error::Parse { .. } | lanebias::Error::DuplicateName { .. } => EXIT_PARSE,
                _ => EXIT_FIT,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lanebias: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
