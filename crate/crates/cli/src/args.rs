use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elorank_core::sweep::SweepParam;

#[derive(Debug, Parser)]
#[command(
    name = "elorank",
    version,
    about = "Log-rank Elo ratings for multi-player contests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay rounds and print every player's rating change
    Rate(RateArgs),
    /// Replay rounds and report prediction accuracy
    Eval(EvalArgs),
    /// Compare two rating systems division by division
    Compare(CompareArgs),
    /// Sweep one parameter, re-optimizing K at each point
    Sweep(SweepArgs),
    /// Generate a synthetic round file
    Simulate(SimulateArgs),
    /// Export a snapshot or a replay as data
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Elo,
    Elo2,
    /// every parameter given with --param
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKey {
    K,
    C,
    M,
    B,
    N,
    R0,
    Alpha,
}

impl ParamKey {
    pub const ALL: [ParamKey; 7] = [
        ParamKey::K,
        ParamKey::C,
        ParamKey::M,
        ParamKey::B,
        ParamKey::N,
        ParamKey::R0,
        ParamKey::Alpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKey::K => "K",
            ParamKey::C => "C",
            ParamKey::M => "M",
            ParamKey::B => "B",
            ParamKey::N => "N",
            ParamKey::R0 => "R0",
            ParamKey::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamOverride {
    pub key: ParamKey,
    pub value: f64,
}

fn parse_override(text: &str) -> Result<ParamOverride, String> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{text}`"))?;
    let key = ParamKey::ALL
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(key.trim()))
        .ok_or_else(|| {
            format!("unknown parameter `{key}` (expected one of K, C, M, B, N, R0, alpha)")
        })?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{value}` is not finite"));
    }
    Ok(ParamOverride { key, value })
}

/// Sweep values, parsed from `a,b,c` or `lo:hi:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid(text: &str) -> Result<Grid, String> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{s}` is not a finite number"))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [lo_text, hi_text, step_text] => {
            let (lo, hi, step) = (number(lo_text)?, number(hi_text)?, number(step_text)?);
            if step <= 0.0 || hi < lo {
                return Err(format!("range `{text}` needs lo <= hi and step > 0"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            // round to the decimals written so 0:1:0.1 gives 0.3, not 0.30000000000000004
            let decimals = |t: &str| t.trim().split_once('.').map_or(0, |(_, f)| f.len());
            let places = decimals(lo_text).max(decimals(step_text));
            let points = (0..count)
                .map(|i| {
                    let v = lo + i as f64 * step;
                    format!("{v:.places$}").parse().unwrap_or(v)
                })
                .collect();
            Ok(Grid(points))
        }
        [_] => text
            .split(',')
            .map(number)
            .collect::<Result<_, _>>()
            .map(Grid),
        _ => Err(format!("`{text}` is neither a list nor lo:hi:step")),
    }
}

fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{text}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("`{lo}` is not a number"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("`{hi}` is not a number"))?;
    Ok((lo, hi))
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Parameter profile
    #[arg(long, value_enum, default_value_t = Profile::Elo)]
    pub profile: Profile,
    /// Override one parameter (K, C, M, B, N, R0, alpha); repeatable
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub params: Vec<ParamOverride>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Round file (round_id,division,player_id,score)
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Continue from this snapshot
    #[arg(long)]
    pub snapshot_in: Option<PathBuf>,
    /// Save the final state here
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalReport {
    /// error by experience, division and half
    Players,
    /// error and rating distribution summary
    Stats,
    /// per-division accuracy of every round
    Rounds,
    /// predicted against observed pairwise outcomes
    Calibration,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub snapshot_in: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalReport::Players)]
    pub report: EvalReport,
    /// Evaluate a foreign rating timeline (round_id,player_id,rating_before)
    /// instead of replaying; rounds and calibration reports only
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// The system being judged
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = Profile::Elo)]
    pub baseline_profile: Profile,
    #[arg(long = "baseline-param", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub baseline_params: Vec<ParamOverride>,
    /// Use a foreign rating timeline as the baseline
    #[arg(long, conflicts_with_all = ["baseline_profile", "baseline_params"])]
    pub baseline_ratings: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// K, alpha, C, M, B or N
    #[arg(long)]
    pub target: SweepParam,
    /// Values as a,b,c or lo:hi:step
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    /// K search interval
    #[arg(long, value_name = "LO:HI", value_parser = parse_range, default_value = "10:1500")]
    pub k_range: (f64, f64),
    #[arg(long, default_value_t = 5.0)]
    pub k_step: f64,
    /// Search N (the target) and B jointly; B values as for --grid
    #[arg(long, value_parser = parse_grid)]
    pub joint_b: Option<Grid>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub players: usize,
    #[arg(long, default_value_t = 300)]
    pub rounds: usize,
    #[arg(long, default_value_t = 1200.0)]
    pub skill_mean: f64,
    #[arg(long, default_value_t = 350.0)]
    pub skill_sd: f64,
    /// Per-round performance noise; defaults to the value matching the
    /// logistic win curve
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub participation: f64,
    #[arg(long, default_value_t = 0.0)]
    pub drift_sd: f64,
    /// Mean number of new players per round
    #[arg(long, default_value_t = 0.0)]
    pub arrival_rate: f64,
    /// Share of each round's field (by skill) placed in division 1
    #[arg(long, default_value_t = 1.0)]
    pub div1_fraction: f64,
    /// Round scores to multiples of this (0 = no rounding)
    #[arg(long, default_value_t = 0.0)]
    pub tie_step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Round file destination (stdout if absent)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write latent skills as a rating timeline
    #[arg(long)]
    pub latent_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    /// snapshot as JSON
    Json,
    /// pre-round rating of every participant of a replay
    Timeline,
    /// current rating of every player
    Ratings,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub kind: ExportKind,
    /// Rounds to replay (timeline, or ratings after replay)
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub snapshot_in: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}
