//! The `refcast` command line.
//!
//! Payloads (JSON, CSV or SVG) go to stdout and nothing else does; warnings
//! and errors go to stderr. Exit status: 0 success, 1 data or I/O error,
//! 2 usage error (bad flags, arguments or config).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{parse_dataset, Dataset, ProjectType};
use crate::engine::{
    build_reference_class, default_risk_grid, empirical_distribution, reference_forecast, uplift_curve, ClassCriteria,
    Measure, ReferenceClass, MIN_CLASS_SIZE,
};
use crate::error::Error;
use crate::sample_data::{generate_csv, DEFAULT_SEED};
use crate::sim::{parse_config_file, run_trials, summarize_trials};
use crate::stats::{bootstrap_ci, separation_test, share_outside_band, share_overrun, summarize, Statistic};
use crate::stats::{SummaryStats, TestResult};
use crate::svg::{self, HistogramGroup};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "refcast", version, about = "Reference class forecasting of project cost and traffic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics for one or more reference classes (JSON).
    Stats(StatsArgs),
    /// Required uplift and adjusted estimate for a base estimate (JSON).
    Uplift(UpliftArgs),
    /// Uplift curve over a risk grid, or a histogram of the class (CSV or SVG).
    Curve(CurveArgs),
    /// Monte Carlo project selection under biased estimates (JSON).
    Simulate(SimulateArgs),
    /// Write the deterministic synthetic reference dataset (CSV).
    MakeSampleData(MakeSampleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    /// Dataset CSV.
    #[arg(long, short = 'd')]
    pub data: PathBuf,
    /// Project type: rail, road, bridge_tunnel or other. All types if omitted.
    #[arg(long = "type", value_parser = parse_type)]
    pub project_type: Option<ProjectType>,
    /// Region tag; repeat for several.
    #[arg(long)]
    pub region: Vec<String>,
    /// First decision year (inclusive).
    #[arg(long)]
    pub from_year: Option<i32>,
    /// Last decision year (inclusive).
    #[arg(long)]
    pub to_year: Option<i32>,
    /// Inaccuracy measure: cost or traffic.
    #[arg(long, default_value = "cost", value_parser = parse_measure)]
    pub measure: Measure,
}

impl ClassArgs {
    pub fn criteria(&self) -> ClassCriteria {
        let mut c = ClassCriteria::new(self.measure);
        if let Some(t) = self.project_type {
            c = c.with_type(t);
        }
        if !self.region.is_empty() {
            c = c.with_regions(self.region.iter().cloned());
        }
        if self.from_year.is_some() || self.to_year.is_some() {
            c = c.with_decision_years(self.from_year.unwrap_or(i32::MIN), self.to_year.unwrap_or(i32::MAX));
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Report the standard classes instead of the one given by the flags.
    #[arg(long)]
    pub bundled: bool,
    /// Half-width of the accuracy band, in percent.
    #[arg(long, default_value_t = 20.0)]
    pub band: f64,
    /// Add a percentile bootstrap interval for the mean at this level.
    #[arg(long, value_parser = parse_open_unit)]
    pub ci_level: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Test the class against the same filters with this project type.
    #[arg(long, value_parser = parse_type)]
    pub versus: Option<ProjectType>,
}

#[derive(Debug, Args)]
pub struct UpliftArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Acceptable probability of overrun, 0 < p <= 1.
    #[arg(long, value_parser = parse_risk)]
    pub risk: f64,
    /// Base cost estimate.
    #[arg(long)]
    pub base: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delay_years: f64,
    /// Replace a negative uplift by zero.
    #[arg(long)]
    pub clamp: bool,
    /// Warn on stderr when the class has fewer members.
    #[arg(long, default_value_t = MIN_CLASS_SIZE)]
    pub min_class_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Comma-separated acceptable risks, ascending. Default 0.01..0.99.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Histogram of the class sample, grouped by region, instead of the curve.
    #[arg(long)]
    pub histogram: bool,
    /// Histogram bin width in percentage points.
    #[arg(long, default_value_t = svg::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Also write per-trial outcomes as CSV to this path.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MakeSampleArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Risk grid wrapper so clap does not treat the value as a list of flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_type(s: &str) -> Result<ProjectType, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_risk(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(format!("risk {p} outside (0, 1]"))
    }
}

fn parse_open_unit(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("{p} outside (0, 1)"))
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let grid = s.split(',').map(|t| parse_risk(t.trim())).collect::<Result<Vec<_>, _>>()?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err("grid must be strictly increasing".into());
    }
    Ok(Grid(grid))
}

/// Failure of a command, already classified by exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure { code: EXIT_DATA, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Config { .. } => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<String, Failure>;

fn load_dataset(path: &Path) -> Result<Dataset<f64>, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("payload serializes");
    s.push('\n');
    s
}

/// Mean interval reported by `stats --ci-level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub versus: String,
    #[serde(flatten)]
    pub test: TestResult,
}

/// One class in the `stats` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: String,
    #[serde(flatten)]
    pub summary: SummaryStats<f64>,
    pub share_overrun: f64,
    pub band: f64,
    pub share_outside_band: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_ci: Option<MeanInterval>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub separation: Option<Separation>,
}

fn class_stats(ds: &Dataset<f64>, criteria: &ClassCriteria, args: &StatsArgs) -> Result<ClassStats, Failure> {
    let class = build_reference_class(ds, criteria)?;
    let mean_ci = match args.ci_level {
        Some(level) => {
            let ci = bootstrap_ci(&class.sample, Statistic::Mean, level, args.reps, args.seed)?;
            Some(MeanInterval { lower: ci.lower, upper: ci.upper, level, reps: args.reps, seed: args.seed })
        }
        None => None,
    };
    let separation = match args.versus {
        Some(t) => {
            let other = build_reference_class(ds, &criteria.clone().with_type(t))?;
            Some(Separation { versus: other.name, test: separation_test(&class.sample, &other.sample)? })
        }
        None => None,
    };
    Ok(ClassStats {
        summary: summarize(&class.sample)?,
        share_overrun: share_overrun(&class.sample)?,
        band: args.band,
        share_outside_band: share_outside_band(&class.sample, args.band)?,
        class: class.name,
        mean_ci,
        separation,
    })
}

/// One object for a single class, an array with `--bundled`.
fn cmd_stats(args: &StatsArgs) -> CmdResult {
    let ds = load_dataset(&args.class.data)?;
    if args.bundled {
        let all = ClassCriteria::standard_classes()
            .iter()
            .map(|c| class_stats(&ds, c, args))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(to_json(&all))
    } else {
        Ok(to_json(&class_stats(&ds, &args.class.criteria(), args)?))
    }
}

fn load_class(args: &ClassArgs) -> Result<ReferenceClass<f64>, Failure> {
    let ds = load_dataset(&args.data)?;
    Ok(build_reference_class(&ds, &args.criteria())?)
}

fn cmd_uplift(args: &UpliftArgs, stderr: &mut dyn Write) -> CmdResult {
    if !(args.base > 0.0 && args.base.is_finite()) {
        return Err(Failure::usage(format!("--base {} must be positive", args.base)));
    }
    if !(args.delay_years >= 0.0 && args.delay_years.is_finite()) {
        return Err(Failure::usage(format!("--delay-years {} must be non-negative", args.delay_years)));
    }
    let class = load_class(&args.class)?;
    if class.is_small(args.min_class_size) {
        let _ = writeln!(
            stderr,
            "warning: class {} has {} members (fewer than {})",
            class.name,
            class.len(),
            args.min_class_size
        );
    }
    let report = reference_forecast(args.base, &class, args.risk, args.delay_years, args.clamp)?;
    Ok(to_json(&report))
}

fn histogram_groups(ds: &Dataset<f64>, class: &ReferenceClass<f64>) -> Vec<HistogramGroup> {
    let mut groups: Vec<HistogramGroup> = Vec::new();
    for (id, &v) in class.members.iter().zip(&class.sample) {
        let region = ds.get(id).map_or("", |r| r.region.as_str());
        match groups.iter_mut().find(|g| g.label == region) {
            Some(g) => g.values.push(v),
            None => groups.push(HistogramGroup { label: region.to_string(), values: vec![v] }),
        }
    }
    groups.sort_by(|a, b| a.label.cmp(&b.label));
    groups
}

fn histogram_csv(groups: &[HistogramGroup], bin_width: f64) -> String {
    let all = groups.iter().flat_map(|g| g.values.iter().copied());
    let min = all.clone().fold(f64::INFINITY, f64::min);
    let max = all.fold(f64::NEG_INFINITY, f64::max);
    let start = (min / bin_width).floor() * bin_width;
    let bins = ((max - start) / bin_width).floor() as usize + 1;
    let mut out = String::from("group,bin_start,bin_end,count\n");
    for g in groups {
        for (i, c) in svg::bin_counts(&g.values, start, bin_width, bins).into_iter().enumerate() {
            let lo = start + bin_width * i as f64;
            out.push_str(&format!("{},{},{},{c}\n", g.label, lo, lo + bin_width));
        }
    }
    out
}

fn cmd_curve(args: &CurveArgs) -> CmdResult {
    let ds = load_dataset(&args.class.data)?;
    let class = build_reference_class(&ds, &args.class.criteria())?;
    let title = format!("{} (n={})", class.name, class.len());
    if args.histogram {
        if !(args.bin_width > 0.0 && args.bin_width.is_finite()) {
            return Err(Failure::usage(format!("--bin-width {} must be positive", args.bin_width)));
        }
        let groups = histogram_groups(&ds, &class);
        return match args.format {
            Format::Csv => Ok(histogram_csv(&groups, args.bin_width)),
            Format::Svg => {
                let x_label = match class.criteria.measure {
                    Measure::CostInaccuracy => "Cost inaccuracy (percent)",
                    Measure::TrafficInaccuracy => "Traffic inaccuracy (percent)",
                };
                Ok(svg::histogram_svg(&groups, args.bin_width, x_label, &title)?)
            }
        };
    }
    let grid = args.grid.as_ref().map_or_else(default_risk_grid, |g| g.0.clone());
    let curve = uplift_curve(&empirical_distribution(&class)?, &grid)?;
    match args.format {
        Format::Csv => Ok(curve.to_csv()),
        Format::Svg => Ok(svg::curve_svg(&curve, &title)?),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    if !args.config.is_file() {
        return Err(Failure::usage(format!("config file {} not found", args.config.display())));
    }
    let config = parse_config_file(&args.config)?;
    let trials = run_trials(&config)?;
    if let Some(path) = &args.trials_csv {
        let mut out =
            String::from("trial,seed,regret,overlap,rank_correlation,biased_realized_net,oracle_realized_net\n");
        for t in &trials {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.trial, t.seed, t.regret, t.overlap, t.rank_correlation, t.biased_realized_net, t.oracle_realized_net
            ));
        }
        std::fs::write(path, out).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(to_json(&summarize_trials(&trials)))
}

fn cmd_make_sample_data(args: &MakeSampleArgs) -> CmdResult {
    let csv = generate_csv(args.seed)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

pub fn execute(cli: &Cli, stderr: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Uplift(a) => cmd_uplift(a, stderr),
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::MakeSampleData(a) => cmd_make_sample_data(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, stderr) {
        Ok(payload) => match stdout.write_all(payload.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                EXIT_DATA
            }
        },
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1, 0.5").unwrap(), Grid(vec![0.1, 0.5]));
        assert!(parse_grid("0.5,0.1").is_err());
        assert!(parse_grid("0,0.5").is_err());
        assert!(parse_grid("0.1,x").is_err());
        assert_eq!(parse_risk("1").unwrap(), 1.0);
        assert!(parse_risk("1.01").is_err());
    }

    #[test]
    fn criteria_from_flags() {
        let cli = Cli::try_parse_from([
            "refcast",
            "stats",
            "--data",
            "x.csv",
            "--type",
            "rail",
            "--region",
            "UK",
            "--measure",
            "traffic",
        ])
        .unwrap();
        let Command::Stats(a) = cli.command else { panic!() };
        assert_eq!(a.class.criteria().name(), "rail/UK/traffic");
        assert_eq!(a.band, 20.0);
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["refcast", "uplift", "--data", "x", "--risk", "0", "--base", "1"], &mut out, &mut err), 2);
        assert_eq!(run(["refcast", "frobnicate"], &mut out, &mut err), 2);
        assert!(out.is_empty());
        assert_eq!(run(["refcast", "stats", "--data", "/nonexistent.csv"], &mut out, &mut err), 1);
        assert!(out.is_empty());
    }

    #[test]
    fn error_classification() {
        assert_eq!(Failure::from(Error::invalid("x")).code, EXIT_USAGE);
        assert_eq!(Failure::from(Error::EmptyClass("c".into())).code, EXIT_DATA);
        assert_eq!(Failure::from(Error::Config { line: 1, message: "m".into() }).code, EXIT_USAGE);
    }
}
