//! `fairbench` command-line tool.

mod commands;
mod failure;
mod figure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use fairbench::frontend::FrontendKind;
use fairbench::WarpKind;

#[derive(Debug, Parser)]
#[command(name = "fairbench", version, about = "Audio front-end resolution and cross-group fairness toolkit")]
pub struct Cli {
    /// Working sample rate in Hz; inputs are resampled to it.
    #[arg(long, global = true, default_value_t = 16000.0)]
    pub sample_rate: f64,
    /// Master seed for every randomised step.
    #[arg(long, global = true, env = "FAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute front-end features for WAV files.
    Extract(ExtractArgs),
    /// Frequency-resolution analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Worst-group score, gap and disparate impact with bootstrap intervals.
    Fairness(FairnessArgs),
    /// Synthetic ABX interval discrimination.
    Probe(ProbeArgs),
    /// Information-loss bound for a resolution profile.
    Bound(BoundArgs),
    /// Group-balanced sampling of a manifest.
    Sample(SampleArgs),
    /// Relative front-end cost.
    Bench(BenchArgs),
    /// CSV data behind the summary figures.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureFormat {
    Fab,
    Csv,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, default_value = "mel")]
    pub frontend: FrontendKind,
    #[arg(long, value_enum, default_value_t = FeatureFormat::Fab)]
    pub format: FeatureFormat,
    /// Output file (single input only).
    #[arg(short, long, conflicts_with = "out_dir")]
    pub output: Option<PathBuf>,
    /// Directory for `<stem>.fab` / `<stem>.csv` outputs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Filter spacing against the 1% JND at probe frequencies.
    ResolutionTable(ResolutionArgs),
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    #[arg(long, default_value = "mel")]
    pub warp: WarpKind,
    #[arg(long, default_value_t = 40)]
    pub filters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub f_min: f64,
    #[arg(long, default_value_t = 8000.0)]
    pub f_max: f64,
    /// Probe frequencies in Hz.
    #[arg(long, value_delimiter = ',', default_values_t = fairbench::scales::TONAL_PROBES_HZ)]
    pub probes: Vec<f64>,
    /// Print CSV instead of the aligned table.
    #[arg(long)]
    pub csv: bool,
    /// Also write the CSV to this file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FairnessArgs {
    /// Per-sample results CSV.
    #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
    pub results: Option<PathBuf>,
    /// Groups JSON (group_id -> {label, task}).
    #[arg(long, requires = "results")]
    pub groups: Option<PathBuf>,
    /// Keep only rows of this front-end.
    #[arg(long, requires = "results")]
    pub frontend: Option<String>,
    /// Use the published group accuracies of a front-end.
    #[arg(long, requires = "domain")]
    pub reference: Option<FrontendKind>,
    /// speech, music or scenes.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
    /// Print the JSON report instead of the text table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, value_delimiter = ',', default_value = "mel,cqt")]
    pub frontends: Vec<FrontendKind>,
    /// Interval sizes in cents.
    #[arg(long, value_delimiter = ',', default_value = "22,50,100,1200")]
    pub interval: Vec<f64>,
    /// Base-frequency band as LO:HI Hz.
    #[arg(long, default_value = "200:500", value_parser = parse_band)]
    pub band: (f64, f64),
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 20.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 3)]
    pub harmonics: usize,
    /// Stimulus duration in seconds.
    #[arg(long, default_value_t = 0.3)]
    pub duration: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Profile CSV (f_hz, info, density, min_res, res). Without it, a uniform
    /// density over the band is paired with a triangular bank's resolution.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value = "mel", conflicts_with = "spec")]
    pub warp: WarpKind,
    #[arg(long, default_value_t = 40, conflicts_with = "spec")]
    pub filters: usize,
    #[arg(long, default_value_t = 0.0, conflicts_with = "spec")]
    pub f_min: f64,
    #[arg(long, default_value_t = 8000.0, conflicts_with = "spec")]
    pub f_max: f64,
    #[arg(long, default_value_t = 301, conflicts_with = "spec")]
    pub points: usize,
    /// Constant of the band-limited corollary.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Band for the uniform preset and the corollary, LO:HI Hz.
    #[arg(long, default_value = "200:500", value_parser = parse_band)]
    pub band: (f64, f64),
    /// Write the profile that was evaluated to this CSV.
    #[arg(long)]
    pub write_spec: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Manifest JSON to sample from.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Sample a generated manifest for speech, music or scenes instead.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Entries per label in the generated manifest.
    #[arg(long, default_value_t = 150, requires = "synthetic")]
    pub per_label: usize,
    /// `N` for every label, or `label=N,...,*=N`.
    #[arg(long)]
    pub quota: String,
    /// Extra field to balance within each label.
    #[arg(long)]
    pub stratify: Option<String>,
    /// Print label/stratum counts as CSV instead of the manifest.
    #[arg(long)]
    pub summary: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "mel,erb,bark,cqt,leaf,sincnet,mel-pcen")]
    pub frontends: Vec<FrontendKind>,
    #[arg(long, default_value_t = 1000)]
    pub passes: usize,
    /// WAV input; seeded synthetic audio when absent.
    #[arg(long)]
    pub audio: Option<PathBuf>,
    /// Length of the synthetic audio in seconds.
    #[arg(long, default_value_t = 1.0, conflicts_with = "audio")]
    pub duration: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    /// Per-group accuracy, gap and disparate impact per front-end and domain.
    Gaps,
    /// Share of filters in 80-500 Hz per bank.
    Allocation,
    /// Gap reduction against cost overhead.
    Tradeoff,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub kind: FigureKind,
    /// Allocation only: train the Gabor bank on the tone task for this many steps.
    #[arg(long, default_value_t = 0)]
    pub adapt_steps: usize,
    /// Allocation only: list every filter centre instead of the summary.
    #[arg(long)]
    pub centers: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("band low edge: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("band high edge: {e}"))?;
    if !(lo >= 0.0 && lo < hi) {
        return Err(format!("band {lo}:{hi} is empty"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let usage = Cli::command().render_usage();
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{usage}");
            }
            return ExitCode::from(failure::EXIT_USAGE);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
