//! Subcommand handlers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fairbench::evalkit::bound::{bank_resolution, read_bound_csv, write_bound_csv};
use fairbench::evalkit::manifest::synthetic_manifest;
use fairbench::evalkit::synth::flat_contour;
use fairbench::evalkit::{
    bound_integral, corollary_integral, discrimination_probe, overhead_benchmark, sample_balanced, synth_tone_clip,
    BoundSpec, Manifest, ProbeConfig, Quota,
};
use fairbench::fairness::io::{read_group_defs, read_results};
use fairbench::fairness::reference::{reference_groups, Domain};
use fairbench::fairness::{bootstrap_report, fairness_metrics, Interval, fmt_pct, fmt_rho, verdict_line, Task};
use fairbench::featio::{encode_fab, write_features_csv};
use fairbench::frontend::{Frontend, FrontendKind};
use fairbench::scales::{resolution_table, REFERENCE_MEL_ROWS};
use fairbench::wav::load_audio;
use fairbench::{AudioBuffer, FrequencyWarp, WarpKind};

use crate::failure::{CliResult, Failure};
use crate::{
    AnalyzeCommand, BenchArgs, BoundArgs, Cli, Command, ExtractArgs, FairnessArgs, FeatureFormat, ProbeArgs,
    ResolutionArgs, SampleArgs,
};

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Extract(a) => extract(cli, a),
        Command::Analyze(AnalyzeCommand::ResolutionTable(a)) => resolution(a),
        Command::Fairness(a) => fairness(cli, a),
        Command::Probe(a) => probe(cli, a),
        Command::Bound(a) => bound(a),
        Command::Sample(a) => sample(cli, a),
        Command::Bench(a) => bench(cli, a),
        Command::Figure(a) => crate::figure::figure(cli, a),
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| Failure::input(e.to_string()).context(path.display()))
}

fn extract_target(a: &ExtractArgs, input: &Path) -> PathBuf {
    let ext = match a.format {
        FeatureFormat::Fab => "fab",
        FeatureFormat::Csv => "csv",
    };
    if let Some(o) = &a.output {
        return o.clone();
    }
    let name = Path::new(input.file_stem().unwrap_or(input.as_os_str())).with_extension(ext);
    match &a.out_dir {
        Some(d) => d.join(name),
        None => input.with_extension(ext),
    }
}

fn extract(cli: &Cli, a: &ExtractArgs) -> CliResult {
    if a.output.is_some() && a.inputs.len() > 1 {
        return Err(Failure::usage("--output takes a single input; use --out-dir for several"));
    }
    if let Some(d) = &a.out_dir {
        fs::create_dir_all(d).map_err(|e| Failure::input(e.to_string()).context(d.display()))?;
    }
    let frontend = Frontend::default_for(a.frontend, cli.sample_rate)?;
    for input in &a.inputs {
        let audio = load_audio(input, cli.sample_rate).map_err(|e| Failure::from(e).context(input.display()))?;
        let feats = frontend.extract(&audio).map_err(|e| Failure::from(e).context(input.display()))?;
        let bytes = match a.format {
            FeatureFormat::Fab => encode_fab(&feats, a.frontend.name())?,
            FeatureFormat::Csv => {
                let mut buf = Vec::new();
                write_features_csv(&feats, cli.sample_rate, &mut buf)?;
                buf
            }
        };
        let target = extract_target(a, input);
        write_file(&target, &bytes)?;
        eprintln!("{} -> {} ({} frames x {} channels)", input.display(), target.display(), feats.rows(), feats.cols());
    }
    Ok(())
}

fn warp_of(kind: WarpKind) -> FrequencyWarp {
    FrequencyWarp::from_kind(kind)
}

fn dev_pct(got: f64, want: f64) -> f64 {
    100.0 * (got - want) / want
}

fn resolution(a: &ResolutionArgs) -> CliResult {
    let warp = warp_of(a.warp);
    let rows = resolution_table(&warp, a.filters, a.f_min, a.f_max, &a.probes)?;
    let standard = a.warp == WarpKind::Mel && a.filters == 40 && a.f_min == 0.0 && a.f_max == 8000.0;
    let published = |f: f64| standard.then(|| REFERENCE_MEL_ROWS.iter().find(|r| r.0 == f)).flatten();

    let mut csv = String::from("freq_hz,scale_value,bandwidth_hz,jnd_hz,deficit_ratio\n");
    for r in &rows {
        writeln!(csv, "{:.1},{:.4},{:.4},{:.4},{:.4}", r.freq_hz, r.scale_value, r.bandwidth_hz, r.jnd_hz, r.deficit_ratio)
            .unwrap();
    }
    if let Some(p) = &a.output {
        write_file(p, csv.as_bytes())?;
    }
    if a.csv {
        return emit(None, &csv);
    }

    let scale = match a.warp {
        WarpKind::Mel => "mel",
        WarpKind::ErbRate => "erb-rate",
        WarpKind::Bark => "bark",
        WarpKind::Log2 => "log2",
    };
    let mut out = String::new();
    writeln!(
        out,
        "bandwidth convention: filter centre spacing, (scale(f_max) - scale(f_min)) / (filters + 1) \
         mapped to Hz by the local slope of the inverse scale; JND = 1% of frequency"
    )
    .unwrap();
    writeln!(out, "{} filters, {} scale, {}-{} Hz", a.filters, scale, a.f_min, a.f_max).unwrap();
    let mut header = format!("{:>9} {:>9} {:>14} {:>8} {:>9}", "freq_hz", scale, "bandwidth_hz", "jnd_hz", "deficit");
    if standard {
        write!(header, " {:>10} {:>10} {:>12}", "published", "bw_dev", "deficit_dev").unwrap();
    }
    writeln!(out, "{header}").unwrap();
    for r in &rows {
        write!(
            out,
            "{:>9.1} {:>9.1} {:>14.1} {:>8.1} {:>8.1}x",
            r.freq_hz, r.scale_value, r.bandwidth_hz, r.jnd_hz, r.deficit_ratio
        )
        .unwrap();
        if let Some(p) = published(r.freq_hz) {
            write!(
                out,
                " {:>10} {:>+9.1}% {:>+11.1}%",
                format!("{:.1}/{:.0}x", p.2, p.4),
                dev_pct(r.bandwidth_hz, p.2),
                dev_pct(r.deficit_ratio, p.4)
            )
            .unwrap();
        }
        out.push('\n');
    }
    emit(None, &out)
}

#[derive(Serialize)]
struct ReferenceGroup {
    group_id: String,
    task: Task,
    summary_acc: f64,
}

#[derive(Serialize)]
struct ReferenceReport {
    frontend: String,
    domain: Domain,
    per_group: Vec<ReferenceGroup>,
    wgs: f64,
    gap: f64,
    rho: f64,
    four_fifths_pass: bool,
    mixed_metrics: bool,
}

fn mixed(tasks: &[Task]) -> Option<String> {
    let mut metrics: Vec<&str> = tasks.iter().map(|t| t.metric()).collect();
    metrics.sort_unstable();
    metrics.dedup();
    (metrics.len() > 1).then(|| format!("note: groups are scored by different measurements ({})", metrics.join(", ")))
}

fn fairness(cli: &Cli, a: &FairnessArgs) -> CliResult {
    if let Some(fe) = a.reference {
        let domain = Domain::parse(a.domain.as_deref().unwrap_or_default())?;
        let groups = reference_groups(fe.name(), domain)?
            .ok_or_else(|| Failure::from(fairbench::Error::Data(format!("{fe} was not evaluated on {}", domain.name()))))?;
        let m = fairness_metrics(&groups)?;
        let tasks: Vec<Task> = groups.iter().map(|g| g.task).collect();
        let report = ReferenceReport {
            frontend: fe.name().to_string(),
            domain,
            per_group: groups
                .iter()
                .map(|g| ReferenceGroup { group_id: g.group_id.clone(), task: g.task, summary_acc: g.summary_acc })
                .collect(),
            wgs: m.wgs,
            gap: m.gap,
            rho: m.rho,
            four_fifths_pass: m.four_fifths_pass,
            mixed_metrics: mixed(&tasks).is_some(),
        };
        let json = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
        if let Some(p) = &a.output {
            write_file(p, json.as_bytes())?;
        }
        if a.json {
            return emit(None, &json);
        }
        let mut out = format!("front-end: {fe} ({} reference accuracies)\n", domain.name());
        writeln!(out, "{:<14} {:<18} {:<8} {:>7}", "group", "task", "metric", "acc").unwrap();
        for g in &groups {
            writeln!(out, "{:<14} {:<18} {:<8} {:>7}", g.group_id, g.task.name(), g.task.metric(), fmt_pct(g.summary_acc))
                .unwrap();
        }
        writeln!(out, "WGS  {}", fmt_pct(m.wgs)).unwrap();
        writeln!(out, "Gap  {}", fmt_pct(m.gap)).unwrap();
        writeln!(out, "rho  {}", fmt_rho(m.rho)).unwrap();
        if let Some(note) = mixed(&tasks) {
            writeln!(out, "{note}").unwrap();
        }
        writeln!(out, "{}", verdict_line(m.four_fifths_pass)).unwrap();
        return emit(None, &out);
    }

    let path = a.results.as_ref().expect("clap requires --results without --reference");
    let defs = a.groups.as_deref().map(read_group_defs).transpose()?;
    let groups = read_results(path, defs.as_ref(), a.frontend.as_deref()).map_err(|e| Failure::from(e).context(path.display()))?;
    let report = bootstrap_report(&groups, a.n_boot, cli.seed)?;
    let json = report.to_json() + "\n";
    if let Some(p) = &a.output {
        write_file(p, json.as_bytes())?;
    }
    if a.json {
        return emit(None, &json);
    }
    let ci = |i: &Interval, f: fn(f64) -> String| format!("[{}, {}]", f(i.lo), f(i.hi));
    let pct = |x: f64| fmt_pct(x);
    let rho = |x: f64| fmt_rho(x);
    let level = format!("{:.0}% CI", 100.0 * report.confidence);
    let mut out = String::new();
    if let Some(fe) = &a.frontend {
        writeln!(out, "front-end: {fe}").unwrap();
    }
    writeln!(out, "{:<14} {:<18} {:<8} {:>6} {:>7}  {level}", "group", "task", "metric", "n", "acc").unwrap();
    for g in &report.per_group {
        writeln!(
            out,
            "{:<14} {:<18} {:<8} {:>6} {:>7}  {}",
            g.group_id,
            g.task.name(),
            g.task.metric(),
            g.n,
            pct(g.summary_acc),
            ci(&g.ci, pct)
        )
        .unwrap();
    }
    writeln!(out, "WGS  {:>6}  {}", pct(report.wgs), ci(&report.ci_wgs, pct)).unwrap();
    let sig = if report.gap_significant { "significant" } else { "not significant" };
    writeln!(out, "Gap  {:>6}  {}  {sig}", pct(report.gap), ci(&report.ci_gap, pct)).unwrap();
    writeln!(out, "rho  {:>6}  {}", rho(report.rho), ci(&report.ci_rho, rho)).unwrap();
    if let Some(note) = mixed(&report.per_group.iter().map(|g| g.task).collect::<Vec<_>>()) {
        writeln!(out, "{note}").unwrap();
    }
    writeln!(out, "bootstrap: {} replicates, seed {}", report.n_boot, report.seed).unwrap();
    writeln!(out, "{}", verdict_line(report.four_fifths_pass)).unwrap();
    emit(None, &out)
}

fn probe(cli: &Cli, a: &ProbeArgs) -> CliResult {
    let config = ProbeConfig {
        band_lo: a.band.0,
        band_hi: a.band.1,
        n_trials: a.trials,
        harmonics: a.harmonics,
        snr_db: a.snr,
        dur_s: a.duration,
        seed: cli.seed,
    };
    let mut out = String::from("frontend,interval_cents,accuracy,n_trials,seed\n");
    for &kind in &a.frontends {
        let fe = Frontend::default_for(kind, cli.sample_rate)?;
        for &cents in &a.interval {
            let r = discrimination_probe(&fe, cents, &config)?;
            writeln!(out, "{},{},{:.1},{},{}", r.frontend, r.interval_cents, r.accuracy, r.n_trials, r.seed).unwrap();
        }
    }
    emit(a.output.as_deref(), &out)
}

fn bound(a: &BoundArgs) -> CliResult {
    let spec = match &a.spec {
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| Failure::input(e.to_string()).context(p.display()))?;
            read_bound_csv(file).map_err(|e| Failure::from(e).context(p.display()))?
        }
        None => {
            BoundSpec::uniform_band(a.band.0, a.band.1, a.points, bank_resolution(warp_of(a.warp), a.filters, a.f_min, a.f_max))?
        }
    };
    if let Some(p) = &a.write_spec {
        let mut buf = Vec::new();
        write_bound_csv(&spec, &mut buf)?;
        write_file(p, &buf)?;
    }
    let total = bound_integral(&spec);
    let corollary = corollary_integral(&spec, a.c, a.band.0, a.band.1)?;
    let flags = spec.deficient();
    let fired = flags.iter().filter(|&&d| d).count();
    let mut out = String::from("quantity,value\n");
    writeln!(out, "bound_integral,{total:.6}").unwrap();
    writeln!(out, "corollary_integral,{corollary:.6}").unwrap();
    writeln!(out, "corollary_c,{}", a.c).unwrap();
    writeln!(out, "corollary_band,{}:{}", a.band.0, a.band.1).unwrap();
    writeln!(out, "deficient_points,{fired}").unwrap();
    writeln!(out, "grid_points,{}", spec.len()).unwrap();
    emit(a.output.as_deref(), &out)
}

fn sample(cli: &Cli, a: &SampleArgs) -> CliResult {
    let manifest = match (&a.manifest, &a.synthetic) {
        (Some(p), _) => Manifest::read(p).map_err(|e| Failure::from(e).context(p.display()))?,
        (None, Some(domain)) => synthetic_manifest(domain, a.per_label)?,
        (None, None) => unreachable!("clap requires a manifest source"),
    };
    let quota = Quota::parse(&a.quota)?;
    let picked = sample_balanced(&manifest, &quota, a.stratify.as_deref(), cli.seed)?;
    if a.summary {
        let mut out = String::from("label,stratum,count\n");
        let counts = picked.count_by(|e| {
            let stratum = a.stratify.as_ref().and_then(|f| e.extra.get(f)).cloned().unwrap_or_default();
            format!("{},{stratum}", e.language_or_tradition)
        });
        for (k, n) in counts {
            writeln!(out, "{k},{n}").unwrap();
        }
        return emit(a.output.as_deref(), &out);
    }
    emit(a.output.as_deref(), &(picked.to_json() + "\n"))
}

/// Seeded harmonic tone in noise, used when no audio file is given.
fn synthetic_audio(seconds: f64, seed: u64, sample_rate: f64) -> CliResult<AudioBuffer> {
    Ok(synth_tone_clip(&flat_contour(220.0, seconds), 3, 0.0, seconds, seed, sample_rate)?)
}

fn bench(cli: &Cli, a: &BenchArgs) -> CliResult {
    let audio = match &a.audio {
        Some(p) => load_audio(p, cli.sample_rate).map_err(|e| Failure::from(e).context(p.display()))?,
        None => synthetic_audio(a.duration, cli.seed, cli.sample_rate)?,
    };
    let frontends = a
        .frontends
        .iter()
        .map(|&k| Frontend::default_for(k, cli.sample_rate))
        .collect::<fairbench::Result<Vec<_>>>()?;
    let rows = overhead_benchmark(&frontends, &audio, a.passes)?;
    let mut out = String::from("frontend,median_ms,relative,n_passes\n");
    for r in rows.iter().filter(|r| a.frontends.iter().any(|k| k.name() == r.frontend) || r.frontend == FrontendKind::Mel.name()) {
        writeln!(out, "{},{:.4},{:.2},{}", r.frontend, 1e3 * r.median_s, r.relative, r.n_passes).unwrap();
    }
    emit(a.output.as_deref(), &out)
}
