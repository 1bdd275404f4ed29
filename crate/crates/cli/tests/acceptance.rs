//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails if any criterion fails that is not listed in
//! `KNOWN_FAILURES`; listed ones are still evaluated and reported.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fairbench::evalkit::bound::{bank_resolution, bound_integral, BoundSpec};
use fairbench::evalkit::synth::flat_contour;
use fairbench::evalkit::{discrimination_probe, overhead_benchmark, synth_tone_clip, ProbeConfig};
use fairbench::fairness::reference::{compare_domain, reference_groups, Domain};
use fairbench::fairness::{fairness_metrics, fmt_pct, fmt_rho, gap_reduction_pct};
use fairbench::frontend::{Frontend, FrontendKind};
use fairbench::parametric::adapt::CRITICAL_BAND;
use fairbench::parametric::{
    adapt_toy, allocation_fraction, gabor_param_grads, gabor_response, sinc_param_grads, sinc_response, AdaptConfig,
    GaborBank, SincBank, ToneTask,
};
use fairbench::scales::{mel_resolution_derivative, resolution_table, TONAL_PROBES_HZ};
use fairbench::FrequencyWarp;

/// Criteria that fail under the pinned settings; see the decisions ledger.
const KNOWN_FAILURES: &[u32] = &[7];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(limit: Duration, start: Instant, r: Outcome) -> Outcome {
    let took = start.elapsed();
    let stamp = |d: String| format!("{d} [{:.2} s, limit {} s]", took.as_secs_f64(), limit.as_secs());
    match r {
        Ok(d) if took <= limit => Ok(stamp(d)),
        Ok(d) => Err(stamp(format!("{d}; over time"))),
        Err(d) => Err(stamp(d)),
    }
}

const MEL_VALUES: [f64; 7] = [122.0, 150.5, 283.2, 344.2, 402.0, 509.4, 607.4];
const BANDWIDTHS: [f64; 7] = [51.6, 51.6, 58.6, 62.4, 66.4, 70.7, 80.2];
const DEFICITS: [f64; 7] = [65.0, 52.0, 29.0, 25.0, 22.0, 18.0, 16.0];
const JNDS: [f64; 7] = [0.8, 1.0, 2.0, 2.5, 3.0, 4.0, 5.0];

fn c1_mel_values() -> Outcome {
    let start = Instant::now();
    let rows = resolution_table(&FrequencyWarp::mel(), 40, 0.0, 8000.0, &TONAL_PROBES_HZ).map_err(|e| e.to_string())?;
    let worst = rows.iter().zip(MEL_VALUES).map(|(r, m)| (r.scale_value - m).abs()).fold(0.0, f64::max);
    within_time(Duration::from_secs(1), start, check(worst <= 0.1, format!("max |mel - published| = {worst:.4}")))
}

fn c2_bandwidths() -> Outcome {
    let rows = resolution_table(&FrequencyWarp::mel(), 40, 0.0, 8000.0, &TONAL_PROBES_HZ).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let bw = rows.iter().zip(BANDWIDTHS).map(|(r, b)| rel(r.bandwidth_hz, b)).fold(0.0, f64::max);
    let def = rows.iter().zip(DEFICITS).map(|(r, d)| rel(r.deficit_ratio, d)).fold(0.0, f64::max);
    let jnd_exact = rows.iter().zip(JNDS).all(|(r, j)| format!("{:.1}", r.jnd_hz) == format!("{j:.1}") && (r.jnd_hz - j).abs() < 1e-12);
    let table = cli(&["analyze", "resolution-table"])?;
    let printed = table.contains("bandwidth convention") && table.contains("bw_dev") && table.contains("deficit_dev");
    for line in table.lines() {
        println!("      | {line}");
    }
    check(
        bw <= 0.15 && def <= 0.15 && jnd_exact && printed,
        format!(
            "max bandwidth deviation {:.1}%, max deficit deviation {:.1}%, JND exact {jnd_exact}, deviations printed {printed}",
            100.0 * bw,
            100.0 * def
        ),
    )
}

fn c3_derivative() -> Outcome {
    let d: f64 = mel_resolution_derivative(0.0);
    check((d - 0.621).abs() <= 0.001, format!("df/dm at m = 0 is {d:.5}"))
}

fn c4_table_rows() -> Outcome {
    let start = Instant::now();
    let want = [
        (Domain::Speech, ["68.8", "74.2"], ["12.5", "8.3"], ["0.85", "0.90"]),
        (Domain::Music, ["56.7", "65.3"], ["15.7", "7.6"], ["0.78", "0.90"]),
        (Domain::Scenes, ["71.2", "72.5"], ["5.6", "5.0"], ["0.93", "0.94"]),
    ];
    let mut bad = Vec::new();
    let mut got = Vec::new();
    for (domain, wgs, gap, rho) in want {
        let c = compare_domain(domain).map_err(|e| e.to_string())?;
        let have = (
            [fmt_pct(c.baseline_metrics.wgs), fmt_pct(c.best_metrics.wgs)],
            [fmt_pct(c.baseline_metrics.gap), fmt_pct(c.best_metrics.gap)],
            [fmt_rho(c.baseline_metrics.rho), fmt_rho(c.best_metrics.rho)],
        );
        got.push(format!(
            "{} {}->{} / {}->{} / {}->{} (best {})",
            domain.name(),
            have.0[0],
            have.0[1],
            have.1[0],
            have.1[1],
            have.2[0],
            have.2[1],
            c.best
        ));
        if have.0 != wgs || have.1 != gap || have.2 != rho {
            bad.push(domain.name());
        }
    }
    let mel = |d| fairness_metrics(&reference_groups("mel", d).unwrap().unwrap()).unwrap();
    let verdicts = !mel(Domain::Music).four_fifths_pass && mel(Domain::Speech).four_fifths_pass;
    got.push(format!("verdicts mel music FAIL / speech PASS: {verdicts}"));
    within_time(Duration::from_secs(1), start, check(bad.is_empty() && verdicts, got.join("; ")))
}

fn c5_reductions() -> Outcome {
    let gap = |fe, d| fairness_metrics(&reference_groups(fe, d).unwrap().unwrap()).unwrap().gap;
    let erb = gap_reduction_pct(gap("mel", Domain::Speech), gap("erb", Domain::Speech)).map_err(|e| e.to_string())?;
    let cqt = gap_reduction_pct(gap("mel", Domain::Music), gap("cqt", Domain::Music)).map_err(|e| e.to_string())?;
    let (e, c, c0) = (format!("{erb:.1}"), format!("{cqt:.1}"), format!("{cqt:.0}"));
    check(e == "31.2" && c == "51.6" && c0 == "52", format!("ERB speech {e}%, CQT music {c}% ({c0}%)"))
}

/// SplitMix64, for test-local random numbers.
struct Mix(u64);

impl Mix {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

// Central-difference steps. Truncation error scales with h^2 and tonal inputs
// put zero crossings of the rectified sinc outputs within ~1e-3 Hz.
const GABOR_CENTER_STEP: f64 = 1e-6;
const GABOR_WIDTH_STEP: f64 = 1e-4;
const SINC_STEP_HZ: f64 = 1e-4;

fn agrees(a: f64, fd: f64) -> bool {
    (a - fd).abs() <= 1e-4 * a.abs().max(fd.abs()) || (a - fd).abs() < 1e-8
}

fn c6_gradients() -> Outcome {
    const SEEDS: u64 = 20;
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let gabor = GaborBank::default_16k();
    let sinc = SincBank::default_16k();
    for seed in 0..SEEDS {
        let mut rng = Mix(seed);
        let f0 = 200.0 + 300.0 * (rng.next() + 1.0) / 2.0;
        let audio = synth_tone_clip(&flat_contour(f0, 0.2), 3, 0.0, 0.2, seed, 16000.0).map_err(|e| e.to_string())?;
        let picks = [(seed as usize * 13) % 64, (seed as usize * 29 + 7) % 64];

        let f = gabor_response(&gabor, &audio, 10.0).map_err(|e| e.to_string())?;
        let mut lg = f.map(|_| 0.0);
        lg.values_mut().iter_mut().for_each(|v| *v = rng.next());
        let an = gabor_param_grads(&gabor, &audio, &lg).map_err(|e| e.to_string())?;
        let loss = |b: &GaborBank| -> f64 {
            let f = gabor_response(b, &audio, 10.0).unwrap();
            f.values().iter().zip(lg.values()).map(|(a, b)| a * b).sum()
        };
        for j in picks {
            for (name, h, field) in [("gabor centre", GABOR_CENTER_STEP, 0), ("gabor width", GABOR_WIDTH_STEP, 1)] {
                let (mut p, mut m) = (gabor.clone(), gabor.clone());
                let v = if field == 0 { (&mut p.centers[j], &mut m.centers[j]) } else { (&mut p.widths[j], &mut m.widths[j]) };
                *v.0 += h;
                *v.1 -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                let a = if field == 0 { an[j].d_center } else { an[j].d_width };
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-300));
                if !agrees(a, fd) {
                    failures.push(format!("seed {seed} {name} {j}: {a} vs {fd}"));
                }
            }
        }

        let f = sinc_response(&sinc, &audio, 10.0).map_err(|e| e.to_string())?;
        let mut lg = f.map(|_| 0.0);
        lg.values_mut().iter_mut().for_each(|v| *v = rng.next());
        let an = sinc_param_grads(&sinc, &audio, &lg).map_err(|e| e.to_string())?;
        let loss = |b: &SincBank| -> f64 {
            let f = sinc_response(b, &audio, 10.0).unwrap();
            f.values().iter().zip(lg.values()).map(|(a, b)| a * b).sum()
        };
        for j in picks {
            for (name, field) in [("sinc low", 0), ("sinc band", 1)] {
                let h = SINC_STEP_HZ;
                let (mut p, mut m) = (sinc.clone(), sinc.clone());
                let v = if field == 0 { (&mut p.low_hz[j], &mut m.low_hz[j]) } else { (&mut p.band_hz[j], &mut m.band_hz[j]) };
                *v.0 += h;
                *v.1 -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                let a = if field == 0 { an[j].d_low } else { an[j].d_band };
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-300));
                if !agrees(a, fd) {
                    failures.push(format!("seed {seed} {name} {j}: {a} vs {fd}"));
                }
            }
        }
    }
    let detail = format!("{SEEDS} seeds x 2 filters x 4 parameters, worst relative error {worst:.2e}");
    let r = if failures.is_empty() { Ok(detail) } else { Err(format!("{detail}; {}", failures.join("; "))) };
    within_time(Duration::from_secs(60), start, r)
}

fn c7_probe() -> Outcome {
    let start = Instant::now();
    let intervals = [22.0, 50.0, 100.0, 1200.0];
    let config = ProbeConfig::default();
    let mut acc = Vec::new();
    for kind in FrontendKind::ALL {
        let fe = Frontend::default_for(kind, 16000.0).map_err(|e| e.to_string())?;
        let row = intervals
            .iter()
            .map(|&c| discrimination_probe(&fe, c, &config).map(|r| r.accuracy))
            .collect::<fairbench::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        println!(
            "      | {:<9} {}",
            kind.name(),
            intervals.iter().zip(&row).map(|(c, a)| format!("{c:>4}c {a:5.1}%")).collect::<Vec<_>>().join("  ")
        );
        acc.push((kind, row));
    }
    let at50 = |k: FrontendKind| acc.iter().find(|r| r.0 == k).unwrap().1[1];
    let margin = at50(FrontendKind::Cqt) - at50(FrontendKind::Mel);
    let non_monotone: Vec<&str> =
        acc.iter().filter(|(_, r)| r.windows(2).any(|w| w[1] < w[0])).map(|(k, _)| k.name()).collect();
    let detail = format!(
        "{} trials, seed {}: CQT - mel at 50 cents = {margin:+.1} points (need >= +10); non-monotone: {}",
        config.n_trials,
        config.seed,
        if non_monotone.is_empty() { "none".to_string() } else { non_monotone.join(", ") }
    );
    within_time(Duration::from_secs(300), start, check(margin >= 10.0 && non_monotone.is_empty(), detail))
}

fn c8_adaptation() -> Outcome {
    let start = Instant::now();
    let bank = GaborBank::default_16k();
    let task = ToneTask::four_tone(16, 0, 16000.0).map_err(|e| e.to_string())?;
    let config = AdaptConfig::default();
    let out = adapt_toy(&bank, &task, &config).map_err(|e| e.to_string())?;
    let (lo, hi) = CRITICAL_BAND;
    let before = allocation_fraction(&bank.centers_hz(), lo, hi).map_err(|e| e.to_string())?;
    let after = allocation_fraction(&out.bank.centers_hz(), lo, hi).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} steps: {}/{} -> {}/{} filters in {lo}-{hi} Hz ({:.4} -> {:.4}), loss {:.3} -> {:.3}",
        config.steps,
        before.n_in_band,
        before.n_filters,
        after.n_in_band,
        after.n_filters,
        before.fraction,
        after.fraction,
        out.losses.first().copied().unwrap_or(f64::NAN),
        out.losses.last().copied().unwrap_or(f64::NAN)
    );
    within_time(Duration::from_secs(600), start, check(after.fraction > before.fraction, detail))
}

fn c9_bound() -> Outcome {
    // R <= df_min everywhere
    let fine = BoundSpec::<f64>::uniform_band(200.0, 500.0, 31, |f| 0.005 * f).map_err(|e| e.to_string())?;
    let zero = bound_integral(&fine);

    // a profile that crosses its threshold, against a 10x finer grid
    let info = |f: f64| 1.0 + (f / 90.0).sin().powi(2);
    let res = |f: f64| 6.0 + 2.0 * (f / 40.0).cos();
    let make = |n: usize| {
        let freqs: Vec<f64> = (0..n).map(|i| 200.0 + 300.0 * i as f64 / (n - 1) as f64).collect();
        BoundSpec::new(
            freqs.clone(),
            freqs.iter().map(|&f| info(f)).collect(),
            vec![1.0 / 300.0; n],
            freqs.iter().map(|&f| 0.01 * f).collect(),
            freqs.iter().map(|&f| res(f)).collect(),
        )
    };
    let coarse = bound_integral(&make(3001).map_err(|e| e.to_string())?);
    let n = 30001;
    let dx = 300.0 / (n - 1) as f64;
    let oracle: f64 = (0..n - 1)
        .map(|i| {
            let f = 200.0 + (i as f64 + 0.5) * dx;
            if res(f) > 0.01 * f { info(f) / 300.0 * dx } else { 0.0 }
        })
        .sum();
    let rel = (coarse - oracle).abs() / oracle;

    let mel = BoundSpec::<f64>::uniform_band(200.0, 500.0, 301, bank_resolution(FrequencyWarp::mel(), 40, 0.0, 8000.0))
        .map_err(|e| e.to_string())?;
    let whole = mel.deficient().iter().all(|&d| d);
    let mel_bound = bound_integral(&mel);
    check(
        zero == 0.0 && rel <= 1e-3 && whole && (mel_bound - 1.0).abs() < 1e-9,
        format!("resolved profile {zero}; Riemann relative error {rel:.2e}; mel indicator on whole band {whole}, bound {mel_bound:.6}"),
    )
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fairbench"))
        .env_remove("FAB_SEED")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("`{}` exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn c10_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("fairbench-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let wav = dir.join("tone.wav");
    let clip = synth_tone_clip(&flat_contour(220.0, 1.0), 3, 20.0, 1.0, 3, 16000.0).map_err(|e| e.to_string())?;
    fairbench::wav::write_wav(&wav, clip.samples(), 1, 16000, fairbench::wav::WavEncoding::Pcm16).map_err(|e| e.to_string())?;
    let results = dir.join("results.csv");
    let mut csv = String::from("sample_id,group_id,task,error_rate\n");
    for i in 0..150 {
        csv.push_str(&format!("t{i},tonal,speech_tonal,{}\n", 0.1 + 0.4 * ((i * 7) % 11) as f64 / 10.0));
        csv.push_str(&format!("n{i},non_tonal,speech_non_tonal,{}\n", 0.05 + 0.3 * ((i * 5) % 13) as f64 / 12.0));
    }
    std::fs::write(&results, csv).map_err(|e| e.to_string())?;
    let (wav_s, res_s) = (wav.to_str().unwrap(), results.to_str().unwrap());
    let fab = |n: &str| dir.join(n).to_str().unwrap().to_string();
    let (fab_a, fab_b) = (fab("a.fab"), fab("b.fab"));

    let commands: Vec<Vec<&str>> = vec![
        vec!["analyze", "resolution-table"],
        vec!["fairness", "--results", res_s, "--n-boot", "500", "--seed", "4"],
        vec!["fairness", "--results", res_s, "--n-boot", "500", "--seed", "4", "--json"],
        vec!["fairness", "--reference", "mel", "--domain", "music"],
        vec!["probe", "--frontends", "mel,cqt", "--interval", "50,100", "--trials", "60", "--seed", "2"],
        vec!["bound"],
        vec!["sample", "--synthetic", "scenes", "--quota", "100", "--stratify", "scene", "--seed", "8"],
        vec!["figure", "gaps"],
        vec!["figure", "tradeoff"],
        vec!["figure", "allocation", "--adapt-steps", "3", "--seed", "1"],
    ];
    let mut checked = 0;
    for args in &commands {
        let (a, b) = (cli(args)?, cli(args)?);
        if a != b {
            return Err(format!("`{}` differs between runs", args.join(" ")));
        }
        checked += 1;
    }
    for kind in ["mel", "leaf"] {
        cli(&["extract", "--frontend", kind, wav_s, "-o", &fab_a])?;
        cli(&["extract", "--frontend", kind, wav_s, "-o", &fab_b])?;
        let (a, b) = (std::fs::read(&fab_a).map_err(|e| e.to_string())?, std::fs::read(&fab_b).map_err(|e| e.to_string())?);
        if a != b {
            return Err(format!("extract --frontend {kind} differs between runs"));
        }
        checked += 1;
    }
    // bench measures time; only its non-timing columns are compared
    let strip = |s: String| -> Vec<String> {
        s.lines()
            .map(|l| {
                let c: Vec<&str> = l.split(',').collect();
                format!("{},{}", c[0], c[c.len() - 1])
            })
            .collect()
    };
    let bench = ["bench", "--frontends", "mel,erb", "--passes", "100", "--duration", "0.25", "--seed", "3"];
    if strip(cli(&bench)?) != strip(cli(&bench)?) {
        return Err("bench rows differ between runs".into());
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{checked} seeded commands byte-identical across two runs; bench compared without timing columns"))
}

fn c11_benchmark() -> Outcome {
    let kinds = [FrontendKind::Mel, FrontendKind::Erb, FrontendKind::Bark, FrontendKind::Cqt];
    let frontends = kinds.iter().map(|&k| Frontend::default_for(k, 16000.0)).collect::<fairbench::Result<Vec<_>>>().map_err(|e| e.to_string())?;
    let audio = synth_tone_clip(&flat_contour(220.0, 1.0), 3, 0.0, 1.0, 0, 16000.0).map_err(|e| e.to_string())?;
    let rows = overhead_benchmark(&frontends, &audio, 200).map_err(|e| e.to_string())?;
    let rel = |name: &str| rows.iter().find(|r| r.frontend == name).map(|r| r.relative).unwrap();
    let (mel, erb, bark, cqt) = (rel("mel"), rel("erb"), rel("bark"), rel("cqt"));
    check(
        format!("{mel:.2}") == "1.00" && erb <= 1.05 && bark <= 1.05 && cqt > 1.0,
        format!("200 passes on 1 s: mel {mel:.2}x, erb {erb:.2}x, bark {bark:.2}x, cqt {cqt:.2}x"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "mel values of the resolution table", c1_mel_values),
        (2, "bandwidth and deficit columns", c2_bandwidths),
        (3, "mel resolution derivative at 0", c3_derivative),
        (4, "fairness rows from group accuracies", c4_table_rows),
        (5, "gap reductions", c5_reductions),
        (6, "parametric gradients vs central differences", c6_gradients),
        (7, "quarter-tone probe", c7_probe),
        (8, "toy adaptation moves filters into 80-500 Hz", c8_adaptation),
        (9, "bound integrator", c9_bound),
        (10, "CLI determinism", c10_determinism),
        (11, "overhead benchmark ordering", c11_benchmark),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let known = KNOWN_FAILURES.contains(&id);
        match f() {
            Ok(d) if known => println!("criterion {id:>2} PASS ({name}; listed as a known failure): {d}"),
            Ok(d) => println!("criterion {id:>2} PASS ({name}): {d}"),
            Err(d) if known => println!("criterion {id:>2} FAIL (known, see decisions ledger) ({name}): {d}"),
            Err(d) => {
                unexpected += 1;
                println!("criterion {id:>2} FAIL ({name}): {d}");
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected acceptance failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
