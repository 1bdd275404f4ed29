//! CSV emitters for the summary figures.

use std::fmt::Write as _;

use fairbench::fairness::reference::{reference_groups, reference_row, Domain, REFERENCE};
use fairbench::fairness::{fairness_metrics, fmt_pct, fmt_rho, gap_reduction_pct};
use fairbench::parametric::adapt::{CRITICAL_BAND, TONE_CLIP_S};
use fairbench::parametric::{adapt_toy, allocation_fraction, AdaptConfig, GaborBank, ToneTask};
use fairbench::{FrameSpec, FrequencyWarp, TriangularBank};

use crate::commands::emit;
use crate::failure::CliResult;
use crate::{Cli, FigureArgs, FigureKind};

/// Clips per tone class in the adaptation task.
const CLIPS_PER_CLASS: usize = 16;

pub fn figure(cli: &Cli, a: &FigureArgs) -> CliResult {
    let out = match a.kind {
        FigureKind::Gaps => gaps()?,
        FigureKind::Allocation => allocation(cli, a)?,
        FigureKind::Tradeoff => tradeoff()?,
    };
    emit(a.output.as_deref(), &out)
}

fn gaps() -> CliResult<String> {
    let mut out = String::from("frontend,domain,group_a,acc_a,group_b,acc_b,wgs,gap,rho\n");
    for domain in Domain::ALL {
        for row in &REFERENCE {
            let Some(g) = reference_groups(row.frontend, domain)? else { continue };
            let m = fairness_metrics(&g)?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.frontend,
                domain.name(),
                g[0].group_id,
                fmt_pct(g[0].summary_acc),
                g[1].group_id,
                fmt_pct(g[1].summary_acc),
                fmt_pct(m.wgs),
                fmt_pct(m.gap),
                fmt_rho(m.rho)
            )
            .unwrap();
        }
    }
    Ok(out)
}

fn tradeoff() -> CliResult<String> {
    let mut out = String::from("frontend,domain,gap,gap_reduction_pct,overhead_pct\n");
    for domain in Domain::ALL {
        let base = fairness_metrics(&reference_groups("mel", domain)?.expect("mel is evaluated everywhere"))?;
        let mel_cost = reference_row("mel")?.cost;
        for row in &REFERENCE {
            let Some(g) = reference_groups(row.frontend, domain)? else { continue };
            let m = fairness_metrics(&g)?;
            let reduction = gap_reduction_pct(base.gap, m.gap)?;
            let overhead = 100.0 * (row.cost / mel_cost - 1.0);
            writeln!(out, "{},{},{},{:.1},{:.1}", row.frontend, domain.name(), fmt_pct(m.gap), reduction, overhead).unwrap();
        }
    }
    Ok(out)
}

fn allocation(cli: &Cli, a: &FigureArgs) -> CliResult<String> {
    let sr = cli.sample_rate;
    let bins = FrameSpec::default().fft_len(sr) / 2 + 1;
    let (lo, hi) = CRITICAL_BAND;
    let mut banks: Vec<(String, Vec<f64>)> = Vec::new();
    for top in [8000.0f64, 4000.0] {
        let top = top.min(0.5 * sr);
        let bank = TriangularBank::new(FrequencyWarp::mel(), 40, 0.0, top, bins, sr)?;
        banks.push((format!("mel-0-{}k", top / 1000.0), bank.centers_hz()));
    }
    let init = GaborBank::mel_init(
        fairbench::parametric::DEFAULT_FILTERS,
        sr,
        fairbench::parametric::DEFAULT_KERNEL_LEN,
        fairbench::parametric::gabor::DEFAULT_POOLING_WIDTH,
    )?;
    banks.push(("leaf-init".into(), init.centers_hz()));
    if a.adapt_steps > 0 {
        let task = ToneTask::four_tone(CLIPS_PER_CLASS, cli.seed, sr)?;
        let config = AdaptConfig { steps: a.adapt_steps, seed: cli.seed, ..AdaptConfig::default() };
        let outcome = adapt_toy(&init, &task, &config)?;
        eprintln!(
            "adapted {} steps on {} clips of {TONE_CLIP_S} s, final loss {:.4}",
            a.adapt_steps,
            task.len(),
            outcome.losses.last().copied().unwrap_or(f64::NAN)
        );
        banks.push((format!("leaf-adapted-{}", a.adapt_steps), outcome.bank.centers_hz()));
    }

    let mut out = String::new();
    if a.centers {
        out.push_str("bank,index,center_hz,in_band\n");
        for (name, centers) in &banks {
            for (i, c) in centers.iter().enumerate() {
                writeln!(out, "{name},{i},{c:.2},{}", u8::from(*c >= lo && *c <= hi)).unwrap();
            }
        }
    } else {
        out.push_str("bank,n_filters,n_in_band,fraction,band_lo,band_hi\n");
        for (name, centers) in &banks {
            let s = allocation_fraction(centers, lo, hi)?;
            writeln!(out, "{name},{},{},{:.4},{lo},{hi}", s.n_filters, s.n_in_band, s.fraction).unwrap();
        }
    }
    Ok(out)
}
