//! Front-end cost relative to mel.
//!
//! Passes are interleaved round-robin across front-ends so drift in machine
//! load affects all of them alike; the first 10% of rounds are warmup.

use std::time::Instant;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::frontend::{Frontend, FrontendKind};
use crate::spectral::AudioBuffer;

pub const MIN_PASSES: usize = 100;
pub const WARMUP_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub frontend: String,
    pub median_s: f64,
    /// Median time over the mel median.
    pub relative: f64,
    pub n_passes: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median wall time per forward pass, relative to mel. A default mel
/// front-end is timed as the reference when none is in the list.
pub fn overhead_benchmark(frontends: &[Frontend], audio: &AudioBuffer, n_passes: usize) -> Result<Vec<BenchRow>> {
    if n_passes < MIN_PASSES {
        return Err(domain(format!("benchmark needs at least {MIN_PASSES} passes, got {n_passes}")));
    }
    if frontends.is_empty() {
        return Err(domain("no front-ends to benchmark"));
    }
    let sr = frontends[0].config().sample_rate;
    if frontends.iter().any(|f| f.config().sample_rate != sr) {
        return Err(domain("front-ends must share one sample rate"));
    }
    let extra_mel = if frontends.iter().any(|f| f.kind() == FrontendKind::Mel) {
        None
    } else {
        Some(Frontend::default_for(FrontendKind::Mel, sr)?)
    };
    let all: Vec<&Frontend> = frontends.iter().chain(extra_mel.as_ref()).collect();
    let warmup = (n_passes as f64 * WARMUP_FRACTION).ceil() as usize;
    let mut times = vec![Vec::with_capacity(n_passes); all.len()];
    for round in 0..warmup + n_passes {
        for (k, fe) in all.iter().enumerate() {
            let t = Instant::now();
            let out = fe.extract(audio)?;
            let dt = t.elapsed().as_secs_f64();
            std::hint::black_box(out);
            if round >= warmup {
                times[k].push(dt);
            }
        }
    }
    let medians: Vec<f64> = times.into_iter().map(median).collect();
    let mel = all.iter().position(|f| f.kind() == FrontendKind::Mel).expect("mel present");
    let reference = medians[mel];
    Ok(frontends
        .iter()
        .zip(&medians)
        .map(|(fe, &m)| BenchRow {
            frontend: fe.kind().name().to_string(),
            median_s: m,
            relative: if fe.kind() == FrontendKind::Mel && std::ptr::eq(fe, all[mel]) { 1.0 } else { m / reference },
            n_passes,
        })
        .collect())
}
