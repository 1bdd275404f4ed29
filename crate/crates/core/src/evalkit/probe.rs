//! ABX pitch-interval discrimination on synthetic harmonic tones.
//!
//! Each trial draws a base frequency log-uniformly in the band, renders A at
//! `f` and B at `f * 2^(cents/1200)`, then renders X as a fresh copy (new
//! phases and noise) of one of them. X is assigned to whichever of A, B has
//! the nearer time-averaged feature vector in cosine distance. The trial
//! streams depend only on the seed and trial index, so different intervals
//! and front-ends see the same base frequencies, X choices and noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::{flat_contour, synth_tone_clip};
use crate::error::{domain, Result};
use crate::frontend::Frontend;
use crate::spectral::AudioBuffer;

pub const MIN_TRIALS: usize = 50;
pub const SEMITONE: f64 = 100.0;
pub const QUARTER_TONE: f64 = 50.0;
pub const SHRUTI: f64 = 22.0;
pub const OCTAVE: f64 = 1200.0;

pub fn interval_label(cents: f64) -> Option<&'static str> {
    match cents {
        c if c == SEMITONE => Some("semitone"),
        c if c == QUARTER_TONE => Some("quarter-tone"),
        c if c == SHRUTI => Some("shruti"),
        c if c == OCTAVE => Some("octave"),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub band_lo: f64,
    pub band_hi: f64,
    pub n_trials: usize,
    pub harmonics: usize,
    pub snr_db: f64,
    pub dur_s: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { band_lo: 200.0, band_hi: 500.0, n_trials: 200, harmonics: 3, snr_db: 20.0, dur_s: 0.3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub frontend: String,
    pub interval_cents: f64,
    pub base_freqs: Vec<f64>,
    /// Percent correct.
    pub accuracy: f64,
    pub n_trials: usize,
    pub seed: u64,
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    1.0 - dot / (na * nb)
}

struct Trial {
    base: f64,
    x_is_b: bool,
    seeds: [u64; 3],
    coin: bool,
}

fn trial(config: &ProbeConfig, t: usize) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(t as u64);
    let (l, h) = (config.band_lo.ln(), config.band_hi.ln());
    let base = rng.random_range(l..=h).exp();
    Trial { base, x_is_b: rng.random_bool(0.5), seeds: rng.random(), coin: rng.random_bool(0.5) }
}

fn render(config: &ProbeConfig, f0: f64, seed: u64, sample_rate: f64) -> Result<AudioBuffer> {
    synth_tone_clip(&flat_contour(f0, config.dur_s), config.harmonics, config.snr_db, config.dur_s, seed, sample_rate)
}

/// Percent of trials in which X is matched to the stimulus it copies.
pub fn discrimination_probe(frontend: &Frontend, interval_cents: f64, config: &ProbeConfig) -> Result<ProbeResult> {
    if config.n_trials < MIN_TRIALS {
        return Err(domain(format!("probe needs at least {MIN_TRIALS} trials, got {}", config.n_trials)));
    }
    if !(config.band_lo > 0.0 && config.band_lo < config.band_hi) {
        return Err(domain(format!("probe band [{}, {}] is invalid", config.band_lo, config.band_hi)));
    }
    if !(interval_cents >= 0.0 && interval_cents.is_finite()) {
        return Err(domain(format!("interval {interval_cents} cents must be finite and non-negative")));
    }
    let sr = frontend.config().sample_rate;
    let ratio = 2f64.powf(interval_cents / 1200.0);
    let outcomes: Vec<(f64, bool)> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let tr = trial(config, t);
            let (fa, fb) = (tr.base, tr.base * ratio);
            let feat = |f0: f64, seed: u64| -> Result<Vec<f64>> {
                Ok(frontend.extract(&render(config, f0, seed, sr)?)?.time_average())
            };
            let a = feat(fa, tr.seeds[0])?;
            let b = feat(fb, tr.seeds[1])?;
            let x = feat(if tr.x_is_b { fb } else { fa }, tr.seeds[2])?;
            let (da, db) = (cosine_distance(&x, &a), cosine_distance(&x, &b));
            let says_b = if da == db { tr.coin } else { db < da };
            Ok((tr.base, says_b == tr.x_is_b))
        })
        .collect::<Result<_>>()?;
    let correct = outcomes.iter().filter(|o| o.1).count();
    Ok(ProbeResult {
        frontend: frontend.kind().name().to_string(),
        interval_cents,
        base_freqs: outcomes.iter().map(|o| o.0).collect(),
        accuracy: 100.0 * correct as f64 / config.n_trials as f64,
        n_trials: config.n_trials,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_distance_basics() {
        assert!(cosine_distance(&[1.0, 2.0], &[2.0, 4.0]).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_distance(&[0.0], &[0.0]), 0.0);
    }

    #[test]
    fn trials_are_seeded_and_in_band() {
        let c = ProbeConfig::default();
        for t in 0..100 {
            let a = trial(&c, t);
            assert!((200.0..=500.0).contains(&a.base));
            assert_eq!(a.base, trial(&c, t).base);
        }
        assert_ne!(trial(&c, 0).base, trial(&c, 1).base);
    }

    #[test]
    fn too_few_trials_is_rejected() {
        let fe = Frontend::default_for(crate::frontend::FrontendKind::Mel, 16000.0).unwrap();
        let cfg = ProbeConfig { n_trials: 10, ..ProbeConfig::default() };
        assert!(discrimination_probe(&fe, 50.0, &cfg).is_err());
    }
}
