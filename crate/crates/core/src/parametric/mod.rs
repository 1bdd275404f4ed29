//! Learnable time-domain filterbanks: complex Gabor (LEAF-style) and
//! band-pass sinc (SincNet-style).
//!
//! Both banks expose forward features on the STFT hop grid and analytic
//! gradients of a downstream loss with respect to their per-filter
//! parameters. [`adapt`] trains a Gabor bank on a toy tone task.

pub mod adapt;
pub(crate) mod conv;
pub mod gabor;
pub mod sinc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scales::{mel_resolution_derivative, FrequencyWarp};
use crate::spectral::FrameSpec;

pub use adapt::{adapt_toy, AdaptConfig, AdaptOutcome, Optimizer, ToneTask};
pub use gabor::{gabor_param_grads, gabor_response, GaborBank, GaborGrad};
pub use sinc::{sinc_param_grads, sinc_response, SincBank, SincGrad};

pub const DEFAULT_FILTERS: usize = 64;
/// 25 ms at 16 kHz, rounded up to odd.
pub const DEFAULT_KERNEL_LEN: usize = 401;
pub const INIT_LOW_HZ: f64 = 60.0;
pub const INIT_HIGH_FRACTION_OF_NYQUIST: f64 = 0.95;
pub const LOG_FLOOR: f64 = 1e-10;

/// Mel-spaced initial centres over `[60 Hz, 0.95 * Nyquist]` and the local
/// mel bandwidth (centre spacing in Hz) at each.
pub fn mel_init_layout(n_filters: usize, sample_rate: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mel = FrequencyWarp::mel();
    let hi = INIT_HIGH_FRACTION_OF_NYQUIST * 0.5 * sample_rate;
    if n_filters < 2 {
        return Err(domain("parametric banks need at least two filters"));
    }
    let centers = mel.spaced_hz(INIT_LOW_HZ, hi, n_filters)?;
    let step = (mel.forward(hi)? - mel.forward(INIT_LOW_HZ)?) / (n_filters - 1) as f64;
    let bws = centers
        .iter()
        .map(|&c| Ok(mel_resolution_derivative(mel.forward(c)?) * step))
        .collect::<Result<Vec<_>>>()?;
    Ok((centers, bws))
}

/// Per-filter parameters in physical units, for serialisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParamsHz {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
}

/// Weighted decimation from sample rate to the frame grid.
#[derive(Debug, Clone)]
pub(crate) struct Pooling {
    offsets: Vec<isize>,
    weights: Vec<f64>,
    centers: Vec<usize>,
}

impl Pooling {
    fn centers(frame: &FrameSpec, n_samples: usize, sample_rate: f64) -> Vec<usize> {
        (0..frame.n_frames(n_samples, sample_rate))
            .map(|t| frame.frame_center(t, sample_rate))
            .collect()
    }

    /// Normalised Gaussian of standard deviation `width` over the frame window.
    pub fn gaussian(frame: &FrameSpec, n_samples: usize, sample_rate: f64, width: f64) -> Self {
        let win = frame.window_samples(sample_rate);
        let half = (win / 2) as isize;
        let offsets: Vec<isize> = (-half..=half).collect();
        let mut weights: Vec<f64> = offsets
            .iter()
            .map(|&u| (-(u as f64).powi(2) / (2.0 * width * width)).exp())
            .collect();
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        Self { offsets, weights, centers: Self::centers(frame, n_samples, sample_rate) }
    }

    /// Mean over the frame window `[t * hop, t * hop + win)`.
    pub fn boxcar(frame: &FrameSpec, n_samples: usize, sample_rate: f64) -> Self {
        let win = frame.window_samples(sample_rate);
        let half = (win / 2) as isize;
        let offsets: Vec<isize> = (-half..win as isize - half).collect();
        let weights = vec![1.0 / win as f64; win];
        Self { offsets, weights, centers: Self::centers(frame, n_samples, sample_rate) }
    }

    pub fn n_frames(&self) -> usize {
        self.centers.len()
    }

    pub fn pool(&self, p: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .map(|&c| {
                self.offsets
                    .iter()
                    .zip(&self.weights)
                    .map(|(&o, &w)| {
                        let i = c as isize + o;
                        if i >= 0 && (i as usize) < p.len() {
                            w * p[i as usize]
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }

    pub fn adjoint(&self, g: &[f64], n: usize) -> Vec<f64> {
        let mut q = vec![0.0; n];
        for (&c, &gm) in self.centers.iter().zip(g) {
            if gm == 0.0 {
                continue;
            }
            for (&o, &w) in self.offsets.iter().zip(&self.weights) {
                let i = c as isize + o;
                if i >= 0 && (i as usize) < n {
                    q[i as usize] += w * gm;
                }
            }
        }
        q
    }
}

/// Share of filter centres inside a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationStat {
    pub band_lo: f64,
    pub band_hi: f64,
    pub fraction: f64,
    pub n_in_band: usize,
    pub n_filters: usize,
}

/// Counts centres in `[band_lo, band_hi]` inclusive.
pub fn allocation_fraction(centers_hz: &[f64], band_lo: f64, band_hi: f64) -> Result<AllocationStat> {
    if !(band_lo < band_hi) {
        return Err(domain(format!("band [{band_lo}, {band_hi}] is empty")));
    }
    let n_in_band = centers_hz.iter().filter(|&&c| c >= band_lo && c <= band_hi).count();
    let fraction = if centers_hz.is_empty() { 0.0 } else { n_in_band as f64 / centers_hz.len() as f64 };
    Ok(AllocationStat { band_lo, band_hi, fraction, n_in_band, n_filters: centers_hz.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbanks::TriangularBank;

    #[test]
    fn allocation_edge_cases() {
        assert_eq!(allocation_fraction(&[100.0, 200.0], 80.0, 500.0).unwrap().fraction, 1.0);
        assert_eq!(allocation_fraction(&[600.0, 900.0], 80.0, 500.0).unwrap().fraction, 0.0);
        assert!(allocation_fraction(&[1.0], 500.0, 80.0).is_err());
        let s = allocation_fraction(&[80.0, 500.0, 501.0, 79.9], 80.0, 500.0).unwrap();
        assert_eq!(s.n_in_band, 2);
        assert_eq!(s.fraction, s.n_in_band as f64 / s.n_filters as f64);
    }

    #[test]
    fn mel_half_band_bank_allocation() {
        // 40 filters over 0-4000 Hz put 9 centres (22.5%) in 80-500 Hz
        let bank = TriangularBank::<f64>::new(FrequencyWarp::mel(), 40, 0.0, 4000.0, 257, 16000.0).unwrap();
        let mel = FrequencyWarp::mel();
        let oracle_step = mel.forward(4000.0f64).unwrap() / 41.0;
        let oracle_count = (1..=40)
            .filter(|&k| {
                let f = mel.inverse(oracle_step * k as f64).unwrap();
                (80.0..=500.0).contains(&f)
            })
            .count();
        let s = allocation_fraction(&bank.centers_hz(), 80.0, 500.0).unwrap();
        assert_eq!(s.n_in_band, oracle_count);
        assert!((0.225..=0.23).contains(&s.fraction), "{}", s.fraction);
    }

    #[test]
    fn pooling_adjoint_identity() {
        let frame = FrameSpec::default();
        for pool in [Pooling::gaussian(&frame, 1000, 16000.0, 80.0), Pooling::boxcar(&frame, 1000, 16000.0)] {
            let p: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
            let g: Vec<f64> = (0..pool.n_frames()).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
            let lhs: f64 = pool.pool(&p).iter().zip(&g).map(|(a, b)| a * b).sum();
            let rhs: f64 = pool.adjoint(&g, 1000).iter().zip(&p).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
