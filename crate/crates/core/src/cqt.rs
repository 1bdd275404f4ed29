//! Constant-Q transform by direct time-domain inner products.
//!
//! Bin `k` is centred at `f_min * 2^(k / bins_per_octave)` and uses a Hann
//! window of real-valued length `Q * fs / f_k`, so the ratio of centre
//! frequency to bandwidth is the same for every bin. Frames sit on the same
//! hop grid as the STFT front-ends and the signal is zero-padded at the edges.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::spectral::{AudioBuffer, FeatureMatrix, FrameSpec};

/// C1 in Hz.
pub const DEFAULT_F_MIN: f64 = 32.70;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqtSpec {
    pub f_min: f64,
    pub bins_per_octave: usize,
    pub n_bins: usize,
    pub sample_rate: f64,
    pub hop_ms: f64,
    /// Window length of the STFT front-ends whose frame grid is matched.
    pub align_window_ms: f64,
}

impl Default for CqtSpec {
    fn default() -> Self {
        Self {
            f_min: DEFAULT_F_MIN,
            bins_per_octave: 12,
            n_bins: 84,
            sample_rate: 16000.0,
            hop_ms: 10.0,
            align_window_ms: 25.0,
        }
    }
}

impl CqtSpec {
    pub fn q(&self) -> f64 {
        1.0 / (2f64.powf(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    pub fn center(&self, k: usize) -> f64 {
        self.f_min * 2f64.powf(k as f64 / self.bins_per_octave as f64)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|k| self.center(k)).collect()
    }

    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec { window_ms: self.align_window_ms, hop_ms: self.hop_ms, ..FrameSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins_per_octave == 0 || self.n_bins == 0 {
            return Err(domain("CQT needs at least one bin"));
        }
        if !(self.f_min > 0.0 && self.sample_rate > 0.0) {
            return Err(domain("CQT f_min and sample rate must be positive"));
        }
        let top = self.center(self.n_bins - 1);
        if top >= 0.5 * self.sample_rate {
            return Err(domain(format!("top CQT bin {top:.1} Hz is not below Nyquist")));
        }
        self.frame_spec().validate(self.sample_rate)
    }
}

/// Per-bin complex kernels (conjugated, ready for inner products).
#[derive(Debug, Clone)]
pub struct CqtKernel {
    pub spec: CqtSpec,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    /// Real-valued window length `Q * fs / f_k`.
    pub exact_lengths: Vec<f64>,
}

impl CqtKernel {
    pub fn new(spec: CqtSpec) -> Result<Self> {
        spec.validate()?;
        let q = spec.q();
        let mut re = Vec::with_capacity(spec.n_bins);
        let mut im = Vec::with_capacity(spec.n_bins);
        let mut exact_lengths = Vec::with_capacity(spec.n_bins);
        for k in 0..spec.n_bins {
            let fk = spec.center(k);
            let x = q * spec.sample_rate / fk;
            let n = x.ceil() as usize;
            let mid = (n / 2) as f64;
            let mut kr = Vec::with_capacity(n);
            let mut ki = Vec::with_capacity(n);
            for i in 0..n {
                let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / x).cos();
                let phase = 2.0 * std::f64::consts::PI * fk * (i as f64 - mid) / spec.sample_rate;
                kr.push(w * phase.cos());
                ki.push(-w * phase.sin());
            }
            let norm = kr.iter().chain(&ki).map(|v| v * v).sum::<f64>().sqrt();
            kr.iter_mut().chain(ki.iter_mut()).for_each(|v| *v /= norm);
            re.push(kr);
            im.push(ki);
            exact_lengths.push(x);
        }
        Ok(Self { spec, re, im, exact_lengths })
    }

    pub fn len(&self, k: usize) -> usize {
        self.re[k].len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// Complex kernel sample `n` of bin `k` (not conjugated).
    pub fn sample(&self, k: usize, n: usize) -> (f64, f64) {
        (self.re[k][n], -self.im[k][n])
    }

    /// `|<x around center, kernel_k>|` with zero padding.
    pub fn response_at(&self, x: &[f64], center: usize, k: usize) -> f64 {
        let kr = &self.re[k];
        let ki = &self.im[k];
        let n = kr.len();
        let start = center as isize - (n / 2) as isize;
        let lo = (-start).max(0) as usize;
        let hi = n.min((x.len() as isize - start).max(0) as usize);
        let (mut sr, mut si) = (0.0, 0.0);
        for i in lo..hi {
            let v = x[(start + i as isize) as usize];
            sr += v * kr[i];
            si += v * ki[i];
        }
        (sr * sr + si * si).sqrt()
    }
}

pub fn build_cqt_kernels(spec: &CqtSpec) -> Result<CqtKernel> {
    CqtKernel::new(*spec)
}

pub fn cqt_transform(audio: &AudioBuffer, spec: &CqtSpec) -> Result<FeatureMatrix<f64>> {
    let kernel = CqtKernel::new(*spec)?;
    cqt_transform_with(&kernel, audio)
}

pub fn cqt_transform_with(kernel: &CqtKernel, audio: &AudioBuffer) -> Result<FeatureMatrix<f64>> {
    let spec = &kernel.spec;
    if (audio.sample_rate() - spec.sample_rate).abs() > 1e-9 {
        return Err(domain(format!(
            "audio at {} Hz, CQT configured for {} Hz",
            audio.sample_rate(),
            spec.sample_rate
        )));
    }
    let fs = spec.frame_spec();
    let frames = fs.n_frames(audio.len(), spec.sample_rate);
    if frames == 0 {
        return Err(Error::EmptyInput(format!("audio of {} samples is shorter than one frame", audio.len())));
    }
    let x = audio.samples();
    let mut values = Vec::with_capacity(frames * spec.n_bins);
    for t in 0..frames {
        let c = fs.frame_center(t, spec.sample_rate);
        values.extend((0..spec.n_bins).map(|k| kernel.response_at(x, c, k)));
    }
    FeatureMatrix::new(values, frames, spec.n_bins, fs, spec.centers())
}
