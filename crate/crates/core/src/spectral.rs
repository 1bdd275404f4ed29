//! Audio buffers, framing and short-time power spectra.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Domain(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn nyquist(&self) -> f64 {
        0.5 * self.sample_rate
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFn {
    Hann,
    Hamming,
}

impl WindowFn {
    /// Symmetric-periodic window of `len` samples (periodic form, as used for STFT).
    pub fn coefficients<T: Real>(&self, len: usize) -> Vec<T> {
        let n = T::from_usize_lossy(len);
        (0..len)
            .map(|i| {
                let phase = T::lit(2.0) * T::PI() * T::from_usize_lossy(i) / n;
                match self {
                    WindowFn::Hann => T::lit(0.5) - T::lit(0.5) * phase.cos(),
                    WindowFn::Hamming => T::lit(0.54) - T::lit(0.46) * phase.cos(),
                }
            })
            .collect()
    }
}

/// STFT framing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub window_fn: WindowFn,
    /// FFT length; `None` picks the smallest power of two covering the window.
    pub fft_size: Option<usize>,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            window_ms: 25.0,
            hop_ms: 10.0,
            window_fn: WindowFn::Hann,
            fft_size: None,
        }
    }
}

impl FrameSpec {
    pub fn window_samples(&self, sample_rate: f64) -> usize {
        (self.window_ms * sample_rate / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: f64) -> usize {
        (self.hop_ms * sample_rate / 1000.0).round() as usize
    }

    pub fn fft_len(&self, sample_rate: f64) -> usize {
        self.fft_size
            .unwrap_or_else(|| self.window_samples(sample_rate).max(1).next_power_of_two())
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let win = self.window_samples(sample_rate);
        let hop = self.hop_samples(sample_rate);
        if hop == 0 || self.hop_ms > self.window_ms {
            return Err(Error::Domain(format!(
                "hop must satisfy 0 < hop <= window ({} ms / {} ms)",
                self.hop_ms, self.window_ms
            )));
        }
        if win == 0 {
            return Err(Error::Domain("window is shorter than one sample".into()));
        }
        let fft = self.fft_len(sample_rate);
        if fft < win {
            return Err(Error::Domain(format!("fft size {fft} shorter than window {win}")));
        }
        Ok(())
    }

    /// `floor((n - win) / hop) + 1`, or 0 when shorter than one window.
    pub fn n_frames(&self, n_samples: usize, sample_rate: f64) -> usize {
        let win = self.window_samples(sample_rate);
        let hop = self.hop_samples(sample_rate);
        if n_samples < win || hop == 0 {
            0
        } else {
            (n_samples - win) / hop + 1
        }
    }

    /// Sample index at the middle of frame `t`.
    pub fn frame_center(&self, t: usize, sample_rate: f64) -> usize {
        t * self.hop_samples(sample_rate) + self.window_samples(sample_rate) / 2
    }
}

/// Frames x channels feature matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: Vec<T>,
    rows: usize,
    cols: usize,
    pub frame_spec: FrameSpec,
    /// Center frequency per channel in Hz; empty when not meaningful.
    pub channel_freqs: Vec<f64>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(values: Vec<T>, rows: usize, cols: usize, frame_spec: FrameSpec, channel_freqs: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for {rows}x{cols}", values.len())));
        }
        if !channel_freqs.is_empty() && channel_freqs.len() != cols {
            return Err(Error::Shape(format!("{} channel freqs for {cols} columns", channel_freqs.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("feature matrix contains non-finite values".into()));
        }
        Ok(Self { values, rows, cols, frame_spec, channel_freqs })
    }

    pub fn zeros(rows: usize, cols: usize, frame_spec: FrameSpec, channel_freqs: Vec<f64>) -> Self {
        Self { values: vec![T::zero(); rows * cols], rows, cols, frame_spec, channel_freqs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.values[r * self.cols + c] = v;
    }

    /// Mean over frames, one value per channel.
    pub fn time_average(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.cols];
        for r in 0..self.rows {
            for (a, &v) in acc.iter_mut().zip(self.row(r)) {
                *a = *a + v;
            }
        }
        if self.rows > 0 {
            let n = T::from_usize_lossy(self.rows);
            acc.iter_mut().for_each(|a| *a = *a / n);
        }
        acc
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            rows: self.rows,
            cols: self.cols,
            frame_spec: self.frame_spec,
            channel_freqs: self.channel_freqs.clone(),
        }
    }

    /// Index of the largest value in row `r`.
    pub fn row_argmax(&self, r: usize) -> usize {
        let row = self.row(r);
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        best
    }
}

/// Reusable forward FFT plan for power spectra.
pub struct SpectrumPlan<T: Real> {
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    fft_len: usize,
}

impl<T: Real> SpectrumPlan<T> {
    pub fn new(spec: &FrameSpec, sample_rate: f64) -> Result<Self> {
        spec.validate(sample_rate)?;
        let fft_len = spec.fft_len(sample_rate);
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        Ok(Self {
            fft,
            window: spec.window_fn.coefficients(spec.window_samples(sample_rate)),
            fft_len,
        })
    }
}

/// `|FFT(windowed frame)|^2` over bins `0..=fft/2` for every frame.
pub fn power_spectrogram<T: Real>(audio: &AudioBuffer, spec: &FrameSpec) -> Result<FeatureMatrix<T>> {
    let plan = SpectrumPlan::new(spec, audio.sample_rate())?;
    power_spectrogram_with(&plan, audio, spec)
}

pub fn power_spectrogram_with<T: Real>(
    plan: &SpectrumPlan<T>,
    audio: &AudioBuffer,
    spec: &FrameSpec,
) -> Result<FeatureMatrix<T>> {
    let sr = audio.sample_rate();
    let frames = spec.n_frames(audio.len(), sr);
    if frames == 0 {
        return Err(Error::EmptyInput(format!(
            "audio has {} samples, shorter than one {} ms window",
            audio.len(),
            spec.window_ms
        )));
    }
    let hop = spec.hop_samples(sr);
    let n = plan.fft_len;
    let bins = n / 2 + 1;
    let mut out = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.fft.get_inplace_scratch_len()];
    let x = audio.samples();
    for t in 0..frames {
        let start = t * hop;
        buf.iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        for (i, w) in plan.window.iter().enumerate() {
            buf[i].re = T::lit(x[start + i]) * *w;
        }
        plan.fft.process_with_scratch(&mut buf, &mut scratch);
        out.extend(buf[..bins].iter().map(|c| c.norm_sqr()));
    }
    let freqs = (0..bins).map(|k| k as f64 * sr / n as f64).collect();
    FeatureMatrix::new(out, frames, bins, *spec, freqs)
}
