//! Band-pass sinc filterbank: difference of two low-pass sincs, Hamming
//! windowed and L2-normalised; features are the log of average-pooled `|y|`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::conv::{ConvPlan, Spectrum};
use super::{mel_init_layout, FilterParamsHz, Pooling, DEFAULT_FILTERS, DEFAULT_KERNEL_LEN, LOG_FLOOR};
use crate::error::{domain, Error, Result};
use crate::spectral::{AudioBuffer, FeatureMatrix, FrameSpec};

/// Lower bound on a band-pass width after a parameter update.
pub const MIN_BAND_HZ: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SincBank {
    pub low_hz: Vec<f64>,
    pub band_hz: Vec<f64>,
    pub kernel_len: usize,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SincGrad {
    pub d_low: f64,
    pub d_band: f64,
}

impl SincBank {
    pub fn default_16k() -> Self {
        Self::mel_init(DEFAULT_FILTERS, 16000.0, DEFAULT_KERNEL_LEN).expect("default sinc layout is valid")
    }

    /// Bands centred on the mel-spaced layout, each one local mel bandwidth wide.
    pub fn mel_init(n_filters: usize, sample_rate: f64, kernel_len: usize) -> Result<Self> {
        let (centers, bws) = mel_init_layout(n_filters, sample_rate)?;
        let nyq = 0.5 * sample_rate;
        let low_hz: Vec<f64> = centers.iter().zip(&bws).map(|(c, b)| (c - 0.5 * b).max(0.0)).collect();
        let band_hz = low_hz.iter().zip(&bws).map(|(l, b)| b.min(nyq - l)).collect();
        let bank = Self { low_hz, band_hz, kernel_len, sample_rate };
        bank.validate()?;
        Ok(bank)
    }

    pub fn n_filters(&self) -> usize {
        self.low_hz.len()
    }

    pub fn centers_hz(&self) -> Vec<f64> {
        self.low_hz.iter().zip(&self.band_hz).map(|(l, b)| l + 0.5 * b).collect()
    }

    pub fn params_hz(&self) -> Vec<FilterParamsHz> {
        self.centers_hz()
            .into_iter()
            .zip(&self.band_hz)
            .map(|(center_hz, &bandwidth_hz)| FilterParamsHz { center_hz, bandwidth_hz })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.low_hz.len() != self.band_hz.len() || self.low_hz.is_empty() {
            return Err(Error::Shape("sinc low cuts and bandwidths must be non-empty and equal length".into()));
        }
        if self.kernel_len % 2 == 0 {
            return Err(domain(format!("kernel length {} must be odd", self.kernel_len)));
        }
        let nyq = 0.5 * self.sample_rate;
        for (j, (&l, &b)) in self.low_hz.iter().zip(&self.band_hz).enumerate() {
            if !(l >= 0.0 && b > 0.0 && l + b <= nyq * (1.0 + 1e-12)) {
                return Err(domain(format!("sinc filter {j}: band [{l}, {}] Hz not within [0, {nyq}]", l + b)));
            }
        }
        Ok(())
    }

    fn window(&self) -> Vec<f64> {
        let l = self.kernel_len;
        (0..l)
            .map(|j| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * j as f64 / (l - 1) as f64).cos())
            .collect()
    }

    /// Unnormalised taps and their derivatives with respect to the
    /// normalised cut-offs `f1`, `f2`.
    fn raw(&self, j: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = ((self.kernel_len - 1) / 2) as isize;
        let f1 = self.low_hz[j] / self.sample_rate;
        let f2 = (self.low_hz[j] + self.band_hz[j]) / self.sample_rate;
        let w = self.window();
        let pi = std::f64::consts::PI;
        let lp = |f: f64, t: f64| if t == 0.0 { 2.0 * f } else { (2.0 * pi * f * t).sin() / (pi * t) };
        let mut r = Vec::with_capacity(self.kernel_len);
        let mut d1 = Vec::with_capacity(self.kernel_len);
        let mut d2 = Vec::with_capacity(self.kernel_len);
        for (idx, t) in (-h..=h).enumerate() {
            let t = t as f64;
            r.push((lp(f2, t) - lp(f1, t)) * w[idx]);
            d1.push(-2.0 * (2.0 * pi * f1 * t).cos() * w[idx]);
            d2.push(2.0 * (2.0 * pi * f2 * t).cos() * w[idx]);
        }
        (r, d1, d2)
    }

    pub fn kernel(&self, j: usize) -> Vec<f64> {
        let (r, _, _) = self.raw(j);
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.into_iter().map(|v| v / norm).collect()
    }

    pub fn plan(&self, n_samples: usize, hop_ms: f64) -> Result<SincPlan> {
        self.validate()?;
        let frame = FrameSpec { hop_ms, ..FrameSpec::default() };
        frame.validate(self.sample_rate)?;
        if frame.n_frames(n_samples, self.sample_rate) == 0 {
            return Err(Error::EmptyInput(format!("{n_samples} samples is shorter than one frame")));
        }
        let conv = ConvPlan::new(n_samples, self.kernel_len);
        let spectra = (0..self.n_filters())
            .map(|j| {
                let taps: Vec<Complex64> = self.kernel(j).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
                conv.kernel_spectrum(&taps)
            })
            .collect();
        Ok(SincPlan {
            pooling: Pooling::boxcar(&frame, n_samples, self.sample_rate),
            conv,
            spectra,
            frame,
            bank: self.clone(),
        })
    }

    /// One gradient step on `ln(low)` and `ln(band)`, then clamps the band
    /// into `[0, Nyquist]`.
    pub fn step(&mut self, grads: &[SincGrad], learn_rate: f64) -> Result<()> {
        if grads.len() != self.n_filters() {
            return Err(Error::Shape(format!("{} grads for {} filters", grads.len(), self.n_filters())));
        }
        let nyq = 0.5 * self.sample_rate;
        for (j, g) in grads.iter().enumerate() {
            let u = self.low_hz[j].max(1e-6).ln() - learn_rate * g.d_low * self.low_hz[j];
            let v = self.band_hz[j].ln() - learn_rate * g.d_band * self.band_hz[j];
            let low = u.clamp(-30.0, 30.0).exp().min(nyq - MIN_BAND_HZ);
            let band = v.clamp(-30.0, 30.0).exp().max(MIN_BAND_HZ).min(nyq - low);
            self.low_hz[j] = low;
            self.band_hz[j] = band;
        }
        Ok(())
    }
}

pub struct SincPlan {
    conv: ConvPlan,
    spectra: Vec<Spectrum>,
    pooling: Pooling,
    frame: FrameSpec,
    bank: SincBank,
}

impl SincPlan {
    fn check(&self, audio: &AudioBuffer) -> Result<()> {
        if audio.len() != self.conv.n {
            return Err(Error::Shape(format!("plan built for {} samples, got {}", self.conv.n, audio.len())));
        }
        if (audio.sample_rate() - self.bank.sample_rate).abs() > 1e-9 {
            return Err(domain("audio sample rate does not match the bank"));
        }
        Ok(())
    }

    fn forward(&self, signal: &Spectrum) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut outputs = Vec::with_capacity(self.spectra.len());
        let mut pooled = Vec::with_capacity(self.spectra.len());
        for spec in &self.spectra {
            let y: Vec<f64> = self.conv.convolve(signal, spec).into_iter().map(|c| c.re).collect();
            let a: Vec<f64> = y.iter().map(|v| v.abs()).collect();
            pooled.push(self.pooling.pool(&a));
            outputs.push(y);
        }
        (outputs, pooled)
    }

    pub fn response(&self, audio: &AudioBuffer) -> Result<FeatureMatrix<f64>> {
        self.check(audio)?;
        let signal = self.conv.signal_spectrum(audio.samples());
        let (_, pooled) = self.forward(&signal);
        let rows = self.pooling.n_frames();
        let cols = self.spectra.len();
        let mut values = vec![0.0; rows * cols];
        for (j, col) in pooled.iter().enumerate() {
            for (t, &e) in col.iter().enumerate() {
                values[t * cols + j] = e.max(LOG_FLOOR).ln();
            }
        }
        FeatureMatrix::new(values, rows, cols, self.frame, self.bank.centers_hz())
    }

    pub fn grads(&self, audio: &AudioBuffer, loss_grad: &FeatureMatrix<f64>) -> Result<Vec<SincGrad>> {
        self.check(audio)?;
        let rows = self.pooling.n_frames();
        let cols = self.spectra.len();
        if loss_grad.rows() != rows || loss_grad.cols() != cols {
            return Err(Error::Shape(format!(
                "loss gradient is {}x{}, features are {rows}x{cols}",
                loss_grad.rows(),
                loss_grad.cols()
            )));
        }
        let signal = self.conv.signal_spectrum(audio.samples());
        let (outputs, pooled) = self.forward(&signal);
        let n = self.conv.n;
        let fs = self.bank.sample_rate;
        let mut grads = Vec::with_capacity(cols);
        for j in 0..cols {
            let go: Vec<f64> = (0..rows)
                .map(|t| {
                    let e = pooled[j][t];
                    if e > LOG_FLOOR {
                        loss_grad.get(t, j) / e
                    } else {
                        0.0
                    }
                })
                .collect();
            if go.iter().all(|&v| v == 0.0) {
                grads.push(SincGrad::default());
                continue;
            }
            let q = self.pooling.adjoint(&go, n);
            let dy: Vec<Complex64> = q
                .iter()
                .zip(&outputs[j])
                .map(|(&q, &y)| Complex64::new(q * y.signum() * (y != 0.0) as u8 as f64, 0.0))
                .collect();
            let c: Vec<f64> = self.conv.correlate(&dy, &signal).into_iter().map(|v| v.re).collect();
            let (r, d1, d2) = self.bank.raw(j);
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            // d(r/|r|) = (dr - h (h . dr)) / |r|
            let through_norm = |dr: &[f64]| -> f64 {
                let h_dr: f64 = r.iter().zip(dr).map(|(a, b)| a * b).sum::<f64>() / norm;
                r.iter()
                    .zip(dr)
                    .zip(&c)
                    .map(|((&rv, &d), &cv)| (d - rv / norm * h_dr) / norm * cv)
                    .sum()
            };
            let g1 = through_norm(&d1);
            let g2 = through_norm(&d2);
            grads.push(SincGrad { d_low: (g1 + g2) / fs, d_band: g2 / fs });
        }
        Ok(grads)
    }
}

pub fn sinc_response(bank: &SincBank, audio: &AudioBuffer, hop_ms: f64) -> Result<FeatureMatrix<f64>> {
    bank.plan(audio.len(), hop_ms)?.response(audio)
}

/// Gradient of `sum(loss_grad * features)` with respect to each filter's
/// low cut-off and bandwidth in Hz.
pub fn sinc_param_grads(bank: &SincBank, audio: &AudioBuffer, loss_grad: &FeatureMatrix<f64>) -> Result<Vec<SincGrad>> {
    bank.plan(audio.len(), loss_grad.frame_spec.hop_ms)?.grads(audio, loss_grad)
}
