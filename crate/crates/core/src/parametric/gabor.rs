//! Complex Gabor filterbank with squared-modulus energy, Gaussian pooling
//! and log compression.
//!
//! Filter `j` is `g(t) = exp(i 2 pi eta_j t) exp(-t^2 / (2 sigma_j^2)) / Z_j`
//! on lags `t = -h..=h`, with `Z_j` the L2 norm of the envelope.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::conv::{ConvPlan, Spectrum};
use super::{mel_init_layout, FilterParamsHz, Pooling, DEFAULT_FILTERS, DEFAULT_KERNEL_LEN, LOG_FLOOR};
use crate::error::{domain, Error, Result};
use crate::spectral::{AudioBuffer, FeatureMatrix, FrameSpec};

/// Default Gaussian pooling width in samples (0.4 of the half window at 16 kHz).
pub const DEFAULT_POOLING_WIDTH: f64 = 80.0;

const LN2_SQRT: f64 = 0.832_554_611_157_697_7;
const SURROGATE_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborBank {
    /// Normalised centre frequency per filter, cycles/sample in (0, 0.5).
    pub centers: Vec<f64>,
    /// Gaussian envelope width per filter, in samples.
    pub widths: Vec<f64>,
    pub kernel_len: usize,
    pub pooling_width: f64,
    pub sample_rate: f64,
}

/// Gradient of the loss with respect to one filter's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GaborGrad {
    pub d_center: f64,
    pub d_width: f64,
}

/// `sigma` whose Gaussian has a -3 dB power bandwidth of `bw_hz`.
pub fn width_for_bandwidth(bw_hz: f64, sample_rate: f64) -> f64 {
    LN2_SQRT / (std::f64::consts::PI * bw_hz / sample_rate)
}

pub fn bandwidth_for_width(sigma: f64, sample_rate: f64) -> f64 {
    LN2_SQRT / (std::f64::consts::PI * sigma) * sample_rate
}

impl GaborBank {
    /// 64 filters at 16 kHz with 401-tap kernels, mel-initialised.
    pub fn default_16k() -> Self {
        Self::mel_init(DEFAULT_FILTERS, 16000.0, DEFAULT_KERNEL_LEN, DEFAULT_POOLING_WIDTH)
            .expect("default Gabor layout is valid")
    }

    pub fn mel_init(n_filters: usize, sample_rate: f64, kernel_len: usize, pooling_width: f64) -> Result<Self> {
        let (centers_hz, bws) = mel_init_layout(n_filters, sample_rate)?;
        let bank = Self {
            centers: centers_hz.iter().map(|c| c / sample_rate).collect(),
            widths: bws.iter().map(|&b| width_for_bandwidth(b, sample_rate)).collect(),
            kernel_len,
            pooling_width,
            sample_rate,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn n_filters(&self) -> usize {
        self.centers.len()
    }

    pub fn centers_hz(&self) -> Vec<f64> {
        self.centers.iter().map(|c| c * self.sample_rate).collect()
    }

    pub fn params_hz(&self) -> Vec<FilterParamsHz> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(&c, &s)| FilterParamsHz {
                center_hz: c * self.sample_rate,
                bandwidth_hz: bandwidth_for_width(s, self.sample_rate),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.len() != self.widths.len() || self.centers.is_empty() {
            return Err(Error::Shape("Gabor centers and widths must be non-empty and equal length".into()));
        }
        if self.kernel_len % 2 == 0 {
            return Err(domain(format!("kernel length {} must be odd", self.kernel_len)));
        }
        if let Some((j, c)) = self.centers.iter().enumerate().find(|(_, &c)| !(c > 0.0 && c < 0.5)) {
            return Err(domain(format!("Gabor filter {j}: normalised center {c} outside (0, 0.5)")));
        }
        if let Some((j, s)) = self.widths.iter().enumerate().find(|(_, &s)| !(s > 0.0 && s.is_finite())) {
            return Err(domain(format!("Gabor filter {j}: width {s} must be positive")));
        }
        if !(self.pooling_width > 0.0) {
            return Err(domain("pooling width must be positive"));
        }
        Ok(())
    }

    fn envelope_stats(&self, j: usize) -> (f64, f64) {
        let h = ((self.kernel_len - 1) / 2) as isize;
        let s = self.widths[j];
        let (mut sum, mut dsum) = (0.0, 0.0);
        for t in -h..=h {
            let t2 = (t * t) as f64;
            let e = (-t2 / (s * s)).exp();
            sum += e;
            dsum += e * t2 / (s * s * s);
        }
        // Z = sqrt(sum); Z'/Z = dsum / sum
        (sum.sqrt(), dsum / sum)
    }

    /// Time-domain taps of filter `j`.
    pub fn kernel(&self, j: usize) -> Vec<Complex64> {
        let h = ((self.kernel_len - 1) / 2) as isize;
        let (z, _) = self.envelope_stats(j);
        let (eta, s) = (self.centers[j], self.widths[j]);
        (-h..=h)
            .map(|t| {
                let tf = t as f64;
                let env = (-tf * tf / (2.0 * s * s)).exp() / z;
                Complex64::from_polar(env, 2.0 * std::f64::consts::PI * eta * tf)
            })
            .collect()
    }

    /// Unconstrained coordinates: `logit(2 eta)` and `ln sigma` per filter.
    pub fn surrogates(&self) -> (Vec<f64>, Vec<f64>) {
        let a = self.centers.iter().map(|&c| {
            let s = 2.0 * c;
            (s / (1.0 - s)).ln()
        });
        (a.collect(), self.widths.iter().map(|s| s.ln()).collect())
    }

    /// Sets parameters from surrogates; clamping keeps `eta` strictly inside
    /// (0, 0.5) and `sigma` finite and positive for any input.
    pub fn set_surrogates(&mut self, a: &[f64], b: &[f64]) -> Result<()> {
        if a.len() != self.n_filters() || b.len() != self.n_filters() {
            return Err(Error::Shape(format!("{} / {} surrogates for {} filters", a.len(), b.len(), self.n_filters())));
        }
        for j in 0..self.n_filters() {
            let aj = if a[j].is_nan() { 0.0 } else { a[j].clamp(-SURROGATE_CLAMP, SURROGATE_CLAMP) };
            let bj = if b[j].is_nan() { 0.0 } else { b[j].clamp(-SURROGATE_CLAMP, SURROGATE_CLAMP) };
            self.centers[j] = 0.5 / (1.0 + (-aj).exp());
            self.widths[j] = bj.exp();
        }
        Ok(())
    }

    /// Surrogate-space gradients from parameter gradients.
    pub fn surrogate_grads(&self, grads: &[GaborGrad]) -> (Vec<f64>, Vec<f64>) {
        let da = grads
            .iter()
            .zip(&self.centers)
            .map(|(g, &c)| {
                // eta = 0.5 s(a), d eta / d a = 2 eta (0.5 - eta)
                g.d_center * 2.0 * c * (0.5 - c)
            })
            .collect();
        let db = grads.iter().zip(&self.widths).map(|(g, &s)| g.d_width * s).collect();
        (da, db)
    }

    /// One plain gradient step of size `learn_rate` in surrogate space.
    pub fn step(&mut self, grads: &[GaborGrad], learn_rate: f64) -> Result<()> {
        if grads.len() != self.n_filters() {
            return Err(Error::Shape(format!("{} grads for {} filters", grads.len(), self.n_filters())));
        }
        if learn_rate == 0.0 {
            return Ok(());
        }
        let (mut a, mut b) = self.surrogates();
        let (da, db) = self.surrogate_grads(grads);
        for j in 0..a.len() {
            a[j] -= learn_rate * da[j];
            b[j] -= learn_rate * db[j];
        }
        self.set_surrogates(&a, &b)
    }

    /// Precomputes kernels and their spectra for signals of `n_samples`.
    pub fn plan(&self, n_samples: usize, hop_ms: f64) -> Result<GaborPlan> {
        self.validate()?;
        let frame = FrameSpec { hop_ms, ..FrameSpec::default() };
        frame.validate(self.sample_rate)?;
        if frame.n_frames(n_samples, self.sample_rate) == 0 {
            return Err(Error::EmptyInput(format!("{n_samples} samples is shorter than one frame")));
        }
        let conv = ConvPlan::new(n_samples, self.kernel_len);
        let kernels: Vec<Vec<Complex64>> = (0..self.n_filters()).map(|j| self.kernel(j)).collect();
        let spectra = kernels.iter().map(|k| conv.kernel_spectrum(k)).collect();
        Ok(GaborPlan {
            pooling: Pooling::gaussian(&frame, n_samples, self.sample_rate, self.pooling_width),
            conv,
            kernels,
            spectra,
            frame,
            bank: self.clone(),
        })
    }
}

/// A Gabor bank bound to a signal length.
pub struct GaborPlan {
    conv: ConvPlan,
    kernels: Vec<Vec<Complex64>>,
    spectra: Vec<Spectrum>,
    pooling: Pooling,
    frame: FrameSpec,
    bank: GaborBank,
}

struct Forward {
    signal: Spectrum,
    /// Per filter: complex filter output.
    outputs: Vec<Vec<Complex64>>,
    /// Per filter: pooled energy per frame.
    pooled: Vec<Vec<f64>>,
}

impl GaborPlan {
    pub fn bank(&self) -> &GaborBank {
        &self.bank
    }

    fn check(&self, audio: &AudioBuffer) -> Result<()> {
        if audio.len() != self.conv.n {
            return Err(Error::Shape(format!("plan built for {} samples, got {}", self.conv.n, audio.len())));
        }
        if (audio.sample_rate() - self.bank.sample_rate).abs() > 1e-9 {
            return Err(domain("audio sample rate does not match the bank"));
        }
        Ok(())
    }

    fn forward(&self, audio: &AudioBuffer) -> Forward {
        let signal = self.conv.signal_spectrum(audio.samples());
        let mut outputs = Vec::with_capacity(self.spectra.len());
        let mut pooled = Vec::with_capacity(self.spectra.len());
        for spec in &self.spectra {
            let y = self.conv.convolve(&signal, spec);
            let p: Vec<f64> = y.iter().map(|c| c.norm_sqr()).collect();
            pooled.push(self.pooling.pool(&p));
            outputs.push(y);
        }
        Forward { signal, outputs, pooled }
    }

    fn features_from(&self, fwd: &Forward) -> Result<FeatureMatrix<f64>> {
        let rows = self.pooling.n_frames();
        let cols = self.spectra.len();
        let mut values = vec![0.0; rows * cols];
        for (j, col) in fwd.pooled.iter().enumerate() {
            for (t, &e) in col.iter().enumerate() {
                values[t * cols + j] = e.max(LOG_FLOOR).ln();
            }
        }
        FeatureMatrix::new(values, rows, cols, self.frame, self.bank.centers_hz())
    }

    pub fn response(&self, audio: &AudioBuffer) -> Result<FeatureMatrix<f64>> {
        self.check(audio)?;
        self.features_from(&self.forward(audio))
    }

    /// Features and per-filter gradients in one pass.
    pub fn response_and_grads(
        &self,
        audio: &AudioBuffer,
        loss_grad: impl FnOnce(&FeatureMatrix<f64>) -> FeatureMatrix<f64>,
    ) -> Result<(FeatureMatrix<f64>, Vec<GaborGrad>)> {
        self.check(audio)?;
        let fwd = self.forward(audio);
        let feats = self.features_from(&fwd)?;
        let g = loss_grad(&feats);
        let grads = self.backward(&fwd, &g)?;
        Ok((feats, grads))
    }

    pub fn grads(&self, audio: &AudioBuffer, loss_grad: &FeatureMatrix<f64>) -> Result<Vec<GaborGrad>> {
        self.check(audio)?;
        let fwd = self.forward(audio);
        self.backward(&fwd, loss_grad)
    }

    fn backward(&self, fwd: &Forward, loss_grad: &FeatureMatrix<f64>) -> Result<Vec<GaborGrad>> {
        let rows = self.pooling.n_frames();
        let cols = self.spectra.len();
        if loss_grad.rows() != rows || loss_grad.cols() != cols {
            return Err(Error::Shape(format!(
                "loss gradient is {}x{}, features are {rows}x{cols}",
                loss_grad.rows(),
                loss_grad.cols()
            )));
        }
        let h = self.conv.half as isize;
        let n = self.conv.n;
        let mut grads = Vec::with_capacity(cols);
        for j in 0..cols {
            let go: Vec<f64> = (0..rows)
                .map(|t| {
                    let e = fwd.pooled[j][t];
                    if e > LOG_FLOOR {
                        loss_grad.get(t, j) / e
                    } else {
                        0.0
                    }
                })
                .collect();
            if go.iter().all(|&v| v == 0.0) {
                grads.push(GaborGrad::default());
                continue;
            }
            let q = self.pooling.adjoint(&go, n);
            let u: Vec<Complex64> = q.iter().zip(&fwd.outputs[j]).map(|(&q, y)| y.conj() * q).collect();
            let c = self.conv.correlate(&u, &fwd.signal);
            let sigma = self.bank.widths[j];
            let (_, zr) = self.bank.envelope_stats(j);
            let (mut d_eta, mut d_sigma) = (0.0, 0.0);
            for (idx, (g, cv)) in self.kernels[j].iter().zip(&c).enumerate() {
                let t = (idx as isize - h) as f64;
                let gc = g * cv;
                // d g / d eta = i 2 pi t g
                d_eta += -2.0 * std::f64::consts::PI * t * gc.im;
                d_sigma += (t * t / (sigma * sigma * sigma) - zr) * gc.re;
            }
            grads.push(GaborGrad { d_center: 2.0 * d_eta, d_width: 2.0 * d_sigma });
        }
        Ok(grads)
    }
}

/// Log-energy features of a Gabor bank on the `hop_ms` grid.
pub fn gabor_response(bank: &GaborBank, audio: &AudioBuffer, hop_ms: f64) -> Result<FeatureMatrix<f64>> {
    bank.plan(audio.len(), hop_ms)?.response(audio)
}

/// Gradient of `sum(loss_grad * features)` with respect to each filter's
/// normalised centre and width. The hop is taken from `loss_grad.frame_spec`.
pub fn gabor_param_grads(bank: &GaborBank, audio: &AudioBuffer, loss_grad: &FeatureMatrix<f64>) -> Result<Vec<GaborGrad>> {
    bank.plan(audio.len(), loss_grad.frame_spec.hop_ms)?.grads(audio, loss_grad)
}
