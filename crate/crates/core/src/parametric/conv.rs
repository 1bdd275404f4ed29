//! FFT-backed "same" convolution and its adjoint correlation, used by both
//! parametric banks.
//!
//! Kernels are odd-length and centred: tap `j` sits at lag `t = j - h` with
//! `h = (len - 1) / 2`. The transform length `m` is at least `n + h + 1`, so
//! circular wrap-around never reaches the retained lags.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) type Spectrum = Vec<Complex64>;

#[derive(Clone)]
pub(crate) struct ConvPlan {
    pub n: usize,
    pub half: usize,
    pub m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl ConvPlan {
    pub fn new(n: usize, kernel_len: usize) -> Self {
        let half = (kernel_len - 1) / 2;
        let m = (n + half + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n,
            half,
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.m as f64;
        buf.iter_mut().for_each(|c| *c *= s);
    }

    pub fn signal_spectrum(&self, x: &[f64]) -> Spectrum {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward(&mut buf);
        buf
    }

    /// Spectrum of a centred kernel placed circularly (lag `t` at `t mod m`).
    pub fn kernel_spectrum(&self, taps: &[Complex64]) -> Spectrum {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        let h = self.half as isize;
        for (j, &v) in taps.iter().enumerate() {
            let t = j as isize - h;
            buf[t.rem_euclid(self.m as isize) as usize] = v;
        }
        self.forward(&mut buf);
        buf
    }

    /// `y[n] = sum_t x[n - t] g(t)` for `n in 0..self.n`.
    pub fn convolve(&self, signal: &Spectrum, kernel: &Spectrum) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = signal.iter().zip(kernel).map(|(a, b)| a * b).collect();
        self.inverse(&mut buf);
        buf.truncate(self.n);
        buf
    }

    /// `c(t) = sum_n u[n] x[n - t]` for lags `t = -h..=h`, returned in tap order.
    pub fn correlate(&self, u: &[Complex64], signal: &Spectrum) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        buf[..u.len()].copy_from_slice(u);
        self.forward(&mut buf);
        // real x: X(-w) = conj(X(w)), so correlation is U * conj(X)
        for (b, s) in buf.iter_mut().zip(signal) {
            *b *= s.conj();
        }
        self.inverse(&mut buf);
        let h = self.half as isize;
        (-h..=h)
            .map(|t| buf[t.rem_euclid(self.m as isize) as usize])
            .collect()
    }
}
