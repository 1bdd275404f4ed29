//! Triangular filterbanks on perceptual scales, log compression and PCEN.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::num::Real;
use crate::scales::FrequencyWarp;
use crate::spectral::FeatureMatrix;

/// Peak-normalised triangular filters sampled on FFT bin frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularBank<T> {
    pub warp: FrequencyWarp,
    pub n_filters: usize,
    pub f_min: T,
    pub f_max: T,
    pub fft_bins: usize,
    pub sample_rate: T,
    /// `n_filters x fft_bins`, row-major.
    weights: Vec<T>,
    /// Nonzero bin range per filter (start inclusive, end exclusive).
    support: Vec<(usize, usize)>,
    pub centers: Vec<T>,
}

impl<T: Real> TriangularBank<T> {
    /// Filter `i` is the triangle over edge points `(i, i+1, i+2)`, where the
    /// `n_filters + 2` edges are equally spaced in warp units over
    /// `[f_min, f_max]`.
    pub fn new(warp: FrequencyWarp, n_filters: usize, f_min: T, f_max: T, fft_bins: usize, sample_rate: T) -> Result<Self> {
        if n_filters == 0 {
            return Err(domain("filterbank needs at least one filter"));
        }
        if fft_bins < 2 {
            return Err(domain("need at least two FFT bins"));
        }
        let nyquist = sample_rate / T::lit(2.0);
        if f_max > nyquist {
            return Err(domain(format!("f_max {f_max} Hz exceeds Nyquist {nyquist} Hz")));
        }
        if !(f_min >= T::zero() && f_min < f_max) {
            return Err(domain(format!("invalid band [{f_min}, {f_max}]")));
        }
        let edges = warp.spaced_hz(f_min, f_max, n_filters + 2)?;
        let fft_len = T::from_usize_lossy(2 * (fft_bins - 1));
        let bin_hz = |k: usize| T::from_usize_lossy(k) * sample_rate / fft_len;
        let mut weights = vec![T::zero(); n_filters * fft_bins];
        let mut support = Vec::with_capacity(n_filters);
        for i in 0..n_filters {
            let (lo, mid, hi) = (edges[i], edges[i + 1], edges[i + 2]);
            let row = &mut weights[i * fft_bins..(i + 1) * fft_bins];
            let mut first = fft_bins;
            let mut last = 0;
            for (k, w) in row.iter_mut().enumerate() {
                let f = bin_hz(k);
                let v = if f > lo && f <= mid {
                    (f - lo) / (mid - lo)
                } else if f > mid && f < hi {
                    (hi - f) / (hi - mid)
                } else {
                    T::zero()
                };
                if v > T::zero() {
                    first = first.min(k);
                    last = k + 1;
                }
                *w = v;
            }
            support.push(if first < last { (first, last) } else { (0, 0) });
        }
        Ok(Self {
            warp,
            n_filters,
            f_min,
            f_max,
            fft_bins,
            sample_rate,
            weights,
            support,
            centers: edges[1..=n_filters].to_vec(),
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn filter(&self, i: usize) -> &[T] {
        &self.weights[i * self.fft_bins..(i + 1) * self.fft_bins]
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.filter(i).iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn centers_hz(&self) -> Vec<f64> {
        self.centers.iter().map(|c| c.as_f64()).collect()
    }
}

/// `out[t, i] = sum_k weights[i, k] * power[t, k]`.
pub fn apply_bank<T: Real>(bank: &TriangularBank<T>, power: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
    if power.cols() != bank.fft_bins {
        return Err(Error::Shape(format!(
            "spectrogram has {} bins, bank expects {}",
            power.cols(),
            bank.fft_bins
        )));
    }
    let mut out = FeatureMatrix::zeros(power.rows(), bank.n_filters, power.frame_spec, bank.centers_hz());
    for t in 0..power.rows() {
        let row = power.row(t);
        let dst = out.row_mut(t);
        for (i, &(a, b)) in bank.support.iter().enumerate() {
            let w = &bank.filter(i)[a..b];
            dst[i] = w.iter().zip(&row[a..b]).fold(T::zero(), |acc, (&w, &p)| acc + w * p);
        }
    }
    Ok(out)
}

pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

/// `ln(max(x, floor))`.
pub fn log_compress<T: Real>(features: &FeatureMatrix<T>, floor: T) -> Result<FeatureMatrix<T>> {
    if !(floor > T::zero()) {
        return Err(domain("log floor must be positive"));
    }
    if let Some(v) = features.values().iter().find(|v| **v < T::zero()) {
        return Err(domain(format!("log compression of negative value {v}")));
    }
    Ok(features.map(|v| v.max(floor).ln()))
}

/// Per-channel energy normalisation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcenParams {
    /// Smoother coefficient `s` in (0, 1].
    pub smoother: f64,
    /// Gain exponent in [0, 1].
    pub alpha: f64,
    /// Offset >= 0.
    pub delta: f64,
    /// Root exponent in (0, 1].
    pub r: f64,
    /// Stabiliser > 0.
    pub epsilon: f64,
}

impl Default for PcenParams {
    fn default() -> Self {
        Self { smoother: 0.04, alpha: 0.96, delta: 2.0, r: 0.5, epsilon: 1e-6 }
    }
}

impl PcenParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.smoother > 0.0
            && self.smoother <= 1.0
            && (0.0..=1.0).contains(&self.alpha)
            && self.delta >= 0.0
            && self.r > 0.0
            && self.r <= 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(domain(format!("PCEN parameters out of range: {self:?}")))
        }
    }
}

/// `M[t] = (1-s) M[t-1] + s E[t]`, `M[0] = E[0]`;
/// `out = (E / (eps + M)^alpha + delta)^r - delta^r`.
pub fn pcen<T: Real>(features: &FeatureMatrix<T>, params: &PcenParams) -> Result<FeatureMatrix<T>> {
    params.validate()?;
    if let Some(v) = features.values().iter().find(|v| **v < T::zero()) {
        return Err(domain(format!("PCEN of negative energy {v}")));
    }
    let s = T::lit(params.smoother);
    let alpha = T::lit(params.alpha);
    let delta = T::lit(params.delta);
    let r = T::lit(params.r);
    let eps = T::lit(params.epsilon);
    let delta_r = delta.powf(r);
    let mut out = features.clone();
    for c in 0..features.cols() {
        let mut m = T::zero();
        for t in 0..features.rows() {
            let e = features.get(t, c);
            m = if t == 0 { e } else { (T::one() - s) * m + s * e };
            let v = (e / (eps + m).powf(alpha) + delta).powf(r) - delta_r;
            out.set(t, c, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{power_spectrogram, AudioBuffer, FrameSpec};

    fn mel40() -> TriangularBank<f64> {
        TriangularBank::new(FrequencyWarp::mel(), 40, 0.0, 8000.0, 257, 16000.0).unwrap()
    }

    fn flat(rows: usize, cols: usize, v: f64) -> FeatureMatrix<f64> {
        FeatureMatrix::new(vec![v; rows * cols], rows, cols, FrameSpec::default(), vec![]).unwrap()
    }

    #[test]
    fn mel_center_spacing_is_constant() {
        let bank = mel40();
        let mel = FrequencyWarp::mel();
        let m: Vec<f64> = bank.centers.iter().map(|&c| mel.forward(c).unwrap()).collect();
        // oracle for the spacing: 2595*log10(1 + 8000/700) / 41
        let oracle = 2595.0 * (1.0f64 + 8000.0 / 700.0).log10() / 41.0;
        assert!((oracle - 69.27).abs() < 0.01);
        for w in m.windows(2) {
            assert!(((w[1] - w[0]) - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn single_filter_peaks_at_warp_midpoint() {
        let bank = TriangularBank::new(FrequencyWarp::mel(), 1, 0.0, 8000.0, 257, 16000.0).unwrap();
        let mel = FrequencyWarp::mel();
        let mid = mel.inverse(0.5 * mel.forward(8000.0f64).unwrap()).unwrap();
        assert!((bank.centers[0] - mid).abs() < 1e-9);
    }

    #[test]
    fn f_max_above_nyquist_is_rejected() {
        assert!(TriangularBank::new(FrequencyWarp::mel(), 40, 0.0, 9000.0, 257, 16000.0f64).is_err());
    }

    #[test]
    fn rows_are_nonnegative_unimodal_and_in_band() {
        for bank in [
            mel40(),
            TriangularBank::new(FrequencyWarp::erb(), 32, 0.0, 8000.0, 257, 16000.0).unwrap(),
            TriangularBank::new(FrequencyWarp::bark(), 24, 0.0, 8000.0, 257, 16000.0).unwrap(),
        ] {
            for i in 0..bank.n_filters {
                let row = bank.filter(i);
                assert!(row.iter().all(|&w| w >= 0.0));
                assert!(bank.row_sum(i) > 0.0, "empty filter {i}");
                let peak = (0..row.len()).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
                assert!(row[..=peak].windows(2).all(|w| w[0] <= w[1]));
                assert!(row[peak..].windows(2).all(|w| w[0] >= w[1]));
            }
            assert!(bank.centers.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn interior_bins_partition_to_at_most_one() {
        let bank = mel40();
        let first = bank.centers[0];
        let last = bank.centers[39];
        for k in 0..257 {
            let f = k as f64 * 16000.0 / 512.0;
            if f > first && f < last {
                let s: f64 = (0..40).map(|i| bank.filter(i)[k]).sum();
                assert!(s > 0.0 && s <= 1.0001, "bin {k}: {s}");
            }
        }
    }

    #[test]
    fn allocation_under_full_band_convention() {
        // 80-500 Hz holds about 17% of a 40-filter 0-8000 Hz mel bank
        let bank = mel40();
        let n = bank.centers.iter().filter(|&&c| (80.0..=500.0).contains(&c)).count();
        assert_eq!(n, 7);
        assert!((n as f64 / 40.0 - 0.17).abs() < 0.01);
    }

    #[test]
    fn flat_spectrum_gives_row_sums() {
        let bank = mel40();
        let out = apply_bank(&bank, &flat(3, 257, 2.5)).unwrap();
        for t in 0..3 {
            for i in 0..40 {
                assert!((out.get(t, i) - 2.5 * bank.row_sum(i)).abs() < 1e-12);
            }
        }
        let zero = apply_bank(&bank, &flat(2, 257, 0.0)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert!(apply_bank(&bank, &flat(2, 256, 0.0)).is_err());
    }

    #[test]
    fn tone_at_center_selects_its_filter() {
        let bank = mel40();
        for i in 2..40 {
            let f = bank.centers[i];
            let x: Vec<f64> = (0..3200).map(|n| (2.0 * std::f64::consts::PI * f * n as f64 / 16000.0).sin()).collect();
            let spec = power_spectrogram::<f64>(&AudioBuffer::new(x, 16000.0).unwrap(), &FrameSpec::default()).unwrap();
            let out = apply_bank(&bank, &spec).unwrap();
            assert_eq!(out.row_argmax(5), i, "filter {i} at {f} Hz");
        }
    }

    #[test]
    fn log_compress_floor_and_identity() {
        let m = FeatureMatrix::new(vec![1.0, 0.0, 5.0, 7.0], 2, 2, FrameSpec::default(), vec![]).unwrap();
        let out = log_compress(&m, DEFAULT_LOG_FLOOR).unwrap();
        assert_eq!(out.get(0, 0), 0.0);
        assert_eq!(out.get(0, 1), (1e-10f64).ln());
        assert!(out.get(1, 0) <= out.get(1, 1));
        let neg = FeatureMatrix::new(vec![-1.0], 1, 1, FrameSpec::default(), vec![]).unwrap();
        assert!(log_compress(&neg, 1e-10).is_err());
    }

    #[test]
    fn pcen_steady_state_closed_form() {
        let e = 50.0;
        let p = PcenParams { delta: 0.0, r: 1.0, ..PcenParams::default() };
        let n = (5.0 / p.smoother) as usize + 1;
        let out = pcen(&flat(n, 2, e), &p).unwrap();
        let expected = e.powf(1.0 - p.alpha);
        assert!((out.get(n - 1, 0) - expected).abs() / expected < 0.01);
        // gain k changes the steady state by k^(1 - alpha)
        let k = 10.0;
        let out_k = pcen(&flat(n, 2, e * k), &p).unwrap();
        let ratio = out_k.get(n - 1, 1) / out.get(n - 1, 1);
        assert!((ratio - k.powf(0.04)).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn pcen_maps_zero_to_zero() {
        let out = pcen(&flat(10, 3, 0.0), &PcenParams::default()).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pcen_rejects_bad_params() {
        let bad = PcenParams { smoother: 0.0, ..PcenParams::default() };
        assert!(pcen(&flat(1, 1, 1.0), &bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn apply_bank_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0,
                                    x in proptest::collection::vec(0.0f64..10.0, 257 * 2),
                                    y in proptest::collection::vec(0.0f64..10.0, 257 * 2)) {
                let bank = mel40();
                let mx = FeatureMatrix::new(x.clone(), 2, 257, FrameSpec::default(), vec![]).unwrap();
                let my = FeatureMatrix::new(y.clone(), 2, 257, FrameSpec::default(), vec![]).unwrap();
                let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
                let mc = FeatureMatrix::new(combo, 2, 257, FrameSpec::default(), vec![]).unwrap();
                let (ox, oy, oc) = (apply_bank(&bank, &mx).unwrap(), apply_bank(&bank, &my).unwrap(), apply_bank(&bank, &mc).unwrap());
                for i in 0..oc.values().len() {
                    let lin = a * ox.values()[i] + b * oy.values()[i];
                    let scale = ox.values()[i].abs().max(oy.values()[i].abs()).max(1.0);
                    prop_assert!((oc.values()[i] - lin).abs() <= 1e-9 * scale);
                }
            }

            #[test]
            fn pcen_is_finite_and_deterministic(v in proptest::collection::vec(0.0f64..1e6, 40 * 20)) {
                let m = FeatureMatrix::new(v, 20, 40, FrameSpec::default(), vec![]).unwrap();
                let a = pcen(&m, &PcenParams::default()).unwrap();
                let b = pcen(&m, &PcenParams::default()).unwrap();
                prop_assert!(a.values().iter().all(|x| x.is_finite()));
                prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}
