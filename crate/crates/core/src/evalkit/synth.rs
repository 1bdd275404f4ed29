//! Harmonic tone stimuli with controlled F0 contours and white noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::spectral::AudioBuffer;

/// Spacing of F0 contour points.
pub const CONTOUR_STEP_S: f64 = 0.010;
pub const PEAK_LEVEL: f64 = 0.9;

/// Sums `harmonics` equal-amplitude partials that follow `f0_contour`
/// (one point per 10 ms, linearly interpolated, held after the last point),
/// adds white Gaussian noise at `snr_db` (`f64::INFINITY` for none) and
/// peak-normalises to 0.9. Initial partial phases are drawn from `seed`.
pub fn synth_tone_clip(
    f0_contour: &[f64],
    harmonics: usize,
    snr_db: f64,
    dur_s: f64,
    seed: u64,
    sample_rate: f64,
) -> Result<AudioBuffer> {
    if f0_contour.is_empty() {
        return Err(Error::EmptyInput("F0 contour is empty".into()));
    }
    if harmonics == 0 {
        return Err(domain("need at least one harmonic"));
    }
    let n = (dur_s * sample_rate).round() as usize;
    if !(dur_s > 0.0) || n == 0 {
        return Err(Error::EmptyInput(format!("clip duration {dur_s} s has no samples")));
    }
    let nyq = 0.5 * sample_rate;
    for &f in f0_contour {
        if !(f > 0.0 && f.is_finite()) {
            return Err(domain(format!("F0 contour value {f} must be positive")));
        }
        if f * harmonics as f64 >= nyq {
            return Err(domain(format!("harmonic {harmonics} of {f} Hz reaches Nyquist {nyq} Hz")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases0: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let f0_at = |t: f64| {
        let pos = t / CONTOUR_STEP_S;
        let i = pos.floor() as usize;
        if i + 1 >= f0_contour.len() {
            *f0_contour.last().unwrap()
        } else {
            let a = pos - i as f64;
            f0_contour[i] * (1.0 - a) + f0_contour[i + 1] * a
        }
    };
    let mut phase = 0.0;
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        let s: f64 = phases0
            .iter()
            .enumerate()
            .map(|(h, p0)| (p0 + (h + 1) as f64 * phase).sin())
            .sum();
        clean.push(s / harmonics as f64);
        phase += std::f64::consts::TAU * f0_at(i as f64 / sample_rate) / sample_rate;
    }
    let mut out = clean;
    if snr_db.is_finite() {
        let power = out.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let sd = (power / 10f64.powf(snr_db / 10.0)).sqrt();
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= PEAK_LEVEL / peak);
    }
    AudioBuffer::new(out, sample_rate)
}

/// Constant contour covering `dur_s`.
pub fn flat_contour(f0: f64, dur_s: f64) -> Vec<f64> {
    vec![f0; (dur_s / CONTOUR_STEP_S).ceil() as usize + 1]
}

/// Linear glide from `from` to `to` over `dur_s`.
pub fn glide_contour(from: f64, to: f64, dur_s: f64) -> Vec<f64> {
    let n = (dur_s / CONTOUR_STEP_S).ceil() as usize + 1;
    (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{power_spectrogram, FeatureMatrix, FrameSpec};

    #[test]
    fn flat_tone_has_harmonic_peaks() {
        let a = synth_tone_clip(&flat_contour(220.0, 0.3), 3, f64::INFINITY, 0.3, 1, 16000.0).unwrap();
        let fs = FrameSpec { fft_size: Some(4096), ..FrameSpec::default() };
        let s: FeatureMatrix<f64> = power_spectrogram(&a, &fs).unwrap();
        let avg = s.time_average();
        let bin = |f: f64| (f * 4096.0 / 16000.0).round() as usize;
        let local_max = |k: usize| (k - 3..=k + 3).max_by(|&x, &y| avg[x].partial_cmp(&avg[y]).unwrap()).unwrap();
        for h in [220.0, 440.0, 660.0] {
            assert!((local_max(bin(h)) as isize - bin(h) as isize).abs() <= 1, "{h}");
        }
        // nothing comparable at 880 Hz
        assert!(avg[bin(880.0)] < 1e-3 * avg[bin(440.0)]);
        let peak = a.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_length_and_nyquist_errors() {
        assert!(synth_tone_clip(&[220.0], 3, 20.0, 0.0, 1, 16000.0).is_err());
        assert!(synth_tone_clip(&[], 3, 20.0, 0.3, 1, 16000.0).is_err());
        assert!(synth_tone_clip(&[3000.0], 3, 20.0, 0.3, 1, 16000.0).is_err());
    }

    #[test]
    fn same_seed_same_samples() {
        let c = glide_contour(200.0, 300.0, 0.3);
        let a = synth_tone_clip(&c, 3, 20.0, 0.3, 42, 16000.0).unwrap();
        let b = synth_tone_clip(&c, 3, 20.0, 0.3, 42, 16000.0).unwrap();
        let d = synth_tone_clip(&c, 3, 20.0, 0.3, 43, 16000.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }
}
