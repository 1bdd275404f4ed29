//! Perceptual frequency warps and the resolution-deficit analysis.
//!
//! Supported scales:
//! - Mel: `2595 * log10(1 + f / 700)`
//! - ERB-rate (Glasberg & Moore): `21.4 * log10(1 + 4.37 f / 1000)`
//! - Bark (Zwicker-compatible closed form): `13 atan(0.00076 f) + 3.5 atan((f / 7500)^2)`
//! - Log2: `log2(f / f_ref)`
//!
//! The Bark map has no closed-form inverse; it is inverted by safeguarded
//! Newton iteration.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::num::Real;

const MEL_SCALE: f64 = 2595.0;
const MEL_BREAK_HZ: f64 = 700.0;
const ERB_SCALE: f64 = 21.4;
const ERB_SLOPE_PER_HZ: f64 = 4.37 / 1000.0;
const BARK_LIN: f64 = 0.00076;
const BARK_QUAD_HZ: f64 = 7500.0;

/// Which perceptual scale a [`FrequencyWarp`] implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarpKind {
    Mel,
    #[serde(rename = "erb")]
    ErbRate,
    Bark,
    Log2,
}

impl std::str::FromStr for WarpKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mel" => Ok(WarpKind::Mel),
            "erb" | "erbrate" | "erb-rate" => Ok(WarpKind::ErbRate),
            "bark" => Ok(WarpKind::Bark),
            "log" | "log2" => Ok(WarpKind::Log2),
            other => Err(crate::Error::Config(format!("unknown warp '{other}'"))),
        }
    }
}

/// A strictly increasing map between Hz and a perceptual scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWarp {
    pub kind: WarpKind,
    /// Reference frequency of the Log2 warp (`log2(f_ref) = 0`); unused otherwise.
    pub ref_hz: f64,
}

impl FrequencyWarp {
    pub const fn mel() -> Self {
        Self { kind: WarpKind::Mel, ref_hz: 1.0 }
    }

    pub const fn erb() -> Self {
        Self { kind: WarpKind::ErbRate, ref_hz: 1.0 }
    }

    pub const fn bark() -> Self {
        Self { kind: WarpKind::Bark, ref_hz: 1.0 }
    }

    pub const fn log2(ref_hz: f64) -> Self {
        Self { kind: WarpKind::Log2, ref_hz }
    }

    pub fn from_kind(kind: WarpKind) -> Self {
        Self { kind, ref_hz: 1.0 }
    }

    /// Hz to scale units.
    pub fn forward<T: Real>(&self, f: T) -> Result<T> {
        if !f.is_finite() || f < T::zero() {
            return Err(domain(format!("frequency must be finite and >= 0, got {f}")));
        }
        Ok(match self.kind {
            WarpKind::Mel => T::lit(MEL_SCALE) * (T::one() + f / T::lit(MEL_BREAK_HZ)).log10(),
            WarpKind::ErbRate => T::lit(ERB_SCALE) * (T::one() + T::lit(ERB_SLOPE_PER_HZ) * f).log10(),
            WarpKind::Bark => bark(f),
            WarpKind::Log2 => {
                if f == T::zero() {
                    return Err(domain("log2 warp is undefined at 0 Hz"));
                }
                (f / T::lit(self.ref_hz)).log2()
            }
        })
    }

    /// Scale units to Hz.
    pub fn inverse<T: Real>(&self, v: T) -> Result<T> {
        if !v.is_finite() {
            return Err(domain(format!("scale value must be finite, got {v}")));
        }
        if self.kind != WarpKind::Log2 && v < T::zero() {
            return Err(domain(format!("scale value must be >= 0, got {v}")));
        }
        Ok(match self.kind {
            WarpKind::Mel => T::lit(MEL_BREAK_HZ) * (T::lit(10.0).powf(v / T::lit(MEL_SCALE)) - T::one()),
            WarpKind::ErbRate => (T::lit(10.0).powf(v / T::lit(ERB_SCALE)) - T::one()) / T::lit(ERB_SLOPE_PER_HZ),
            WarpKind::Bark => bark_inverse(v)?,
            WarpKind::Log2 => T::lit(self.ref_hz) * v.exp2(),
        })
    }

    /// `d inverse / dv` at scale value `v`, in Hz per scale unit.
    pub fn inverse_derivative<T: Real>(&self, v: T) -> Result<T> {
        let ln10 = T::LN_10();
        Ok(match self.kind {
            WarpKind::Mel => {
                if v < T::zero() {
                    return Err(domain("mel value must be >= 0"));
                }
                T::lit(MEL_BREAK_HZ) * ln10 / T::lit(MEL_SCALE) * T::lit(10.0).powf(v / T::lit(MEL_SCALE))
            }
            WarpKind::ErbRate => {
                if v < T::zero() {
                    return Err(domain("ERB-rate value must be >= 0"));
                }
                ln10 / (T::lit(ERB_SCALE) * T::lit(ERB_SLOPE_PER_HZ)) * T::lit(10.0).powf(v / T::lit(ERB_SCALE))
            }
            WarpKind::Bark => T::one() / bark_derivative(bark_inverse(v)?),
            WarpKind::Log2 => T::lit(self.ref_hz) * T::LN_2() * v.exp2(),
        })
    }

    /// `n` points equally spaced in scale units from `f_lo` to `f_hi`
    /// inclusive, returned in Hz.
    pub fn spaced_hz<T: Real>(&self, f_lo: T, f_hi: T, n: usize) -> Result<Vec<T>> {
        if n < 2 {
            return Err(domain("need at least two points"));
        }
        let lo = self.forward(f_lo)?;
        let hi = self.forward(f_hi)?;
        let step = (hi - lo) / T::from_usize_lossy(n - 1);
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    Ok(f_hi)
                } else if i == 0 {
                    Ok(f_lo)
                } else {
                    self.inverse(lo + step * T::from_usize_lossy(i))
                }
            })
            .collect()
    }
}

fn bark<T: Real>(f: T) -> T {
    let q = f / T::lit(BARK_QUAD_HZ);
    T::lit(13.0) * (T::lit(BARK_LIN) * f).atan() + T::lit(3.5) * (q * q).atan()
}

fn bark_derivative<T: Real>(f: T) -> T {
    let a = T::lit(BARK_LIN);
    let c = T::lit(BARK_QUAD_HZ);
    let q = f / c;
    T::lit(13.0) * a / (T::one() + (a * f).powi(2)) + T::lit(3.5) * (T::lit(2.0) * f / (c * c)) / (T::one() + q.powi(4))
}

fn bark_inverse<T: Real>(z: T) -> Result<T> {
    let sup = T::lit(8.25) * T::PI();
    if z >= sup {
        return Err(domain(format!("Bark value {z} is beyond the scale's supremum")));
    }
    if z == T::zero() {
        return Ok(T::zero());
    }
    let mut lo = T::zero();
    let mut hi = T::lit(1000.0);
    while bark(hi) < z {
        lo = hi;
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Err(domain("Bark inverse did not bracket"));
        }
    }
    let mut f = (lo + hi) / T::lit(2.0);
    for _ in 0..200 {
        let r = bark(f) - z;
        if r > T::zero() {
            hi = f;
        } else {
            lo = f;
        }
        let mut next = f - r / bark_derivative(f);
        if !(next > lo && next < hi) {
            next = (lo + hi) / T::lit(2.0);
        }
        if (next - f).abs() <= T::epsilon() * f.abs() {
            return Ok(next);
        }
        f = next;
    }
    Ok(f)
}

/// `df/dm` of the mel warp at mel value `m`: `(700 ln 10 / 2595) * 10^(m / 2595)`.
pub fn mel_resolution_derivative<T: Real>(m: T) -> T {
    T::lit(MEL_BREAK_HZ) * T::LN_10() / T::lit(MEL_SCALE) * T::lit(10.0).powf(m / T::lit(MEL_SCALE))
}

/// Just-noticeable frequency difference, modelled as 1% of frequency.
pub fn jnd<T: Real>(f: T) -> T {
    T::lit(0.01) * f
}

/// Glasberg & Moore equivalent rectangular bandwidth at `f` Hz.
pub fn erb_bandwidth<T: Real>(f: T) -> T {
    T::lit(24.7) * (T::lit(ERB_SLOPE_PER_HZ) * f + T::one())
}

/// One row of a resolution-deficit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolutionRow<T> {
    pub freq_hz: T,
    pub scale_value: T,
    /// Center spacing of adjacent filters at `freq_hz`.
    pub bandwidth_hz: T,
    pub jnd_hz: T,
    /// `bandwidth_hz / jnd_hz`.
    pub deficit_ratio: T,
}

/// The probe frequencies of the standard 80-500 Hz tonal band table.
pub const TONAL_PROBES_HZ: [f64; 7] = [80.0, 100.0, 200.0, 250.0, 300.0, 400.0, 500.0];

/// Published rows for a 40-filter 0-8000 Hz mel bank at [`TONAL_PROBES_HZ`]:
/// `(freq_hz, mel, bandwidth_hz, jnd_hz, deficit_ratio)`.
pub const REFERENCE_MEL_ROWS: [(f64, f64, f64, f64, f64); 7] = [
    (80.0, 122.0, 51.6, 0.8, 65.0),
    (100.0, 150.5, 51.6, 1.0, 52.0),
    (200.0, 283.2, 58.6, 2.0, 29.0),
    (250.0, 344.2, 62.4, 2.5, 25.0),
    (300.0, 402.0, 66.4, 3.0, 22.0),
    (400.0, 509.4, 70.7, 4.0, 18.0),
    (500.0, 607.4, 80.2, 5.0, 16.0),
];

/// Local filter spacing of an `n_filters` triangular bank over
/// `[f_min, f_max]`, evaluated at each probe frequency.
///
/// Bandwidth is `d inverse/dv` at the probe times the center spacing in
/// scale units, `(warp(f_max) - warp(f_min)) / (n_filters + 1)`.
pub fn resolution_table<T: Real>(
    warp: &FrequencyWarp,
    n_filters: usize,
    f_min: T,
    f_max: T,
    probe_freqs: &[T],
) -> Result<Vec<ResolutionRow<T>>> {
    if n_filters < 2 {
        return Err(domain("resolution table needs at least 2 filters"));
    }
    if !(f_min >= T::zero() && f_min < f_max) {
        return Err(domain(format!("invalid band [{f_min}, {f_max}]")));
    }
    let span = warp.forward(f_max)? - warp.forward(f_min)?;
    let step = span / T::from_usize_lossy(n_filters + 1);
    probe_freqs
        .iter()
        .map(|&f| {
            if !(f > f_min && f < f_max) {
                return Err(domain(format!("probe {f} Hz outside ({f_min}, {f_max})")));
            }
            let v = warp.forward(f)?;
            let bandwidth_hz = warp.inverse_derivative(v)? * step;
            let jnd_hz = jnd(f);
            Ok(ResolutionRow {
                freq_hz: f,
                scale_value: v,
                bandwidth_hz,
                jnd_hz,
                deficit_ratio: bandwidth_hz / jnd_hz,
            })
        })
        .collect()
}
