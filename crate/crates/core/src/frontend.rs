//! The seven named front-ends and a single extraction entry point.
//!
//! Defaults: 16 kHz audio, 25 ms Hann windows on a 10 ms hop, 0-8000 Hz.
//! Channel counts are 40 (mel, mel-pcen), 32 (erb), 24 (bark), 84 (cqt) and
//! 64 (leaf, sincnet). Every front-end except mel-pcen emits log energies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cqt::{cqt_transform_with, CqtKernel, CqtSpec};
use crate::error::{Error, Result};
use crate::filterbanks::{apply_bank, log_compress, pcen, PcenParams, TriangularBank, DEFAULT_LOG_FLOOR};
use crate::parametric::gabor::DEFAULT_POOLING_WIDTH;
use crate::parametric::{GaborBank, SincBank, DEFAULT_KERNEL_LEN};
use crate::scales::FrequencyWarp;
use crate::spectral::{power_spectrogram_with, AudioBuffer, FeatureMatrix, FrameSpec, SpectrumPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrontendKind {
    #[serde(rename = "mel")]
    Mel,
    #[serde(rename = "erb")]
    Erb,
    #[serde(rename = "bark")]
    Bark,
    #[serde(rename = "cqt")]
    Cqt,
    #[serde(rename = "leaf")]
    Leaf,
    #[serde(rename = "sincnet")]
    SincNet,
    #[serde(rename = "mel-pcen")]
    MelPcen,
}

impl FrontendKind {
    pub const ALL: [FrontendKind; 7] = [
        FrontendKind::Mel,
        FrontendKind::Erb,
        FrontendKind::Bark,
        FrontendKind::Cqt,
        FrontendKind::Leaf,
        FrontendKind::SincNet,
        FrontendKind::MelPcen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrontendKind::Mel => "mel",
            FrontendKind::Erb => "erb",
            FrontendKind::Bark => "bark",
            FrontendKind::Cqt => "cqt",
            FrontendKind::Leaf => "leaf",
            FrontendKind::SincNet => "sincnet",
            FrontendKind::MelPcen => "mel-pcen",
        }
    }

    pub fn default_channels(self) -> usize {
        match self {
            FrontendKind::Mel | FrontendKind::MelPcen => 40,
            FrontendKind::Erb => 32,
            FrontendKind::Bark => 24,
            FrontendKind::Cqt => 84,
            FrontendKind::Leaf | FrontendKind::SincNet => 64,
        }
    }

    /// Warp of the triangular bank, if this front-end uses one.
    pub fn warp(self) -> Option<FrequencyWarp> {
        match self {
            FrontendKind::Mel | FrontendKind::MelPcen => Some(FrequencyWarp::mel()),
            FrontendKind::Erb => Some(FrequencyWarp::erb()),
            FrontendKind::Bark => Some(FrequencyWarp::bark()),
            _ => None,
        }
    }
}

impl fmt::Display for FrontendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrontendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = match key.as_str() {
            "mel+pcen" | "pcen" => "mel-pcen",
            "erb-rate" => "erb",
            other => other,
        };
        FrontendKind::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            let known: Vec<&str> = FrontendKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown front-end '{s}' (known: {})", known.join(", ")))
        })
    }
}

/// Parses a comma-separated front-end list.
pub fn parse_frontend_list(s: &str) -> Result<Vec<FrontendKind>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub kind: FrontendKind,
    pub n_channels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub sample_rate: f64,
    pub frame: FrameSpec,
    pub pcen: PcenParams,
    /// Lowest CQT bin; the bin count is `n_channels`.
    pub cqt_f_min: f64,
    pub log_floor: f64,
}

impl FrontendConfig {
    pub fn new(kind: FrontendKind, sample_rate: f64) -> Self {
        Self {
            kind,
            n_channels: kind.default_channels(),
            f_min: 0.0,
            f_max: (0.5 * sample_rate).min(8000.0),
            sample_rate,
            frame: FrameSpec::default(),
            pcen: PcenParams::default(),
            cqt_f_min: CqtSpec::default().f_min,
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }

    pub fn cqt_spec(&self) -> CqtSpec {
        CqtSpec {
            f_min: self.cqt_f_min,
            n_bins: self.n_channels,
            sample_rate: self.sample_rate,
            hop_ms: self.frame.hop_ms,
            align_window_ms: self.frame.window_ms,
            ..CqtSpec::default()
        }
    }
}

enum Engine {
    Triangular { bank: TriangularBank<f64>, plan: SpectrumPlan<f64> },
    Cqt(CqtKernel),
    Gabor(GaborBank),
    Sinc(SincBank),
}

/// A configured front-end with its filters precomputed.
pub struct Frontend {
    config: FrontendConfig,
    engine: Engine,
}

impl Frontend {
    pub fn new(config: FrontendConfig) -> Result<Self> {
        config.frame.validate(config.sample_rate)?;
        let sr = config.sample_rate;
        let engine = match config.kind {
            FrontendKind::Mel | FrontendKind::Erb | FrontendKind::Bark | FrontendKind::MelPcen => {
                let warp = config.kind.warp().expect("triangular kind");
                let bins = config.frame.fft_len(sr) / 2 + 1;
                Engine::Triangular {
                    bank: TriangularBank::new(warp, config.n_channels, config.f_min, config.f_max, bins, sr)?,
                    plan: SpectrumPlan::new(&config.frame, sr)?,
                }
            }
            FrontendKind::Cqt => Engine::Cqt(CqtKernel::new(config.cqt_spec())?),
            FrontendKind::Leaf => {
                Engine::Gabor(GaborBank::mel_init(config.n_channels, sr, DEFAULT_KERNEL_LEN, DEFAULT_POOLING_WIDTH)?)
            }
            FrontendKind::SincNet => Engine::Sinc(SincBank::mel_init(config.n_channels, sr, DEFAULT_KERNEL_LEN)?),
        };
        Ok(Self { config, engine })
    }

    pub fn default_for(kind: FrontendKind, sample_rate: f64) -> Result<Self> {
        Self::new(FrontendConfig::new(kind, sample_rate))
    }

    /// A LEAF front-end with trained parameters.
    pub fn from_gabor(bank: GaborBank) -> Result<Self> {
        bank.validate()?;
        let mut config = FrontendConfig::new(FrontendKind::Leaf, bank.sample_rate);
        config.n_channels = bank.n_filters();
        Ok(Self { config, engine: Engine::Gabor(bank) })
    }

    pub fn from_sinc(bank: SincBank) -> Result<Self> {
        bank.validate()?;
        let mut config = FrontendConfig::new(FrontendKind::SincNet, bank.sample_rate);
        config.n_channels = bank.n_filters();
        Ok(Self { config, engine: Engine::Sinc(bank) })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.config
    }

    pub fn kind(&self) -> FrontendKind {
        self.config.kind
    }

    pub fn n_channels(&self) -> usize {
        self.config.n_channels
    }

    pub fn extract(&self, audio: &AudioBuffer) -> Result<FeatureMatrix<f64>> {
        if (audio.sample_rate() - self.config.sample_rate).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{} configured for {} Hz, audio is {} Hz",
                self.config.kind,
                self.config.sample_rate,
                audio.sample_rate()
            )));
        }
        let hop = self.config.frame.hop_ms;
        match &self.engine {
            Engine::Triangular { bank, plan } => {
                let power = power_spectrogram_with(plan, audio, &self.config.frame)?;
                let energies = apply_bank(bank, &power)?;
                if self.config.kind == FrontendKind::MelPcen {
                    pcen(&energies, &self.config.pcen)
                } else {
                    log_compress(&energies, self.config.log_floor)
                }
            }
            Engine::Cqt(kernel) => {
                let mag = cqt_transform_with(kernel, audio)?;
                log_compress(&mag.map(|v| v * v), self.config.log_floor)
            }
            Engine::Gabor(bank) => bank.plan(audio.len(), hop)?.response(audio),
            Engine::Sinc(bank) => bank.plan(audio.len(), hop)?.response(audio),
        }
    }
}

/// One-shot extraction with default settings.
pub fn extract(kind: FrontendKind, audio: &AudioBuffer) -> Result<FeatureMatrix<f64>> {
    Frontend::default_for(kind, audio.sample_rate())?.extract(audio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, n: usize) -> AudioBuffer {
        AudioBuffer::new((0..n).map(|i| 0.5 * (std::f64::consts::TAU * f * i as f64 / 16000.0).sin()).collect(), 16000.0).unwrap()
    }

    #[test]
    fn default_shapes() {
        let a = tone(440.0, 16000);
        for kind in FrontendKind::ALL {
            let f = extract(kind, &a).unwrap();
            assert_eq!(f.rows(), 98, "{kind}");
            assert_eq!(f.cols(), kind.default_channels(), "{kind}");
            assert_eq!(f.channel_freqs.len(), f.cols());
            assert!(f.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn names_parse() {
        for kind in FrontendKind::ALL {
            assert_eq!(kind.name().parse::<FrontendKind>().unwrap(), kind);
        }
        assert_eq!("mel+PCEN".parse::<FrontendKind>().unwrap(), FrontendKind::MelPcen);
        assert!(matches!("mfcc".parse::<FrontendKind>(), Err(Error::Config(_))));
        assert_eq!(parse_frontend_list("mel,cqt").unwrap(), vec![FrontendKind::Mel, FrontendKind::Cqt]);
    }

    #[test]
    fn tone_peaks_near_its_frequency() {
        let a = tone(1000.0, 8000);
        for kind in FrontendKind::ALL {
            let f = extract(kind, &a).unwrap();
            let avg = f.time_average();
            let k = (0..avg.len()).max_by(|&x, &y| avg[x].total_cmp(&avg[y])).unwrap();
            let c = f.channel_freqs[k];
            assert!((c / 1000.0).log2().abs() < 0.25, "{kind}: peak channel at {c} Hz");
        }
    }

    #[test]
    fn rate_mismatch_is_config_error() {
        let a = AudioBuffer::new(vec![0.0; 8000], 8000.0).unwrap();
        let fe = Frontend::default_for(FrontendKind::Mel, 16000.0).unwrap();
        assert!(matches!(fe.extract(&a), Err(Error::Config(_))));
    }
}
