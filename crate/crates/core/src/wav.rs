//! RIFF/WAVE reading and writing (PCM16 and IEEE float32 only).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::resample::resample;
use crate::spectral::AudioBuffer;

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Interleaved multichannel samples as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub channels: usize,
    pub sample_rate: u32,
    /// Interleaved, scaled to [-1, 1].
    pub samples: Vec<f64>,
}

impl WavData {
    /// Averages channels into one.
    pub fn to_mono(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.samples.clone();
        }
        let c = self.channels as f64;
        self.samples
            .chunks_exact(self.channels)
            .map(|frame| frame.iter().sum::<f64>() / c)
            .collect()
    }
}

fn u16_at(b: &[u8], i: usize) -> u16 {
    u16::from_le_bytes([b[i], b[i + 1]])
}

fn u32_at(b: &[u8], i: usize) -> u32 {
    u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]])
}

fn chunk_name(id: &[u8]) -> String {
    id.iter()
        .map(|&c| if c.is_ascii_graphic() || c == b' ' { c as char } else { '?' })
        .collect()
}

/// Parses an in-memory WAV file.
pub fn parse_wav(bytes: &[u8]) -> Result<WavData> {
    if bytes.len() < 12 {
        return Err(Error::Format(format!("{} bytes is too short for a RIFF header", bytes.len())));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format(format!(
            "expected RIFF/WAVE header, found '{}'/'{}'",
            chunk_name(&bytes[0..4]),
            chunk_name(&bytes[8..12])
        )));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, usize, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Format("truncated 'fmt ' chunk".into()));
                }
                let mut tag = u16_at(body, 0);
                let channels = u16_at(body, 2) as usize;
                let rate = u32_at(body, 4);
                let bits = u16_at(body, 14);
                if tag == FORMAT_EXTENSIBLE {
                    if body.len() < 26 {
                        return Err(Error::Format("truncated extensible 'fmt ' chunk".into()));
                    }
                    tag = u16_at(body, 24);
                }
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_start + size + (size & 1);
    }
    let (tag, channels, rate, bits) =
        fmt.ok_or_else(|| Error::Format("no 'fmt ' chunk found".into()))?;
    let data = data.ok_or_else(|| Error::Format("no 'data' chunk found".into()))?;
    if channels == 0 || rate == 0 {
        return Err(Error::Format(format!("'fmt ' chunk declares {channels} channels at {rate} Hz")));
    }
    let samples: Vec<f64> = match (tag, bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (FORMAT_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        _ => {
            return Err(Error::Format(format!(
                "unsupported encoding in 'fmt ' chunk: format tag 0x{tag:04X}, {bits} bits (only PCM16 and float32)"
            )))
        }
    };
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::Format(format!("non-finite float sample at index {i} in 'data' chunk")));
    }
    let usable = samples.len() - samples.len() % channels;
    let mut samples = samples;
    samples.truncate(usable);
    Ok(WavData { channels, sample_rate: rate, samples })
}

pub fn read_wav(path: &Path) -> Result<WavData> {
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_wav(&bytes)
}

/// Reads a WAV file, downmixes to mono and resamples to `target_rate`.
pub fn load_audio(path: &Path, target_rate: f64) -> Result<AudioBuffer> {
    let wav = read_wav(path)?;
    let mono = wav.to_mono();
    if mono.is_empty() {
        return Err(Error::EmptyInput(format!("{} contains no samples", path.display())));
    }
    let src = wav.sample_rate as f64;
    let samples = if (src - target_rate).abs() < f64::EPSILON {
        mono
    } else {
        resample(&mono, src, target_rate)?
    };
    let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
    AudioBuffer::new(samples, target_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Encodes interleaved samples as a WAV file.
pub fn encode_wav(samples: &[f64], channels: u16, sample_rate: u32, encoding: WavEncoding) -> Vec<u8> {
    let (tag, bits) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 16u16),
        WavEncoding::Float32 => (FORMAT_FLOAT, 32u16),
    };
    let bytes_per = (bits / 8) as u32;
    let data_len = samples.len() as u32 * bytes_per;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * channels as u32 * bytes_per).to_le_bytes());
    out.extend_from_slice(&(channels * bits / 8).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&v.to_le_bytes());
            }
            WavEncoding::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    out
}

pub fn write_wav(path: &Path, samples: &[f64], channels: u16, sample_rate: u32, encoding: WavEncoding) -> Result<()> {
    fs::write(path, encode_wav(samples, channels, sample_rate, encoding))
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm16_mono_is_scaled_by_1_over_32768() {
        let raw: Vec<i16> = vec![0, 16384, -32768, 32767, -1];
        let samples: Vec<f64> = raw.iter().map(|&v| v as f64 / 32768.0).collect();
        let bytes = encode_wav(&samples, 1, 16000, WavEncoding::Pcm16);
        let wav = parse_wav(&bytes).unwrap();
        assert_eq!(wav.samples, samples);
    }

    #[test]
    fn stereo_is_averaged() {
        let inter = vec![0.5, -0.25, 1.0, 0.0];
        let bytes = encode_wav(&inter, 2, 8000, WavEncoding::Float32);
        let wav = parse_wav(&bytes).unwrap();
        assert_eq!(wav.to_mono(), vec![0.125, 0.5]);
    }

    #[test]
    fn compressed_codec_names_the_chunk() {
        let mut bytes = encode_wav(&[0.0; 4], 1, 8000, WavEncoding::Pcm16);
        bytes[20] = 0x55; // MP3 format tag
        let err = parse_wav(&bytes).unwrap_err().to_string();
        assert!(err.contains("'fmt '") && err.contains("0x0055"), "{err}");
    }

    #[test]
    fn non_riff_is_rejected() {
        let err = parse_wav(b"OggS\0\0\0\0vorbis").unwrap_err().to_string();
        assert!(err.contains("OggS"), "{err}");
    }

    #[test]
    fn empty_file_loads_as_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.wav");
        write_wav(&p, &[], 1, 16000, WavEncoding::Pcm16).unwrap();
        assert!(matches!(load_audio(&p, 16000.0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn downsampling_length_ratio() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let n = 48000 + 7;
        let x: Vec<f64> = (0..n).map(|i| 0.3 * (i as f64 * 0.01).sin()).collect();
        write_wav(&p, &x, 1, 48000, WavEncoding::Float32).unwrap();
        let a = load_audio(&p, 16000.0).unwrap();
        let expected = n as f64 / 3.0;
        assert!((a.len() as f64 - expected).abs() <= 1.0, "{}", a.len());
    }
}
