//! FAB1 feature files and CSV export.
//!
//! Layout: the 8-byte magic `FABFEAT1`, rows and cols as little-endian
//! `u32`, `rows * cols` little-endian `f32` values in row-major order, then a
//! UTF-8 JSON trailer with the frame spec, channel frequencies and front-end
//! name.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FeatureMatrix, FrameSpec};

pub const MAGIC: &[u8; 8] = b"FABFEAT1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub frame_spec: FrameSpec,
    pub channel_freqs: Vec<f64>,
    pub frontend: String,
}

pub fn encode_fab(features: &FeatureMatrix<f64>, frontend: &str) -> Result<Vec<u8>> {
    let dim = |n: usize, what: &str| u32::try_from(n).map_err(|_| Error::Shape(format!("{what} {n} exceeds u32")));
    let (rows, cols) = (dim(features.rows(), "rows")?, dim(features.cols(), "cols")?);
    let mut out = Vec::with_capacity(16 + 4 * features.values().len() + 256);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for &v in features.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let meta = FeatureMeta {
        frame_spec: features.frame_spec,
        channel_freqs: features.channel_freqs.clone(),
        frontend: frontend.to_string(),
    };
    out.extend_from_slice(serde_json::to_string(&meta).expect("metadata serialises").as_bytes());
    Ok(out)
}

pub fn decode_fab(bytes: &[u8]) -> Result<(FeatureMatrix<f32>, FeatureMeta)> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Format("not a FAB1 feature file (bad magic)".into()));
    }
    let rd = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (rows, cols) = (rd(8), rd(12));
    let end = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(16))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Format(format!("FAB1 header claims {rows}x{cols} values, file is {} bytes", bytes.len())))?;
    let values: Vec<f32> = bytes[16..end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let meta: FeatureMeta =
        serde_json::from_slice(&bytes[end..]).map_err(|e| Error::Format(format!("FAB1 metadata trailer: {e}")))?;
    let m = FeatureMatrix::new(values, rows, cols, meta.frame_spec, meta.channel_freqs.clone())?;
    Ok((m, meta))
}

pub fn write_fab(path: &Path, features: &FeatureMatrix<f64>, frontend: &str) -> Result<()> {
    let bytes = encode_fab(features, frontend)?;
    std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn read_fab(path: &Path) -> Result<(FeatureMatrix<f32>, FeatureMeta)> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    decode_fab(&bytes)
}

/// One row per frame: `frame, time_s`, then one column per channel named by
/// its centre frequency.
pub fn write_features_csv<W: Write>(features: &FeatureMatrix<f64>, sample_rate: f64, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["frame".to_string(), "time_s".to_string()];
    header.extend((0..features.cols()).map(|c| match features.channel_freqs.get(c) {
        Some(f) => format!("ch{c}_{f:.1}hz"),
        None => format!("ch{c}"),
    }));
    let fail = |e: csv::Error| Error::Data(format!("feature CSV: {e}"));
    w.write_record(&header).map_err(fail)?;
    for t in 0..features.rows() {
        let time = features.frame_spec.frame_center(t, sample_rate) as f64 / sample_rate;
        let mut rec = vec![t.to_string(), format!("{time:.4}")];
        rec.extend(features.row(t).iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec).map_err(fail)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<feature csv>".into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix<f64> {
        let vals: Vec<f64> = (0..12).map(|i| i as f64 * 0.25 - 1.0).collect();
        FeatureMatrix::new(vals, 3, 4, FrameSpec::default(), vec![100.0, 200.0, 300.0, 400.0]).unwrap()
    }

    #[test]
    fn roundtrip() {
        let f = sample();
        let bytes = encode_fab(&f, "mel").unwrap();
        assert_eq!(&bytes[..8], b"FABFEAT1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        let (back, meta) = decode_fab(&bytes).unwrap();
        assert_eq!(meta.frontend, "mel");
        assert_eq!(back.rows(), 3);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(*a as f64, *b);
        }
        assert_eq!(back.channel_freqs, f.channel_freqs);
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let bytes = encode_fab(&sample(), "mel").unwrap();
        assert!(matches!(decode_fab(&bytes[..20]), Err(Error::Format(_))));
        assert!(matches!(decode_fab(b"RIFF0000"), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad.truncate(bytes.len() - 3);
        assert!(matches!(decode_fab(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_features_csv(&sample(), 16000.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("frame,time_s,ch0_100.0hz"));
        assert!(lines[1].starts_with("0,0.0125,"));
    }
}
