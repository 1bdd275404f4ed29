//! The generic numerics agree between f32 and f64.

use fairbench::evalkit::bound::{bank_resolution, bound_integral, BoundSpec};
use fairbench::filterbanks::{apply_bank, log_compress, TriangularBank};
use fairbench::scales::{resolution_table, TONAL_PROBES_HZ};
use fairbench::spectral::power_spectrogram;
use fairbench::{AudioBuffer, FrameSpec, FrequencyWarp};

#[test]
fn resolution_tables_agree() {
    for warp in [FrequencyWarp::mel(), FrequencyWarp::erb(), FrequencyWarp::bark()] {
        let wide = resolution_table(&warp, 40, 0.0f64, 8000.0, &TONAL_PROBES_HZ).unwrap();
        let probes: Vec<f32> = TONAL_PROBES_HZ.iter().map(|&f| f as f32).collect();
        let narrow = resolution_table(&warp, 40, 0.0f32, 8000.0, &probes).unwrap();
        for (a, b) in wide.iter().zip(&narrow) {
            assert!((a.scale_value - b.scale_value as f64).abs() < 1e-3 * a.scale_value.abs().max(1.0));
            assert!((a.deficit_ratio - b.deficit_ratio as f64).abs() < 1e-3 * a.deficit_ratio);
        }
    }
}

#[test]
fn mel_log_energies_agree() {
    let n = 8000;
    let x: Vec<f64> = (0..n).map(|i| (0.013 * i as f64).sin() * 0.3 + (0.2 * i as f64).cos() * 0.1).collect();
    let audio = AudioBuffer::new(x, 16000.0).unwrap();
    let frame = FrameSpec::default();
    let bins = frame.fft_len(16000.0) / 2 + 1;
    let p64 = power_spectrogram::<f64>(&audio, &frame).unwrap();
    let p32 = power_spectrogram::<f32>(&audio, &frame).unwrap();
    let b64 = TriangularBank::<f64>::new(FrequencyWarp::mel(), 40, 0.0, 8000.0, bins, 16000.0).unwrap();
    let b32 = TriangularBank::<f32>::new(FrequencyWarp::mel(), 40, 0.0, 8000.0, bins, 16000.0).unwrap();
    let e64 = apply_bank(&b64, &p64).unwrap();
    let e32 = apply_bank(&b32, &p32).unwrap();
    for t in 0..e64.rows() {
        let peak = e64.row(t).iter().cloned().fold(0.0, f64::max);
        for (a, b) in e64.row(t).iter().zip(e32.row(t)) {
            assert!((a - *b as f64).abs() <= 1e-5 * peak, "frame {t}: {a} vs {b}");
        }
    }
    // strong channels agree in the log domain too
    let l64 = log_compress(&e64, 1e-10).unwrap();
    let l32 = log_compress(&e32, 1e-10).unwrap();
    for (a, b) in l64.values().iter().zip(l32.values()).filter(|(a, _)| **a > -8.0) {
        assert!((a - *b as f64).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn bound_agrees() {
    let wide = BoundSpec::<f64>::uniform_band(200.0, 500.0, 61, bank_resolution(FrequencyWarp::mel(), 40, 0.0, 8000.0)).unwrap();
    let narrow =
        BoundSpec::<f32>::uniform_band(200.0, 500.0, 61, bank_resolution(FrequencyWarp::mel(), 40, 0.0f32, 8000.0)).unwrap();
    assert!((bound_integral(&wide) - bound_integral(&narrow) as f64).abs() < 1e-5);
}
