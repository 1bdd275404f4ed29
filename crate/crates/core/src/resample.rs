//! Kaiser-windowed sinc resampler (64 taps, beta = 8).

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const TAPS: usize = 64;
pub const KAISER_BETA: f64 = 8.0;

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Resamples `input` from `src_rate` to `dst_rate`.
///
/// Output length is `ceil(n * dst / src)`. The low-pass cutoff sits at the
/// lower of the two Nyquist rates; taps are renormalised to unit DC gain at
/// every output position.
pub fn resample(input: &[f64], src_rate: f64, dst_rate: f64) -> Result<Vec<f64>> {
    if !(src_rate > 0.0 && dst_rate > 0.0) {
        return Err(Error::Domain(format!("invalid resampling rates {src_rate} -> {dst_rate}")));
    }
    if input.is_empty() {
        return Err(Error::EmptyInput("nothing to resample".into()));
    }
    let ratio = dst_rate / src_rate;
    let cutoff = 0.5 * ratio.min(1.0);
    let n_out = (input.len() as f64 * ratio).ceil() as usize;
    let half = (TAPS / 2) as isize;
    let i0_beta = bessel_i0(KAISER_BETA);
    let step = src_rate / dst_rate;
    let mut out = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let t = j as f64 * step;
        let base = t.floor() as isize;
        let (mut acc, mut norm) = (0.0, 0.0);
        for i in (base - half + 1)..=(base + half) {
            let x = t - i as f64;
            let u = x / half as f64;
            if u.abs() > 1.0 {
                continue;
            }
            let w = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / i0_beta;
            let h = 2.0 * cutoff * sinc(2.0 * cutoff * x) * w;
            norm += h;
            if i >= 0 && (i as usize) < input.len() {
                acc += h * input[i as usize];
            }
        }
        out.push(if norm.abs() > 0.0 { acc / norm } else { 0.0 });
    }
    Ok(out)
}
