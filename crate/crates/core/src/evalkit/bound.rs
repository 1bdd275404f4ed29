//! Numeric form of the resolution-deficit error bound.
//!
//! The bound integrates `I(f) * 1[R(f) > df_min(f)] * p(f)` over a frequency
//! grid with the trapezoidal rule. The corollary form replaces the indicator
//! by the excess ratio `c * (R / df_min - 1)_+` over a sub-band.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::num::Real;
use crate::scales::{jnd, resolution_table, FrequencyWarp};

pub const DENSITY_TOLERANCE: f64 = 1e-6;
pub const COROLLARY_BAND: (f64, f64) = (200.0, 500.0);

/// Pointwise inputs of the bound on an ascending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec<T> {
    freqs: Vec<T>,
    info: Vec<T>,
    density: Vec<T>,
    min_res: Vec<T>,
    res: Vec<T>,
}

fn trapezoid<T: Real>(x: &[T], y: impl Fn(usize) -> T) -> T {
    (1..x.len()).fold(T::zero(), |acc, i| acc + (x[i] - x[i - 1]) * (y(i) + y(i - 1)) / T::lit(2.0))
}

impl<T: Real> BoundSpec<T> {
    pub fn new(freqs: Vec<T>, info: Vec<T>, density: Vec<T>, min_res: Vec<T>, res: Vec<T>) -> Result<Self> {
        let n = freqs.len();
        if n < 2 {
            return Err(Error::EmptyInput("bound grid needs at least two points".into()));
        }
        if [info.len(), density.len(), min_res.len(), res.len()].iter().any(|&l| l != n) {
            return Err(Error::Shape("bound columns have different lengths".into()));
        }
        if let Some(i) = (1..n).find(|&i| !(freqs[i] > freqs[i - 1])) {
            return Err(domain(format!("grid not ascending at index {i} ({} after {})", freqs[i], freqs[i - 1])));
        }
        let bad = |v: &[T], name: &str, strict: bool| {
            v.iter()
                .position(|&x| !x.is_finite() || x < T::zero() || (strict && x == T::zero()))
                .map(|i| domain(format!("{name} at {} Hz is {} (must be {})", freqs[i], v[i], if strict { "positive" } else { "non-negative" })))
        };
        let first_bad = [bad(&info, "info", false), bad(&density, "density", false), bad(&min_res, "min_res", true), bad(&res, "res", false)]
            .into_iter()
            .flatten()
            .next();
        if let Some(e) = first_bad {
            return Err(e);
        }
        let mass = trapezoid(&freqs, |i| density[i]);
        if (mass.as_f64() - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(domain(format!("density integrates to {mass}, not 1")));
        }
        Ok(Self { freqs, info, density, min_res, res })
    }

    /// Uniform density and unit information on `[lo, hi]`, with the
    /// just-noticeable difference as the required resolution.
    pub fn uniform_band(lo: T, hi: T, n_points: usize, res: impl Fn(T) -> T) -> Result<Self> {
        if n_points < 2 || !(lo < hi) {
            return Err(domain("uniform band needs lo < hi and at least two points"));
        }
        let step = (hi - lo) / T::from_usize_lossy(n_points - 1);
        let freqs: Vec<T> = (0..n_points).map(|i| lo + step * T::from_usize_lossy(i)).collect();
        let p = T::one() / (hi - lo);
        Self::new(
            freqs.clone(),
            vec![T::one(); n_points],
            vec![p; n_points],
            freqs.iter().map(|&f| jnd(f)).collect(),
            freqs.iter().map(|&f| res(f)).collect(),
        )
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn info(&self) -> &[T] {
        &self.info
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    pub fn min_res(&self) -> &[T] {
        &self.min_res
    }

    pub fn res(&self) -> &[T] {
        &self.res
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Grid points where the resolution is coarser than required.
    pub fn deficient(&self) -> Vec<bool> {
        self.res.iter().zip(&self.min_res).map(|(r, m)| r > m).collect()
    }
}

/// `integral I(f) 1[R(f) > df_min(f)] p(f) df`.
pub fn bound_integral<T: Real>(spec: &BoundSpec<T>) -> T {
    let on = spec.deficient();
    trapezoid(&spec.freqs, |i| if on[i] { spec.info[i] * spec.density[i] } else { T::zero() })
}

/// `integral over [lo, hi] of c (R / df_min - 1)_+ p(f) df`, using the grid
/// points that fall inside the band.
pub fn corollary_integral<T: Real>(spec: &BoundSpec<T>, c: T, lo: T, hi: T) -> Result<T> {
    if !(lo < hi) {
        return Err(domain(format!("corollary band [{lo}, {hi}] is empty")));
    }
    let idx: Vec<usize> = (0..spec.len()).filter(|&i| spec.freqs[i] >= lo && spec.freqs[i] <= hi).collect();
    if idx.len() < 2 {
        return Err(domain("fewer than two grid points inside the corollary band"));
    }
    let x: Vec<T> = idx.iter().map(|&i| spec.freqs[i]).collect();
    Ok(c * trapezoid(&x, |k| {
        let i = idx[k];
        (spec.res[i] / spec.min_res[i] - T::one()).max(T::zero()) * spec.density[i]
    }))
}

/// Resolution of a triangular bank at `f`, per the bandwidth convention of
/// [`resolution_table`].
pub fn bank_resolution<T: Real>(warp: FrequencyWarp, n_filters: usize, f_min: T, f_max: T) -> impl Fn(T) -> T {
    move |f| {
        resolution_table(&warp, n_filters, f_min, f_max, &[f])
            .map(|rows| rows[0].bandwidth_hz)
            .unwrap_or_else(|_| T::nan())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    f_hz: f64,
    info: f64,
    density: f64,
    min_res: f64,
    res: f64,
}

/// Reads a CSV with columns `f_hz, info, density, min_res, res`.
pub fn read_bound_csv<R: Read>(reader: R) -> Result<BoundSpec<f64>> {
    let mut cols: [Vec<f64>; 5] = Default::default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let r = row.map_err(|e| Error::Data(format!("bound CSV line {}: {e}", i + 2)))?;
        for (c, v) in cols.iter_mut().zip([r.f_hz, r.info, r.density, r.min_res, r.res]) {
            c.push(v);
        }
    }
    let [f, i, p, m, r] = cols;
    BoundSpec::new(f, i, p, m, r)
}

pub fn write_bound_csv<W: Write>(spec: &BoundSpec<f64>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for i in 0..spec.len() {
        w.serialize(Row {
            f_hz: spec.freqs[i],
            info: spec.info[i],
            density: spec.density[i],
            min_res: spec.min_res[i],
            res: spec.res[i],
        })
        .map_err(|e| Error::Data(format!("bound CSV: {e}")))?;
    }
    w.flush().map_err(|source| Error::Io { path: "<bound csv>".into(), source })
}
