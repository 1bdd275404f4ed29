//! Audio front-ends, frequency-resolution analysis and cross-group fairness
//! metrics.
//!
//! Modules:
//! - [`scales`]: mel / ERB-rate / Bark / log warps and resolution-deficit tables
//! - [`spectral`], [`wav`], [`resample`]: audio ingestion and power spectra
//! - [`filterbanks`]: triangular mel/ERB/Bark banks, log compression, PCEN
//! - [`cqt`]: constant-Q transform
//! - [`parametric`]: Gabor and sinc learnable banks with analytic gradients
//! - [`fairness`]: worst-group score, gap, disparate impact, bootstrap reports
//! - [`evalkit`]: balanced manifests, tone probes, the information bound, benchmarks
//! - [`frontend`], [`featio`]: named front-end configurations and feature files
//!
//! Scale, filterbank and PCEN code is generic over [`Real`]; the aliases
//! below fix the scalar for the common cases.

pub mod cqt;
pub mod error;
pub mod evalkit;
pub mod fairness;
pub mod featio;
pub mod filterbanks;
pub mod frontend;
pub mod num;
pub mod parametric;
pub mod resample;
pub mod scales;
pub mod spectral;
pub mod wav;

pub use error::{Error, Result};
pub use num::Real;
pub use scales::{FrequencyWarp, WarpKind};
pub use spectral::{AudioBuffer, FrameSpec, WindowFn};

/// Double-precision feature matrix, the default for analysis code.
pub type Features = spectral::FeatureMatrix<f64>;
/// Single-precision feature matrix.
pub type FeaturesF32 = spectral::FeatureMatrix<f32>;
pub type TriangularBank = filterbanks::TriangularBank<f64>;
pub type TriangularBankF32 = filterbanks::TriangularBank<f32>;
pub type ResolutionRow = scales::ResolutionRow<f64>;
pub type BoundSpec = evalkit::bound::BoundSpec<f64>;
pub type GroupResult = fairness::GroupResult<f64>;

