//! Evaluation tooling: balanced manifests, tone stimuli, ABX probes, the
//! resolution-deficit bound and the overhead benchmark.

pub mod bench;
pub mod bound;
pub mod manifest;
pub mod probe;
pub mod synth;

pub use bench::{overhead_benchmark, BenchRow};
pub use bound::{bound_integral, corollary_integral, BoundSpec};
pub use manifest::{sample_balanced, Manifest, ManifestEntry, Quota};
pub use probe::{discrimination_probe, ProbeConfig, ProbeResult};
pub use synth::synth_tone_clip;
