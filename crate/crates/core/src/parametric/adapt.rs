//! Toy adaptation: a Gabor bank trained on a four-class tone task through a
//! frozen random linear readout, tracking where its filters go.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gabor::{GaborBank, GaborGrad};
use super::{allocation_fraction, AllocationStat};
use crate::error::{domain, Error, Result};
use crate::evalkit::synth::{flat_contour, glide_contour, synth_tone_clip};
use crate::spectral::{AudioBuffer, FeatureMatrix};

pub const TONE_CLASSES: usize = 4;
pub const TONE_CLIP_S: f64 = 0.3;
pub const TONE_HARMONICS: usize = 3;
pub const TONE_SNR_DB: f64 = 20.0;
pub const TONE_F0_RANGE: (f64, f64) = (180.0, 320.0);
pub const CRITICAL_BAND: (f64, f64) = (80.0, 500.0);

/// Labelled clips: 0 rising, 1 falling, 2 high level, 3 low level.
#[derive(Debug, Clone)]
pub struct ToneTask {
    pub clips: Vec<AudioBuffer>,
    pub labels: Vec<usize>,
}

impl ToneTask {
    pub fn four_tone(per_class: usize, seed: u64, sample_rate: f64) -> Result<Self> {
        if per_class == 0 {
            return Err(Error::EmptyInput("tone task needs at least one clip per class".into()));
        }
        let (lo, hi) = TONE_F0_RANGE;
        let third = (hi - lo) / 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clips = Vec::with_capacity(per_class * TONE_CLASSES);
        let mut labels = Vec::with_capacity(per_class * TONE_CLASSES);
        for i in 0..per_class {
            for class in 0..TONE_CLASSES {
                let low = rng.random_range(lo..lo + third);
                let high = rng.random_range(hi - third..hi);
                let contour = match class {
                    0 => glide_contour(low, high, TONE_CLIP_S),
                    1 => glide_contour(high, low, TONE_CLIP_S),
                    2 => flat_contour(high, TONE_CLIP_S),
                    _ => flat_contour(low, TONE_CLIP_S),
                };
                let clip_seed = seed ^ ((i * TONE_CLASSES + class) as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                clips.push(synth_tone_clip(&contour, TONE_HARMONICS, TONE_SNR_DB, TONE_CLIP_S, clip_seed, sample_rate)?);
                labels.push(class);
            }
        }
        Ok(Self { clips, labels })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub steps: usize,
    /// Step size in surrogate space.
    pub learn_rate: f64,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    /// Equal time segments whose mean log energies feed the readout.
    pub segments: usize,
    pub hop_ms: f64,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self { steps: 500, learn_rate: 0.1, optimizer: Optimizer::Sgd, batch_size: 8, segments: 3, hop_ms: 10.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptOutcome {
    pub bank: GaborBank,
    /// Allocation in the critical band before the first step and after each step.
    pub trajectory: Vec<AllocationStat>,
    pub losses: Vec<f64>,
}

struct Readout {
    weights: Vec<f64>,
    dim: usize,
}

impl Readout {
    fn random(classes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let weights = (0..classes * dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { weights, dim }
    }

    fn logits(&self, z: &[f64]) -> Vec<f64> {
        self.weights.chunks(self.dim).map(|w| w.iter().zip(z).map(|(a, b)| a * b).sum()).collect()
    }
}

fn segment_of(t: usize, rows: usize, segments: usize) -> usize {
    (t * segments / rows).min(segments - 1)
}

/// Per-segment mean of each channel, segment-major.
fn segment_means(feats: &FeatureMatrix<f64>, segments: usize) -> (Vec<f64>, Vec<usize>) {
    let (rows, cols) = (feats.rows(), feats.cols());
    let mut counts = vec![0usize; segments];
    let mut z = vec![0.0; segments * cols];
    for t in 0..rows {
        let s = segment_of(t, rows, segments);
        counts[s] += 1;
        for (zj, v) in z[s * cols..(s + 1) * cols].iter_mut().zip(feats.row(t)) {
            *zj += v;
        }
    }
    for s in 0..segments {
        let c = counts[s].max(1) as f64;
        z[s * cols..(s + 1) * cols].iter_mut().for_each(|v| *v /= c);
    }
    (z, counts)
}

/// Cross-entropy of readout logits and its gradient with respect to `z`.
fn cross_entropy(z: &[f64], label: usize, readout: &Readout) -> (f64, Vec<f64>) {
    let logits = readout.logits(z);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    let mut dz = vec![0.0; z.len()];
    for (k, l) in logits.iter().enumerate() {
        let p = (l - lse).exp() - if k == label { 1.0 } else { 0.0 };
        for (d, w) in dz.iter_mut().zip(&readout.weights[k * readout.dim..(k + 1) * readout.dim]) {
            *d += p * w;
        }
    }
    (lse - logits[label], dz)
}

/// Adjoint of [`segment_means`].
fn spread(dz: &[f64], counts: &[usize], like: &FeatureMatrix<f64>) -> FeatureMatrix<f64> {
    let (rows, cols) = (like.rows(), like.cols());
    let segments = counts.len();
    let mut g = like.map(|_| 0.0);
    for t in 0..rows {
        let s = segment_of(t, rows, segments);
        let c = counts[s].max(1) as f64;
        for (gv, d) in g.row_mut(t).iter_mut().zip(&dz[s * cols..(s + 1) * cols]) {
            *gv = d / c;
        }
    }
    g
}

/// Mean cross-entropy of a batch whose segment features are centred on the
/// batch mean, so a channel's absolute level carries no gradient. Returns
/// the loss and per-clip feature gradients.
fn batch_loss(
    feats: &[FeatureMatrix<f64>],
    labels: &[usize],
    readout: &Readout,
    segments: usize,
) -> (f64, Vec<FeatureMatrix<f64>>) {
    let b = feats.len() as f64;
    let stats: Vec<(Vec<f64>, Vec<usize>)> = feats.iter().map(|f| segment_means(f, segments)).collect();
    let dim = stats[0].0.len();
    let mut mean = vec![0.0; dim];
    for (z, _) in &stats {
        mean.iter_mut().zip(z).for_each(|(m, v)| *m += v / b);
    }
    let mut loss = 0.0;
    let mut dcs = Vec::with_capacity(feats.len());
    for ((z, _), &label) in stats.iter().zip(labels) {
        let c: Vec<f64> = z.iter().zip(&mean).map(|(v, m)| v - m).collect();
        let (l, dc) = cross_entropy(&c, label, readout);
        loss += l / b;
        dcs.push(dc.into_iter().map(|v| v / b).collect::<Vec<f64>>());
    }
    let mut dmean = vec![0.0; dim];
    for dc in &dcs {
        dmean.iter_mut().zip(dc).for_each(|(m, v)| *m += v / b);
    }
    let grads = dcs
        .iter()
        .zip(&stats)
        .zip(feats)
        .map(|((dc, (_, counts)), f)| {
            let dz: Vec<f64> = dc.iter().zip(&dmean).map(|(v, m)| v - m).collect();
            spread(&dz, counts, f)
        })
        .collect();
    (loss, grads)
}

/// Trains a copy of `bank` on `task`; the input bank is not modified.
pub fn adapt_toy(bank: &GaborBank, task: &ToneTask, config: &AdaptConfig) -> Result<AdaptOutcome> {
    bank.validate()?;
    if task.is_empty() {
        return Err(Error::EmptyInput("tone task has no clips".into()));
    }
    if !(config.learn_rate >= 0.0 && config.learn_rate.is_finite()) {
        return Err(domain(format!("learn rate {} must be finite and non-negative", config.learn_rate)));
    }
    if config.batch_size == 0 || config.segments == 0 {
        return Err(domain("batch size and segment count must be positive"));
    }
    let n = task.clips[0].len();
    if task.clips.iter().any(|c| c.len() != n) {
        return Err(Error::Shape("tone clips must share one length".into()));
    }
    let (lo, hi) = CRITICAL_BAND;
    let mut bank = bank.clone();
    let readout = Readout::random(TONE_CLASSES, config.segments * bank.n_filters(), config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let batch = config.batch_size.min(task.len());
    let mut trajectory = vec![allocation_fraction(&bank.centers_hz(), lo, hi)?];
    let mut losses = Vec::with_capacity(config.steps);
    let nf = bank.n_filters();
    let (mut ma, mut va, mut mb, mut vb) = (vec![0.0; nf], vec![0.0; nf], vec![0.0; nf], vec![0.0; nf]);
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    for step in 0..config.steps {
        let idx = sample(&mut rng, task.len(), batch).into_vec();
        let plan = bank.plan(n, config.hop_ms)?;
        let feats = idx
            .par_iter()
            .map(|&i| plan.response(&task.clips[i]))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<usize> = idx.iter().map(|&i| task.labels[i]).collect();
        let (loss, loss_grads) = batch_loss(&feats, &labels, &readout, config.segments);
        let per_clip = idx
            .par_iter()
            .zip(&loss_grads)
            .map(|(&i, g)| plan.grads(&task.clips[i], g))
            .collect::<Result<Vec<_>>>()?;
        // accumulate in batch order so results do not depend on scheduling
        let mut grads = vec![GaborGrad::default(); nf];
        for g in &per_clip {
            for (acc, gj) in grads.iter_mut().zip(g) {
                acc.d_center += gj.d_center;
                acc.d_width += gj.d_width;
            }
        }
        if !loss.is_finite() || grads.iter().any(|g| !(g.d_center.is_finite() && g.d_width.is_finite())) {
            return Err(Error::Numeric { step, message: format!("non-finite loss or gradient (loss {loss})") });
        }
        losses.push(loss);
        if config.learn_rate > 0.0 {
            let (mut a, mut b) = bank.surrogates();
            let (da, db) = bank.surrogate_grads(&grads);
            let k = (step + 1) as i32;
            let (c1, c2) = (1.0 - B1.powi(k), 1.0 - B2.powi(k));
            for j in 0..nf {
                if config.optimizer == Optimizer::Sgd {
                    a[j] -= config.learn_rate * da[j];
                    b[j] -= config.learn_rate * db[j];
                    continue;
                }
                ma[j] = B1 * ma[j] + (1.0 - B1) * da[j];
                va[j] = B2 * va[j] + (1.0 - B2) * da[j] * da[j];
                mb[j] = B1 * mb[j] + (1.0 - B1) * db[j];
                vb[j] = B2 * vb[j] + (1.0 - B2) * db[j] * db[j];
                a[j] -= config.learn_rate * (ma[j] / c1) / ((va[j] / c2).sqrt() + EPS);
                b[j] -= config.learn_rate * (mb[j] / c1) / ((vb[j] / c2).sqrt() + EPS);
            }
            bank.set_surrogates(&a, &b)?;
        }
        trajectory.push(allocation_fraction(&bank.centers_hz(), lo, hi)?);
    }
    Ok(AdaptOutcome { bank, trajectory, losses })
}
