//! Percentile bootstrap over per-item scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fairness_metrics, mean, GroupResult, Task};
use crate::error::{domain, Error, Result};

pub const CONFIDENCE: f64 = 0.99;
pub const MIN_BOOT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_id: String,
    pub task: Task,
    pub n: usize,
    pub summary_acc: f64,
    pub ci: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub wgs: f64,
    pub gap: f64,
    pub rho: f64,
    pub four_fifths_pass: bool,
    pub per_group: Vec<GroupSummary>,
    pub ci_wgs: Interval,
    /// Interval of the signed difference between the groups that are best and
    /// worst on the original data.
    pub ci_gap: Interval,
    pub ci_rho: Interval,
    pub gap_significant: bool,
    /// Groups are scored by different measurements (e.g. CER and WER).
    pub mixed_metrics: bool,
    pub n_boot: usize,
    pub confidence: f64,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    let a = pos - i as f64;
    sorted[i] * (1.0 - a) + sorted[j] * a
}

fn interval(mut xs: Vec<f64>) -> Interval {
    xs.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - CONFIDENCE);
    Interval { lo: quantile(&xs, tail), hi: quantile(&xs, 1.0 - tail) }
}

/// Resamples every group's scores with replacement `n_boot` times. Replicate
/// `r` draws from stream `r` of a ChaCha generator keyed by `seed`, so the
/// report does not depend on thread scheduling.
pub fn bootstrap_report(groups: &[GroupResult<f64>], n_boot: usize, seed: u64) -> Result<FairnessReport> {
    if n_boot < MIN_BOOT {
        return Err(domain(format!("n_boot {n_boot} is below {MIN_BOOT}")));
    }
    let point = fairness_metrics(groups)?;
    let scores: Vec<&Vec<f64>> = groups
        .iter()
        .map(|g| {
            g.per_sample_scores
                .as_ref()
                .ok_or_else(|| Error::Data(format!("group '{}' has no per-sample scores to resample", g.group_id)))
        })
        .collect::<Result<_>>()?;
    let argext = |better: fn(f64, f64) -> bool| {
        let mut k = 0;
        for (i, g) in groups.iter().enumerate() {
            if better(g.summary_acc, groups[k].summary_acc) {
                k = i;
            }
        }
        k
    };
    let best = argext(|a, b| a > b);
    let worst = argext(|a, b| a < b);

    let replicates: Vec<(Vec<f64>, f64, f64, f64)> = (0..n_boot)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let accs: Vec<f64> = scores
                .iter()
                .map(|s| {
                    let total: f64 = (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).sum();
                    100.0 * total / s.len() as f64
                })
                .collect();
            let lo = accs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let rho = if hi > 0.0 { lo / hi } else { 1.0 };
            let diff = accs[best] - accs[worst];
            (accs, lo, diff, rho)
        })
        .collect();

    let per_group = groups
        .iter()
        .enumerate()
        .map(|(i, g)| GroupSummary {
            group_id: g.group_id.clone(),
            task: g.task,
            n: scores[i].len(),
            summary_acc: g.summary_acc,
            ci: interval(replicates.iter().map(|r| r.0[i]).collect()),
        })
        .collect();
    let ci_gap = interval(replicates.iter().map(|r| r.2).collect());
    let mixed_metrics = groups.iter().any(|g| g.task.metric() != groups[0].task.metric());
    debug_assert!((point.wgs - 100.0 * mean(scores[worst])).abs() < 1e-9);
    Ok(FairnessReport {
        wgs: point.wgs,
        gap: point.gap,
        rho: point.rho,
        four_fifths_pass: point.four_fifths_pass,
        per_group,
        ci_wgs: interval(replicates.iter().map(|r| r.1).collect()),
        gap_significant: ci_gap.lo > 0.0,
        ci_gap,
        ci_rho: interval(replicates.iter().map(|r| r.3).collect()),
        mixed_metrics,
        n_boot,
        confidence: CONFIDENCE,
        seed,
    })
}

impl FairnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
