//! Group fairness metrics over per-group accuracies.
//!
//! All metrics work on accuracies in percent. Error-rate tasks are turned
//! into accuracies as `100 * (1 - error)` before anything else happens, so a
//! group scored by CER and a group scored by WER can sit in one comparison;
//! reports flag when that happens.

mod bootstrap;
pub mod io;
pub mod reference;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::num::Real;

pub use bootstrap::{bootstrap_report, FairnessReport, GroupSummary, Interval, CONFIDENCE};

/// Disparate impact threshold of the four-fifths rule.
pub const FOUR_FIFTHS: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Accuracy is `1 - WER`.
    SpeechNonTonal,
    /// Accuracy is `1 - CER`.
    SpeechTonal,
    MusicF1,
    SceneAccuracy,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::SpeechNonTonal, Task::SpeechTonal, Task::MusicF1, Task::SceneAccuracy];

    pub fn name(self) -> &'static str {
        match self {
            Task::SpeechNonTonal => "speech_non_tonal",
            Task::SpeechTonal => "speech_tonal",
            Task::MusicF1 => "music_f1",
            Task::SceneAccuracy => "scene_accuracy",
        }
    }

    /// Whether raw scores for this task are error rates.
    pub fn is_error_rate(self) -> bool {
        matches!(self, Task::SpeechNonTonal | Task::SpeechTonal)
    }

    /// Name of the underlying measurement.
    pub fn metric(self) -> &'static str {
        match self {
            Task::SpeechNonTonal => "WER",
            Task::SpeechTonal => "CER",
            Task::MusicF1 => "F1",
            Task::SceneAccuracy => "accuracy",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Task::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| Error::Data(format!("unknown task '{s}' (expected one of speech_non_tonal, speech_tonal, music_f1, scene_accuracy)")))
    }
}

/// One group's accuracy, optionally with the per-item scores behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult<T> {
    pub group_id: String,
    pub task: Task,
    /// Per-item accuracies in `[0, 1]`.
    pub per_sample_scores: Option<Vec<T>>,
    /// Accuracy in percent.
    pub summary_acc: T,
}

impl<T: Real> GroupResult<T> {
    /// A group known only by its accuracy in percent.
    pub fn from_summary(group_id: impl Into<String>, task: Task, acc_pct: T) -> Result<Self> {
        if !(acc_pct >= T::zero() && acc_pct <= T::lit(100.0)) {
            return Err(Error::Data(format!("accuracy {acc_pct} outside [0, 100]")));
        }
        Ok(Self { group_id: group_id.into(), task, per_sample_scores: None, summary_acc: acc_pct })
    }

    /// A group known by its error rate in percent.
    pub fn from_error_pct(group_id: impl Into<String>, task: Task, err_pct: T) -> Result<Self> {
        Self::from_summary(group_id, task, T::lit(100.0) - err_pct)
    }

    /// Per-item accuracies in `[0, 1]`; the summary is their mean.
    pub fn from_scores(group_id: impl Into<String>, task: Task, scores: Vec<T>) -> Result<Self> {
        let group_id = group_id.into();
        if scores.is_empty() {
            return Err(Error::EmptyInput(format!("group '{group_id}' has no scores")));
        }
        if let Some(s) = scores.iter().find(|&&s| !(s >= T::zero() && s <= T::one())) {
            return Err(Error::Data(format!("group '{group_id}': score {s} outside [0, 1]")));
        }
        let summary_acc = mean(&scores) * T::lit(100.0);
        Ok(Self { group_id, task, per_sample_scores: Some(scores), summary_acc })
    }

    /// Per-item error rates, mapped to `max(0, 1 - e)`.
    pub fn from_error_rates(group_id: impl Into<String>, task: Task, errors: &[T]) -> Result<Self> {
        let group_id = group_id.into();
        if let Some(e) = errors.iter().find(|e| !(**e >= T::zero()) || !e.is_finite()) {
            return Err(Error::Data(format!("group '{group_id}': error rate {e} must be finite and non-negative")));
        }
        let scores = errors.iter().map(|&e| (T::one() - e).max(T::zero())).collect();
        Self::from_scores(group_id, task, scores)
    }
}

pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(xs.len())
}

fn extremes<T: Real>(groups: &[GroupResult<T>]) -> Result<(T, T)> {
    if groups.is_empty() {
        return Err(Error::EmptyInput("no groups".into()));
    }
    let accs = groups.iter().map(|g| g.summary_acc);
    let lo = accs.clone().fold(T::infinity(), T::min);
    let hi = accs.fold(T::neg_infinity(), T::max);
    Ok((lo, hi))
}

/// Lowest group accuracy.
pub fn worst_group_score<T: Real>(groups: &[GroupResult<T>]) -> Result<T> {
    Ok(extremes(groups)?.0)
}

/// Largest pairwise accuracy difference, `max - min`.
pub fn performance_gap<T: Real>(groups: &[GroupResult<T>]) -> Result<T> {
    if groups.len() < 2 {
        return Err(domain(format!("performance gap needs at least two groups, got {}", groups.len())));
    }
    let (lo, hi) = extremes(groups)?;
    Ok(hi - lo)
}

/// `min / max` of group accuracies.
pub fn disparate_impact<T: Real>(groups: &[GroupResult<T>]) -> Result<T> {
    if groups.len() < 2 {
        return Err(domain(format!("disparate impact needs at least two groups, got {}", groups.len())));
    }
    let (lo, hi) = extremes(groups)?;
    if hi <= T::zero() {
        return Err(Error::Data("every group has zero accuracy; disparate impact is undefined".into()));
    }
    Ok(lo / hi)
}

pub fn passes_four_fifths<T: Real>(rho: T) -> bool {
    rho >= T::lit(FOUR_FIFTHS)
}

/// Point estimates of the three metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FairnessMetrics<T> {
    pub wgs: T,
    pub gap: T,
    pub rho: T,
    pub four_fifths_pass: bool,
}

pub fn fairness_metrics<T: Real>(groups: &[GroupResult<T>]) -> Result<FairnessMetrics<T>> {
    let rho = disparate_impact(groups)?;
    Ok(FairnessMetrics {
        wgs: worst_group_score(groups)?,
        gap: performance_gap(groups)?,
        rho,
        four_fifths_pass: passes_four_fifths(rho),
    })
}

/// `100 * (base - candidate) / base` for two gaps.
pub fn gap_reduction_pct<T: Real>(baseline_gap: T, candidate_gap: T) -> Result<T> {
    if !(baseline_gap > T::zero()) {
        return Err(domain(format!("baseline gap {baseline_gap} must be positive")));
    }
    Ok(T::lit(100.0) * (baseline_gap - candidate_gap) / baseline_gap)
}

pub fn gap_reduction(baseline: &FairnessReport, candidate: &FairnessReport) -> Result<f64> {
    gap_reduction_pct(baseline.gap, candidate.gap)
}

/// Percentages shown with one decimal.
pub fn fmt_pct<T: Real>(x: T) -> String {
    format!("{:.1}", x.as_f64())
}

/// Disparate impact shown with two decimals.
pub fn fmt_rho<T: Real>(x: T) -> String {
    format!("{:.2}", x.as_f64())
}

pub fn verdict_line(pass: bool) -> String {
    format!("{} four-fifths rule", if pass { "PASS" } else { "FAIL" })
}
