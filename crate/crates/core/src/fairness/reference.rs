//! Published per-group results of the seven front-ends, used to recompute
//! the comparison rows and the figure data without retraining anything.

use serde::Serialize;

use super::{fairness_metrics, FairnessMetrics, GroupResult, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Speech,
    Music,
    Scenes,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Speech, Domain::Music, Domain::Scenes];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Speech => "speech",
            Domain::Music => "music",
            Domain::Scenes => "scenes",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown domain '{s}' (expected speech, music or scenes)")))
    }

    /// Group ids and tasks, disadvantaged group first.
    pub fn groups(self) -> [(&'static str, Task); 2] {
        match self {
            Domain::Speech => [("tonal", Task::SpeechTonal), ("non_tonal", Task::SpeechNonTonal)],
            Domain::Music => [("non_western", Task::MusicF1), ("western", Task::MusicF1)],
            Domain::Scenes => [("europe_1", Task::SceneAccuracy), ("europe_2", Task::SceneAccuracy)],
        }
    }
}

/// One front-end's published numbers. Speech values are error rates in
/// percent; music and scene values are F1 / accuracy in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub frontend: &'static str,
    pub speech: Option<[f64; 2]>,
    pub music: Option<[f64; 2]>,
    pub scenes: Option<[f64; 2]>,
    /// Inference cost relative to mel.
    pub cost: f64,
}

pub const REFERENCE: [ReferenceRow; 7] = [
    ReferenceRow { frontend: "mel", speech: Some([31.2, 18.7]), music: Some([56.7, 72.4]), scenes: Some([71.2, 76.8]), cost: 1.00 },
    ReferenceRow { frontend: "erb", speech: Some([26.4, 17.8]), music: Some([62.8, 73.1]), scenes: Some([72.6, 77.2]), cost: 1.01 },
    ReferenceRow { frontend: "bark", speech: Some([27.2, 18.1]), music: Some([61.9, 72.8]), scenes: Some([72.2, 76.9]), cost: 1.01 },
    ReferenceRow { frontend: "cqt", speech: Some([28.8, 19.2]), music: Some([65.3, 72.9]), scenes: None, cost: 1.15 },
    ReferenceRow { frontend: "leaf", speech: Some([25.8, 17.5]), music: Some([62.4, 73.5]), scenes: Some([72.5, 77.5]), cost: 1.08 },
    ReferenceRow { frontend: "sincnet", speech: Some([30.8, 18.5]), music: Some([58.3, 72.5]), scenes: Some([71.4, 76.9]), cost: 1.06 },
    ReferenceRow { frontend: "mel-pcen", speech: Some([28.9, 18.2]), music: Some([59.2, 72.6]), scenes: Some([72.3, 77.1]), cost: 1.04 },
];

pub fn reference_row(frontend: &str) -> Result<&'static ReferenceRow> {
    REFERENCE
        .iter()
        .find(|r| r.frontend == frontend)
        .ok_or_else(|| Error::Config(format!("no published results for front-end '{frontend}'")))
}

/// Group accuracies of `frontend` in `domain`, or `None` when not evaluated.
pub fn reference_groups(frontend: &str, domain: Domain) -> Result<Option<Vec<GroupResult<f64>>>> {
    let row = reference_row(frontend)?;
    let vals = match domain {
        Domain::Speech => row.speech,
        Domain::Music => row.music,
        Domain::Scenes => row.scenes,
    };
    let Some(vals) = vals else { return Ok(None) };
    domain
        .groups()
        .iter()
        .zip(vals)
        .map(|(&(id, task), v)| {
            if task.is_error_rate() {
                GroupResult::from_error_pct(id, task, v)
            } else {
                GroupResult::from_summary(id, task, v)
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainComparison {
    pub domain: Domain,
    pub baseline: &'static str,
    pub baseline_metrics: FairnessMetrics<f64>,
    pub best: &'static str,
    pub best_metrics: FairnessMetrics<f64>,
}

/// Mel against the front-end with the highest mean group accuracy in the domain.
pub fn compare_domain(domain: Domain) -> Result<DomainComparison> {
    let base = reference_groups("mel", domain)?.expect("mel is evaluated everywhere");
    let mut best: Option<(&'static str, f64, Vec<GroupResult<f64>>)> = None;
    for row in &REFERENCE {
        if let Some(g) = reference_groups(row.frontend, domain)? {
            let avg = g.iter().map(|x| x.summary_acc).sum::<f64>() / g.len() as f64;
            if best.as_ref().is_none_or(|b| avg > b.1) {
                best = Some((row.frontend, avg, g));
            }
        }
    }
    let (name, _, groups) = best.expect("at least mel");
    Ok(DomainComparison {
        domain,
        baseline: "mel",
        baseline_metrics: fairness_metrics(&base)?,
        best: name,
        best_metrics: fairness_metrics(&groups)?,
    })
}
