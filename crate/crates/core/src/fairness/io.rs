//! Results CSV and group-definition JSON.
//!
//! Results have columns `sample_id, group_id, task` and one of `score`
//! (accuracy in [0, 1]) or `error_rate`, plus an optional `frontend`. Group
//! definitions map each `group_id` to `{label, task}`.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroupResult, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDef {
    pub label: String,
    pub task: Task,
}

pub type GroupDefs = BTreeMap<String, GroupDef>;

pub fn parse_group_defs(text: &str) -> Result<GroupDefs> {
    serde_json::from_str(text).map_err(|e| Error::Data(format!("groups JSON: {e}")))
}

pub fn read_group_defs(path: &Path) -> Result<GroupDefs> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_group_defs(&text)
}

struct Columns {
    group: usize,
    task: usize,
    value: usize,
    is_error: bool,
    frontend: Option<usize>,
}

fn columns(headers: &csv::StringRecord) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| find(name).ok_or_else(|| Error::Data(format!("results CSV: missing column '{name}'")));
    need("sample_id")?;
    let (value, is_error) = match (find("score"), find("error_rate")) {
        (Some(i), None) => (i, false),
        (None, Some(i)) => (i, true),
        (Some(_), Some(_)) => return Err(Error::Data("results CSV: give either 'score' or 'error_rate', not both".into())),
        (None, None) => return Err(Error::Data("results CSV: missing column 'score' or 'error_rate'".into())),
    };
    Ok(Columns { group: need("group_id")?, task: need("task")?, value, is_error, frontend: find("frontend") })
}

/// Reads per-item results into groups ordered by group id. Rows whose
/// `frontend` differs from `frontend` are skipped when both are present.
pub fn parse_results<R: Read>(reader: R, defs: Option<&GroupDefs>, frontend: Option<&str>) -> Result<Vec<GroupResult<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Data(format!("results CSV header: {e}")))?.clone();
    let cols = columns(&headers)?;
    let mut groups: BTreeMap<String, (Task, Vec<f64>)> = BTreeMap::new();
    let mut bad = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("line {line}: {e}"));
                continue;
            }
        };
        if let (Some(want), Some(fi)) = (frontend, cols.frontend) {
            if rec.get(fi) != Some(want) {
                continue;
            }
        }
        let field = |k: usize| rec.get(k).unwrap_or("");
        let gid = field(cols.group).to_string();
        let task = match field(cols.task).parse::<Task>() {
            Ok(t) => t,
            Err(e) => {
                bad.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let v = match field(cols.value).parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 && (cols.is_error || v <= 1.0) => v,
            _ => {
                bad.push(format!("line {line}: invalid value '{}'", field(cols.value)));
                continue;
            }
        };
        if let Some(defs) = defs {
            match defs.get(&gid) {
                None => {
                    bad.push(format!("line {line}: group '{gid}' is not defined"));
                    continue;
                }
                Some(d) if d.task != task => {
                    bad.push(format!("line {line}: task {task} does not match group '{gid}' task {}", d.task));
                    continue;
                }
                _ => {}
            }
        }
        let score = if cols.is_error { (1.0 - v).max(0.0) } else { v };
        let entry = groups.entry(gid.clone()).or_insert((task, Vec::new()));
        if entry.0 != task {
            bad.push(format!("line {line}: group '{gid}' mixes tasks {} and {task}", entry.0));
            continue;
        }
        entry.1.push(score);
    }
    if !bad.is_empty() {
        return Err(Error::Data(format!("malformed results rows:\n  {}", bad.join("\n  "))));
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput("results CSV has no rows".into()));
    }
    groups.into_iter().map(|(id, (task, scores))| GroupResult::from_scores(id, task, scores)).collect()
}

pub fn read_results(path: &Path, defs: Option<&GroupDefs>, frontend: Option<&str>) -> Result<Vec<GroupResult<f64>>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_results(file, defs, frontend)
}
