use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::interdiction::{entries_from_jsonl, CavList, StopReason};
use crate::opf::Model;

/// One line of `<out>/<model>/Z<budget>/index.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavIndexEntry {
    pub t: usize,
    pub stop: StopReason,
    pub no_attack_pu: f64,
    pub entries: usize,
    pub solver_limit: bool,
}

pub fn budget_dir(out: &Path, model: Model, budget: usize) -> PathBuf {
    out.join(model.to_string()).join(format!("Z{budget}"))
}

/// `<out>/<model>/Z<budget>/t<step>.cavs.jsonl`
pub fn layout_path(out: &Path, model: Model, budget: usize, t: usize) -> PathBuf {
    budget_dir(out, model, budget).join(format!("t{t}.cavs.jsonl"))
}

fn read_err(path: &Path, msg: impl ToString) -> CliError {
    CliError::Read {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

pub fn read_cav_file(
    path: &Path,
    model: Model,
    budget: usize,
    t: usize,
) -> Result<CavList, CliError> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let entries = entries_from_jsonl(&text).map_err(|e| read_err(path, e))?;
    for e in &entries {
        if e.t != t || e.a != model || e.budget != budget {
            return Err(read_err(
                path,
                format!(
                    "entry (t={}, a={}, Z={}) does not belong in this file",
                    e.t, e.a, e.budget
                ),
            ));
        }
    }
    Ok(CavList {
        t,
        a: model,
        budget,
        entries,
        stop: StopReason::Exhausted,
        no_attack_pu: 0.0,
    })
}

fn read_index(dir: &Path) -> Result<BTreeMap<usize, CavIndexEntry>, CliError> {
    let path = dir.join("index.json");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| read_err(&path, e))?;
    let rows: Vec<CavIndexEntry> = serde_json::from_str(&text).map_err(|e| read_err(&path, e))?;
    Ok(rows.into_iter().map(|r| (r.t, r)).collect())
}

/// Every list stored for `(model, budget)`, ordered by step; `steps`
/// restricts which are read.
pub fn read_cav_dir(
    out: &Path,
    model: Model,
    budget: usize,
    steps: Option<&[usize]>,
) -> Result<Vec<CavList>, CliError> {
    let dir = budget_dir(out, model, budget);
    let listing = fs::read_dir(&dir).map_err(|e| read_err(&dir, e))?;
    let mut found = BTreeMap::new();
    for item in listing {
        let item = item.map_err(|e| read_err(&dir, e))?;
        let name = item.file_name();
        let Some(t) = name
            .to_str()
            .and_then(|n| n.strip_prefix('t'))
            .and_then(|n| n.strip_suffix(".cavs.jsonl"))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        if steps.is_none_or(|s| s.contains(&t)) {
            found.insert(t, item.path());
        }
    }
    if let Some(s) = steps {
        if let Some(t) = s.iter().find(|t| !found.contains_key(t)) {
            return Err(read_err(&layout_path(out, model, budget, *t), "missing"));
        }
    }
    let index = read_index(&dir)?;
    found
        .into_iter()
        .map(|(t, path)| {
            let mut list = read_cav_file(&path, model, budget, t)?;
            if let Some(ix) = index.get(&t) {
                list.stop = ix.stop;
                list.no_attack_pu = ix.no_attack_pu;
            }
            Ok(list)
        })
        .collect()
}

/// Budgets under `<out>/<model>` holding enumeration output.
pub fn budgets(out: &Path, model: Model) -> Vec<usize> {
    let Ok(listing) = fs::read_dir(out.join(model.to_string())) else {
        return Vec::new();
    };
    let mut v: Vec<usize> = listing
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("index.json").is_file())
        .filter_map(|e| {
            e.file_name()
                .to_str()
                .and_then(|n| n.strip_prefix('Z'))
                .and_then(|n| n.parse().ok())
        })
        .collect();
    v.sort_unstable();
    v
}
