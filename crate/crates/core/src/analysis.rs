//! Cross-formulation comparison of CAV lists and scoring across time steps.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::interdiction::{AttackVector, CavList};
use crate::opf::Model;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("lists disagree on {field}: {left} vs {right}")]
    Mismatch {
        field: &'static str,
        left: String,
        right: String,
    },
    #[error("attack {key} appears twice in the list for t={t}")]
    DuplicateAttack { t: usize, key: String },
    #[error("time step {0} is given twice")]
    DuplicateStep(usize),
    #[error("no lists to score")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn check_unique(list: &CavList) -> Result<(), AnalysisError> {
    let mut seen = HashSet::new();
    for e in &list.entries {
        if !seen.insert(&e.attack) {
            return Err(AnalysisError::DuplicateAttack {
                t: list.t,
                key: e.attack.key(),
            });
        }
    }
    Ok(())
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, AnalysisError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One LAC entry looked up in the DC list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparedEntry {
    pub n: usize,
    pub attack: AttackVector,
    pub zeta_pu: f64,
    pub zeta_mw: f64,
    pub detected: bool,
    /// Rank of the same attack in the DC list.
    pub dc_rank: Option<usize>,
    pub dc_zeta_pu: Option<f64>,
    pub delta_abs_pu: Option<f64>,
    pub delta_abs_mw: Option<f64>,
    /// `None` when undetected, or detected with zero LAC shed.
    pub delta_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub t: usize,
    pub budget: usize,
    pub reference: Model,
    pub candidate: Model,
    pub entries: Vec<ComparedEntry>,
    /// Size of the reference list.
    pub n_reference: usize,
    /// Reference entries absent from the candidate list.
    pub undetected: usize,
    pub u: f64,
    /// Sums over detected entries divided by the full reference list size;
    /// undetected entries count as zero.
    pub psi_abs_pu: f64,
    pub psi_abs_mw: f64,
    pub psi_rel: f64,
    /// Same sums averaged over detected entries only (`None` if none).
    pub psi_abs_pu_detected: Option<f64>,
    pub psi_rel_detected: Option<f64>,
    pub psi_averaging: String,
    pub undetected_mw: f64,
    /// Sum of positive `delta_abs_mw` over detected entries.
    pub underestimated_mw: f64,
    pub warnings: Vec<String>,
}

pub const PSI_AVERAGING: &str = "all reference entries, undetected contribute 0";

/// Looks up every entry of `reference` (normally LAC) in `candidate`
/// (normally DC) and aggregates the detection KPIs.
pub fn compare_formulations(
    reference: &CavList,
    candidate: &CavList,
) -> Result<ComparisonReport, AnalysisError> {
    if reference.t != candidate.t {
        return Err(AnalysisError::Mismatch {
            field: "time step",
            left: reference.t.to_string(),
            right: candidate.t.to_string(),
        });
    }
    if reference.budget != candidate.budget {
        return Err(AnalysisError::Mismatch {
            field: "budget",
            left: reference.budget.to_string(),
            right: candidate.budget.to_string(),
        });
    }
    check_unique(reference)?;
    check_unique(candidate)?;

    let mut warnings = Vec::new();
    let mut entries = Vec::with_capacity(reference.entries.len());
    for e in &reference.entries {
        let hit = candidate.entries.iter().find(|d| d.attack == e.attack);
        let mut c = ComparedEntry {
            n: e.n,
            attack: e.attack.clone(),
            zeta_pu: e.zeta_pu,
            zeta_mw: e.zeta_mw,
            detected: hit.is_some(),
            dc_rank: None,
            dc_zeta_pu: None,
            delta_abs_pu: None,
            delta_abs_mw: None,
            delta_rel: None,
        };
        if let Some(d) = hit {
            let delta = e.zeta_pu - d.zeta_pu;
            c.dc_rank = Some(d.n);
            c.dc_zeta_pu = Some(d.zeta_pu);
            c.delta_abs_pu = Some(delta);
            c.delta_abs_mw = Some(e.zeta_mw - d.zeta_mw);
            if e.zeta_pu != 0.0 {
                c.delta_rel = Some(delta / e.zeta_pu);
            } else {
                let msg = format!(
                    "t={} n={} attack {}: zero shed, relative deviation undefined",
                    reference.t,
                    e.n,
                    e.attack.key()
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        entries.push(c);
    }

    let n_ref = entries.len();
    let undetected = entries.iter().filter(|c| !c.detected).count();
    let detected: Vec<&ComparedEntry> = entries.iter().filter(|c| c.detected).collect();
    let sum_abs: f64 = detected.iter().filter_map(|c| c.delta_abs_pu).sum();
    let sum_abs_mw: f64 = detected.iter().filter_map(|c| c.delta_abs_mw).sum();
    let rel: Vec<f64> = detected.iter().filter_map(|c| c.delta_rel).collect();
    let sum_rel: f64 = rel.iter().sum();
    let per_ref = |s: f64| if n_ref == 0 { 0.0 } else { s / n_ref as f64 };

    Ok(ComparisonReport {
        t: reference.t,
        budget: reference.budget,
        reference: reference.a,
        candidate: candidate.a,
        n_reference: n_ref,
        undetected,
        u: per_ref(undetected as f64),
        psi_abs_pu: per_ref(sum_abs),
        psi_abs_mw: per_ref(sum_abs_mw),
        psi_rel: per_ref(sum_rel),
        psi_abs_pu_detected: (!detected.is_empty()).then(|| sum_abs / detected.len() as f64),
        psi_rel_detected: (!rel.is_empty()).then(|| sum_rel / rel.len() as f64),
        psi_averaging: PSI_AVERAGING.into(),
        undetected_mw: entries
            .iter()
            .filter(|c| !c.detected)
            .map(|c| c.zeta_mw)
            .sum(),
        underestimated_mw: detected
            .iter()
            .filter_map(|c| c.delta_abs_mw)
            .filter(|d| *d > 0.0)
            .sum(),
        entries,
        warnings,
    })
}

#[derive(Serialize)]
struct ComparisonCsvRow {
    t: usize,
    n: usize,
    attack: String,
    zeta_mw: f64,
    detected: bool,
    dc_rank: Option<usize>,
    delta_abs_mw: Option<f64>,
    delta_rel: Option<f64>,
}

#[derive(Serialize)]
struct SummaryCsvRow {
    t: usize,
    budget: usize,
    n_reference: usize,
    undetected: usize,
    u: f64,
    undetected_mw: f64,
    underestimated_mw: f64,
    psi_abs_mw: f64,
    psi_rel: f64,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per reference entry.
    pub fn to_csv(&self) -> Result<String, AnalysisError> {
        csv_string(self.entries.iter().map(|c| ComparisonCsvRow {
            t: self.t,
            n: c.n,
            attack: c.attack.key(),
            zeta_mw: c.zeta_mw,
            detected: c.detected,
            dc_rank: c.dc_rank,
            delta_abs_mw: c.delta_abs_mw,
            delta_rel: c.delta_rel,
        }))
    }
}

/// Per-time-step bar data: undetected and underestimated MW and counts.
pub fn comparison_summary_csv(reports: &[ComparisonReport]) -> Result<String, AnalysisError> {
    csv_string(reports.iter().map(|r| SummaryCsvRow {
        t: r.t,
        budget: r.budget,
        n_reference: r.n_reference,
        undetected: r.undetected,
        u: r.u,
        undetected_mw: r.undetected_mw,
        underestimated_mw: r.underestimated_mw,
        psi_abs_mw: r.psi_abs_mw,
        psi_rel: r.psi_rel,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub key: String,
    pub attack: AttackVector,
    /// Number of time steps whose list contains the attack.
    pub count: usize,
    pub rank_sum: usize,
    pub objective_sum_pu: f64,
    pub objective_sum_mw: f64,
    pub phi_rank: f64,
    pub phi_obj_pu: f64,
    pub phi_obj_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub a: Model,
    pub budget: usize,
    pub steps: usize,
    /// Rows in canonical attack order.
    pub rows: Vec<ScoreRow>,
    /// Keys by ascending rank score.
    pub by_rank: Vec<String>,
    /// Keys by descending objective score.
    pub by_objective: Vec<String>,
}

/// Aggregates appearance counts, rank sums and objective sums per attack.
pub fn score_across_timesteps(lists: &[CavList]) -> Result<ScoreTable, AnalysisError> {
    let first = lists.first().ok_or(AnalysisError::Empty)?;
    let mut ordered: Vec<&CavList> = lists.iter().collect();
    ordered.sort_by_key(|l| l.t);
    for w in ordered.windows(2) {
        if w[0].t == w[1].t {
            return Err(AnalysisError::DuplicateStep(w[0].t));
        }
    }
    for l in &ordered {
        if l.a != first.a {
            return Err(AnalysisError::Mismatch {
                field: "model",
                left: first.a.to_string(),
                right: l.a.to_string(),
            });
        }
        if l.budget != first.budget {
            return Err(AnalysisError::Mismatch {
                field: "budget",
                left: first.budget.to_string(),
                right: l.budget.to_string(),
            });
        }
        check_unique(l)?;
    }

    let steps = ordered.len();
    let mut acc: BTreeMap<AttackVector, (usize, usize, f64, f64)> = BTreeMap::new();
    for l in &ordered {
        for e in &l.entries {
            let s = acc.entry(e.attack.clone()).or_insert((0, 0, 0.0, 0.0));
            s.0 += 1;
            s.1 += e.n;
            s.2 += e.zeta_pu;
            s.3 += e.zeta_mw;
        }
    }
    let t = steps as f64;
    let rows: Vec<ScoreRow> = acc
        .into_iter()
        .map(|(attack, (c, r, y, y_mw))| {
            let cf = c as f64;
            ScoreRow {
                key: attack.key(),
                attack,
                count: c,
                rank_sum: r,
                objective_sum_pu: y,
                objective_sum_mw: y_mw,
                phi_rank: r as f64 * t / (cf * cf),
                phi_obj_pu: (y / cf) * (cf / t),
                phi_obj_mw: (y_mw / cf) * (cf / t),
            }
        })
        .collect();

    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&i, &j| {
        rows[i]
            .phi_rank
            .total_cmp(&rows[j].phi_rank)
            .then(i.cmp(&j))
    });
    let by_rank = idx.iter().map(|&i| rows[i].key.clone()).collect();
    idx.sort_by(|&i, &j| {
        rows[j]
            .phi_obj_pu
            .total_cmp(&rows[i].phi_obj_pu)
            .then(i.cmp(&j))
    });
    let by_objective = idx.iter().map(|&i| rows[i].key.clone()).collect();

    Ok(ScoreTable {
        a: first.a,
        budget: first.budget,
        steps,
        rows,
        by_rank,
        by_objective,
    })
}

#[derive(Serialize)]
struct ScoreCsvRow<'a> {
    position: usize,
    attack: &'a str,
    count: usize,
    rank_sum: usize,
    objective_sum_mw: f64,
    phi_obj_mw: f64,
    phi_rank: f64,
}

impl ScoreTable {
    pub fn row(&self, key: &str) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("score table serializes")
    }

    /// The best `k` attacks by objective score, with the rank score as an
    /// extra column; `None` emits every row.
    pub fn top_by_objective_csv(&self, k: Option<usize>) -> Result<String, AnalysisError> {
        let k = k.unwrap_or(self.by_objective.len());
        csv_string(
            self.by_objective
                .iter()
                .take(k)
                .enumerate()
                .map(|(i, key)| {
                    let r = self.row(key).expect("ranking keys are rows");
                    ScoreCsvRow {
                        position: i + 1,
                        attack: &r.key,
                        count: r.count,
                        rank_sum: r.rank_sum,
                        objective_sum_mw: r.objective_sum_mw,
                        phi_obj_mw: r.phi_obj_mw,
                        phi_rank: r.phi_rank,
                    }
                }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interdiction::{CavEntry, StopReason};

    pub(crate) fn list(a: Model, t: usize, items: &[(&[u32], f64)]) -> CavList {
        CavList {
            t,
            a,
            budget: 2,
            entries: items
                .iter()
                .enumerate()
                .map(|(i, (ids, z))| CavEntry {
                    t,
                    a,
                    budget: 2,
                    n: i + 1,
                    attack: AttackVector::new(ids.iter().copied()),
                    zeta_pu: *z,
                    zeta_mw: z * 100.0,
                    gap: 0.0,
                    solver_limit: false,
                })
                .collect(),
            stop: StopReason::Exhausted,
            no_attack_pu: 0.0,
        }
    }

    #[test]
    fn identical_lists_are_fully_detected() {
        let l = list(Model::Lac, 1, &[(&[1], 0.5), (&[2, 3], 0.4)]);
        let mut d = l.clone();
        d.a = Model::Dc;
        let r = compare_formulations(&l, &d).unwrap();
        assert_eq!(
            (r.undetected, r.u, r.psi_abs_pu, r.psi_rel),
            (0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn two_of_five_missing() {
        let lac = list(
            Model::Lac,
            1,
            &[
                (&[1], 0.5),
                (&[2], 0.4),
                (&[3], 0.3),
                (&[4], 0.2),
                (&[5], 0.1),
            ],
        );
        let dc = list(Model::Dc, 1, &[(&[3], 0.25), (&[1], 0.2), (&[5], 0.1)]);
        let r = compare_formulations(&lac, &dc).unwrap();
        assert_eq!(r.undetected, 2);
        assert_eq!(r.u, 0.4);
        assert_eq!(r.entries[0].dc_rank, Some(2));
        assert!((r.entries[0].delta_abs_pu.unwrap() - 0.3).abs() < 1e-12);
        assert!((r.psi_abs_pu - (0.3 + 0.05 + 0.0) / 5.0).abs() < 1e-12);
        assert!((r.psi_abs_pu_detected.unwrap() - 0.35 / 3.0).abs() < 1e-12);
        assert!((r.undetected_mw - 60.0).abs() < 1e-9);
    }

    #[test]
    fn zero_shed_match_has_null_relative_deviation() {
        let lac = list(Model::Lac, 1, &[(&[1], 0.0)]);
        let dc = list(Model::Dc, 1, &[(&[1], 0.0)]);
        let r = compare_formulations(&lac, &dc).unwrap();
        assert_eq!(r.entries[0].delta_rel, None);
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.psi_rel_detected, None);
    }

    #[test]
    fn mismatched_steps_are_rejected() {
        let lac = list(Model::Lac, 1, &[]);
        let dc = list(Model::Dc, 2, &[]);
        assert!(matches!(
            compare_formulations(&lac, &dc),
            Err(AnalysisError::Mismatch { .. })
        ));
    }

    #[test]
    fn single_occurrence_scores() {
        let mut lists = vec![list(Model::Dc, 1, &[(&[4], 0.05)])];
        for t in 2..=10 {
            lists.push(list(Model::Dc, t, &[]));
        }
        let s = score_across_timesteps(&lists).unwrap();
        let r = s.row("4").unwrap();
        assert!((r.phi_obj_mw - 0.5).abs() < 1e-12);
        assert_eq!(r.phi_rank, 10.0);
    }

    #[test]
    fn duplicate_attack_in_one_step_is_an_error() {
        let l = list(Model::Dc, 1, &[(&[1], 0.2), (&[1], 0.1)]);
        assert!(matches!(
            score_across_timesteps(&[l]),
            Err(AnalysisError::DuplicateAttack { .. })
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let lists = vec![list(Model::Dc, 1, &[(&[1], 0.2), (&[2], 0.1)])];
        let s = score_across_timesteps(&lists).unwrap();
        let csv = s.top_by_objective_csv(Some(1)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("position,attack"));
        assert!(lines[1].starts_with("1,1,"));
    }
}
