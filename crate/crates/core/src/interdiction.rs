//! Worst-case attacks and ranked critical-attack-vector enumeration.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::Network;
use crate::lp::{solve_lp, LpStatus};
use crate::milp::{add_nogood_cut, solve_mip_with, MipOptions, MipStatus, NodeCache, NogoodScope};
use crate::opf::{
    build_interdiction_mip, parametric, InterdictionMip, LacConfig, MipConfig, Model, OpfError,
    ParametricLp,
};

/// Sorted, deduplicated set of attacked undirected branch ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttackVector(Vec<u32>);

impl AttackVector {
    pub fn new(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut v: Vec<u32> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, other: &AttackVector) -> bool {
        self.0.iter().all(|id| other.0.binary_search(id).is_ok())
    }

    /// Canonical text key, e.g. `3+7`; the empty attack is `-`.
    pub fn key(&self) -> String {
        if self.0.is_empty() {
            return "-".into();
        }
        self.0
            .iter()
            .map(|id| id.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl fmt::Display for AttackVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}}}",
            self.0
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// Canonical order: fewer branches first, then lexicographic ids.
impl Ord for AttackVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for AttackVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InterdictionError {
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error("brute force needs {0} lower-level solves, above the guard of {BRUTE_FORCE_GUARD}")]
    Guard(usize),
    #[error("lower-level LP for attack {attack} ended with status {status:?}")]
    LowerLevel {
        attack: AttackVector,
        status: LpStatus,
    },
    #[error("interdiction MIP ended with status {0:?}")]
    Mip(MipStatus),
    #[error("invalid enumeration limits: {0}")]
    Limits(String),
}

pub const BRUTE_FORCE_GUARD: usize = 20_000;

/// Solver settings shared by every interdiction entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lac: LacConfig,
    pub mip: MipConfig,
    pub branch_and_bound: MipOptions,
    /// Objectives closer than this (per-unit) are ties.
    pub tie_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lac: LacConfig::default(),
            mip: MipConfig::default(),
            branch_and_bound: MipOptions {
                gap_rel: 1e-9,
                gap_abs: 1e-9,
                ..MipOptions::default()
            },
            tie_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationLimits {
    /// `None` enumerates until no damaging attack remains.
    pub max_solutions: Option<usize>,
    pub threshold: f64,
}

impl EnumerationLimits {
    pub fn for_model(model: Model) -> Self {
        match model {
            Model::Dc => Self {
                max_solutions: Some(50),
                threshold: 0.5,
            },
            Model::Lac => Self {
                max_solutions: Some(5),
                threshold: 0.5,
            },
        }
    }

    pub fn exhaustive() -> Self {
        Self {
            max_solutions: None,
            threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), InterdictionError> {
        if self.max_solutions == Some(0) {
            return Err(InterdictionError::Limits(
                "max solutions must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(InterdictionError::Limits(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CountLimit,
    Threshold,
    /// No further attack sheds more than the intact network.
    Exhausted,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavEntry {
    pub t: usize,
    pub a: Model,
    pub budget: usize,
    pub n: usize,
    pub attack: AttackVector,
    pub zeta_pu: f64,
    pub zeta_mw: f64,
    pub gap: f64,
    /// Set when the branch-and-bound stopped at its node limit.
    #[serde(default, skip_serializing_if = "is_false")]
    pub solver_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavList {
    pub t: usize,
    pub a: Model,
    pub budget: usize,
    pub entries: Vec<CavEntry>,
    pub stop: StopReason,
    /// Shed of the intact network.
    pub no_attack_pu: f64,
}

impl CavList {
    pub fn to_jsonl(&self) -> String {
        entries_to_jsonl(&self.entries)
    }

    pub fn position(&self, attack: &AttackVector) -> Option<usize> {
        self.entries.iter().position(|e| &e.attack == attack)
    }

    pub fn any_solver_limit(&self) -> bool {
        self.entries.iter().any(|e| e.solver_limit)
    }

    /// Copy with each entry's gap and limit flag taken from `other` where
    /// the attack matches; used to compare lists from different solvers.
    pub fn with_gaps_of(mut self, other: &CavList) -> CavList {
        for e in &mut self.entries {
            if let Some(o) = other.entries.iter().find(|o| o.attack == e.attack) {
                e.gap = o.gap;
                e.solver_limit = o.solver_limit;
            }
        }
        self
    }
}

pub fn entries_to_jsonl(entries: &[CavEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("entry serializes"));
        s.push('\n');
    }
    s
}

pub fn entries_from_jsonl(text: &str) -> Result<Vec<CavEntry>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Per-unit shed of one attack, rounded to 1e-9 so that tied attacks report
/// identical objectives.
fn lower_level_shed(
    par: &ParametricLp,
    net: &Network,
    out: &[usize],
) -> Result<f64, InterdictionError> {
    let sol = solve_lp(&par.with_outages(out));
    if !sol.is_optimal() {
        let attack = AttackVector::new(out.iter().map(|&k| net.branches[k].id));
        return Err(InterdictionError::LowerLevel {
            attack,
            status: sol.status,
        });
    }
    Ok((sol.objective * 1e9).round() / 1e9)
}

fn to_attack(net: &Network, out: &[usize]) -> AttackVector {
    AttackVector::new(out.iter().map(|&k| net.branches[k].id))
}

struct Ctx<'a> {
    net: &'a Network,
    model: Model,
    budget: usize,
    t: usize,
}

impl Ctx<'_> {
    fn entry(&self, n: usize, attack: AttackVector, zeta: f64, gap: f64, limit: bool) -> CavEntry {
        CavEntry {
            t: self.t,
            a: self.model,
            budget: self.budget,
            n,
            attack,
            zeta_pu: zeta,
            zeta_mw: zeta * self.net.base_mva,
            gap,
            solver_limit: limit,
        }
    }
}

fn limit_stop(limits: &EnumerationLimits, entries: &[CavEntry]) -> Option<StopReason> {
    let n_max = limits.max_solutions?;
    let n = entries.len();
    if n < n_max {
        return None;
    }
    if entries[n - 1].zeta_pu < limits.threshold * entries[0].zeta_pu {
        Some(if n == n_max {
            StopReason::CountLimit
        } else {
            StopReason::Threshold
        })
    } else {
        None
    }
}

struct Found {
    out: Vec<usize>,
    attack: AttackVector,
    zeta: f64,
    gap: f64,
    limit: bool,
}

fn enumerate_inner(
    net: &Network,
    model: Model,
    budget: usize,
    t: usize,
    config: &SolverConfig,
    mut stop: impl FnMut(&[CavEntry]) -> Option<StopReason>,
) -> Result<CavList, InterdictionError> {
    let ctx = Ctx {
        net,
        model,
        budget,
        t,
    };
    let mut im = build_interdiction_mip(net, model, budget, &config.lac, &config.mip)?;
    let base = lower_level_shed(&im.par, net, &[])?;
    let tol = config.tie_tol;
    let opts = config.branch_and_bound;
    let mut entries: Vec<CavEntry> = Vec::new();
    let mut subs: Vec<AttackVector> = Vec::new();
    let mut warm = None;
    let mut cuts = 0usize;

    let mut cache = NodeCache::new();

    let next = |im: &mut InterdictionMip,
                warm: &mut Option<crate::lp::Basis>,
                cache: &mut NodeCache|
     -> Result<Option<Found>, InterdictionError> {
        let sol = solve_mip_with(&im.mip, &opts, warm.as_ref(), Some(cache));
        match sol.status {
            MipStatus::Infeasible => return Ok(None),
            MipStatus::Optimal | MipStatus::Limit if !sol.x.is_empty() => {}
            s => return Err(InterdictionError::Mip(s)),
        }
        if sol.root_basis.is_some() {
            *warm = sol.root_basis.clone();
        }
        let out = im.attacked(&sol.x);
        let zeta = lower_level_shed(&im.par, net, &out)?;
        if (zeta - im.shed(&sol)).abs() > 1e-6 * zeta.abs().max(1.0) {
            log::warn!(
                "MIP shed {} differs from lower-level shed {zeta} for {:?}",
                im.shed(&sol),
                out
            );
        }
        Ok(Some(Found {
            attack: to_attack(net, &out),
            out,
            zeta,
            gap: sol.gap,
            limit: sol.status == MipStatus::Limit,
        }))
    };

    let mut pending: Option<Found> = None;
    let reason = 'outer: loop {
        let head = match pending.take() {
            Some(f) => f,
            None => match next(&mut im, &mut warm, &mut cache)? {
                Some(f) => f,
                None => break StopReason::Exhausted,
            },
        };
        if head.zeta <= base + tol {
            break StopReason::Exhausted;
        }
        let top = head.zeta;
        let mut batch = vec![head];
        loop {
            let last = batch.last().unwrap();
            let zeros: Vec<usize> = last.out.iter().map(|&k| im.z_col(k).unwrap()).collect();
            cuts += 1;
            add_nogood_cut(
                &mut im.mip,
                &zeros,
                NogoodScope::Exact,
                &format!("exclude_exact[{cuts}]"),
            );
            match next(&mut im, &mut warm, &mut cache)? {
                Some(f) if f.zeta >= top - tol => batch.push(f),
                other => {
                    pending = other;
                    break;
                }
            }
        }
        batch.sort_by(|a, b| a.attack.cmp(&b.attack));
        for f in batch {
            if subs.iter().any(|s| s.is_subset_of(&f.attack)) {
                continue;
            }
            if f.out.len() < budget {
                let zeros: Vec<usize> = f.out.iter().map(|&k| im.z_col(k).unwrap()).collect();
                cuts += 1;
                add_nogood_cut(
                    &mut im.mip,
                    &zeros,
                    NogoodScope::Supersets,
                    &format!("exclude_supersets[{cuts}]"),
                );
                subs.push(f.attack.clone());
                pending = None;
            }
            entries.push(ctx.entry(entries.len() + 1, f.attack, f.zeta, f.gap, f.limit));
            if let Some(r) = stop(&entries) {
                break 'outer r;
            }
        }
        if let Some(p) = &pending {
            if subs.iter().any(|s| s.is_subset_of(&p.attack)) {
                pending = None;
            }
        }
    };
    Ok(CavList {
        t,
        a: model,
        budget,
        entries,
        stop: reason,
        no_attack_pu: base,
    })
}

/// Rank-1 attack: the canonically first of the maximum-shed attacks, or the
/// empty attack when nothing sheds more than the intact network.
pub fn solve_worst_case(
    net: &Network,
    model: Model,
    budget: usize,
    t: usize,
    config: &SolverConfig,
) -> Result<CavEntry, InterdictionError> {
    let list = enumerate_inner(net, model, budget, t, config, |e| {
        (!e.is_empty()).then_some(StopReason::CountLimit)
    })?;
    Ok(match list.entries.into_iter().next() {
        Some(e) => e,
        None => Ctx {
            net,
            model,
            budget,
            t,
        }
        .entry(1, AttackVector::empty(), list.no_attack_pu, 0.0, false),
    })
}

/// Ranked critical attack vectors by repeated MIP solves with exclusion cuts.
pub fn enumerate_cavs(
    net: &Network,
    model: Model,
    budget: usize,
    t: usize,
    limits: &EnumerationLimits,
    config: &SolverConfig,
) -> Result<CavList, InterdictionError> {
    limits.validate()?;
    enumerate_inner(net, model, budget, t, config, |e| limit_stop(limits, e))
}

/// The same ranked list by solving the lower level for every attack of at
/// most `budget` attackable branches.
pub fn brute_force_cavs(
    net: &Network,
    model: Model,
    budget: usize,
    t: usize,
    config: &SolverConfig,
) -> Result<CavList, InterdictionError> {
    let attackable = net.attackable_branches();
    let mut count = 0usize;
    let mut binom = 1usize;
    for k in 0..=budget.min(attackable.len()) {
        if k > 0 {
            binom = binom * (attackable.len() - k + 1) / k;
        }
        count = count.saturating_add(binom);
        if count > BRUTE_FORCE_GUARD {
            return Err(InterdictionError::Guard(count));
        }
    }
    let par = parametric(net, model, &config.lac)?;
    let base = lower_level_shed(&par, net, &[])?;
    let tol = config.tie_tol;
    let mut all: Vec<(AttackVector, f64)> = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
    while let Some((start, out)) = stack.pop() {
        if !out.is_empty() {
            let zeta = lower_level_shed(&par, net, &out)?;
            if zeta > base + tol {
                all.push((to_attack(net, &out), zeta));
            }
        }
        if out.len() < budget {
            for i in start..attackable.len() {
                let mut o = out.clone();
                o.push(attackable[i]);
                stack.push((i + 1, o));
            }
        }
    }
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let ctx = Ctx {
        net,
        model,
        budget,
        t,
    };
    let mut entries: Vec<CavEntry> = Vec::new();
    let mut subs: Vec<AttackVector> = Vec::new();
    let mut done = vec![false; all.len()];
    loop {
        let excluded =
            |a: &AttackVector, subs: &[AttackVector]| subs.iter().any(|s| s.is_subset_of(a));
        let Some(h) = (0..all.len()).find(|&i| !done[i] && !excluded(&all[i].0, &subs)) else {
            break;
        };
        let top = all[h].1;
        let mut batch: Vec<usize> = (0..all.len())
            .filter(|&i| !done[i] && all[i].1 >= top - tol && !excluded(&all[i].0, &subs))
            .collect();
        batch.sort_by(|&a, &b| all[a].0.cmp(&all[b].0));
        for i in batch {
            done[i] = true;
            let (attack, zeta) = &all[i];
            if excluded(attack, &subs) {
                continue;
            }
            if attack.len() < budget {
                subs.push(attack.clone());
            }
            entries.push(ctx.entry(entries.len() + 1, attack.clone(), *zeta, 0.0, false));
        }
    }
    Ok(CavList {
        t,
        a: model,
        budget,
        entries,
        stop: StopReason::Exhausted,
        no_attack_pu: base,
    })
}
