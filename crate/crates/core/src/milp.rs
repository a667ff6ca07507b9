//! Best-bound branch-and-bound over binary variables.
//!
//! One warm simplex instance is reused across all nodes: a node only changes
//! binary bounds, so the previous basis is a cheap starting point.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use log::{debug, trace};
use serde::{Deserialize, Serialize};

use crate::lp::{Basis, Cmp, LinearProgram, LpOptions, LpStatus, Simplex};

#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    /// Columns restricted to {0, 1}.
    pub binaries: Vec<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MipError {
    #[error("binary index {0} is not a column")]
    BadIndex(usize),
    #[error("binary column `{0}` must have bounds within [0, 1]")]
    BadBounds(String),
}

impl MixedIntegerProgram {
    pub fn new(lp: LinearProgram, binaries: Vec<usize>) -> Result<Self, MipError> {
        for &j in &binaries {
            if j >= lp.num_vars() {
                return Err(MipError::BadIndex(j));
            }
            if lp.lower[j] < 0.0 || lp.upper[j] > 1.0 || lp.lower[j] > lp.upper[j] {
                return Err(MipError::BadBounds(lp.var_labels[j].clone()));
            }
        }
        Ok(Self { lp, binaries })
    }
}

/// Which assignments a no-good cut removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NogoodScope {
    /// Only the exact pattern: the listed binaries at 0 and all others at 1.
    Exact,
    /// Every assignment with the listed binaries at 0, whatever the rest.
    Supersets,
}

/// Appends a cut excluding the given zero pattern over the binaries.
pub fn add_nogood_cut(
    mip: &mut MixedIntegerProgram,
    zeros: &[usize],
    scope: NogoodScope,
    label: &str,
) {
    debug_assert!(zeros.iter().all(|j| mip.binaries.contains(j)));
    let mut coeffs: Vec<(usize, f64)> = zeros.iter().map(|&j| (j, 1.0)).collect();
    let mut rhs = 1.0;
    if scope == NogoodScope::Exact {
        for &j in &mip.binaries {
            if !zeros.contains(&j) {
                coeffs.push((j, -1.0));
                rhs -= 1.0;
            }
        }
    }
    mip.lp.add_row(label, coeffs, Cmp::Ge, rhs);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MipOptions {
    pub gap_rel: f64,
    pub gap_abs: f64,
    pub tol_int: f64,
    pub node_limit: usize,
    pub keep_log: bool,
    pub lp: LpOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            gap_rel: 1e-6,
            gap_abs: 1e-9,
            tol_int: 1e-6,
            node_limit: 1_000_000,
            keep_log: false,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node limit reached; the incumbent (if any) comes with an honest gap.
    Limit,
    NumericalBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeEvent {
    Infeasible,
    Pruned,
    Branched,
    Incumbent,
    Integral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node: usize,
    pub depth: usize,
    /// LP relaxation value at this node (NaN when infeasible).
    pub relaxation: f64,
    /// Incumbent value after processing the node.
    pub incumbent: Option<f64>,
    pub event: NodeEvent,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    /// Absolute gap `objective - bound`.
    pub gap: f64,
    pub x: Vec<f64>,
    pub nodes: usize,
    /// Simplex iterations summed over all node solves.
    pub lp_iterations: usize,
    pub log: Vec<NodeRecord>,
    /// Root basis, reusable as a warm start after cuts are appended.
    pub root_basis: Option<Basis>,
}

struct Node {
    key: f64,
    seq: usize,
    depth: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: smallest bound first, then newest node (depth first on ties).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Node relaxations kept across re-solves of a program that only gains rows
/// between calls. A cached optimum stays optimal while it satisfies the rows
/// appended since, and an infeasible node stays infeasible.
#[derive(Debug, Clone, Default)]
pub struct NodeCache {
    shape: Option<(usize, Vec<usize>)>,
    entries: HashMap<Vec<(usize, bool)>, Cached>,
    pub hits: usize,
}

#[derive(Debug, Clone)]
enum Cached {
    Infeasible,
    Optimal {
        rows: usize,
        objective: f64,
        x: Vec<f64>,
    },
}

impl NodeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn sync(&mut self, mip: &MixedIntegerProgram) {
        let shape = (mip.lp.num_vars(), mip.binaries.clone());
        if self.shape.as_ref() != Some(&shape) {
            self.entries.clear();
            self.shape = Some(shape);
        }
    }

    fn lookup(&mut self, key: &[(usize, bool)], lp: &LinearProgram, tol: f64) -> Option<NodeLp> {
        let hit = match self.entries.get(key)? {
            Cached::Infeasible => NodeLp {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: Vec::new(),
                iterations: 0,
            },
            Cached::Optimal { rows, objective, x } => {
                if lp.rows.len() < *rows
                    || lp.rows[*rows..].iter().any(|r| r.violation(r.dot(x)) > tol)
                {
                    return None;
                }
                NodeLp {
                    status: LpStatus::Optimal,
                    objective: *objective,
                    x: x.clone(),
                    iterations: 0,
                }
            }
        };
        self.hits += 1;
        Some(hit)
    }

    fn store(&mut self, key: Vec<(usize, bool)>, rows: usize, sol: &NodeLp) {
        let entry = match sol.status {
            LpStatus::Optimal => Cached::Optimal {
                rows,
                objective: sol.objective,
                x: sol.x.clone(),
            },
            LpStatus::Infeasible => Cached::Infeasible,
            _ => return,
        };
        self.entries.insert(key, entry);
    }
}

struct NodeLp {
    status: LpStatus,
    objective: f64,
    x: Vec<f64>,
    iterations: usize,
}

impl NodeLp {
    fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves the relaxation with the binaries at their base bounds except for
/// `fixings`; the flag reports whether the simplex actually ran.
fn node_lp(
    simplex: &mut Simplex,
    mip: &MixedIntegerProgram,
    fixings: &[(usize, f64)],
    cache: &mut Option<&mut NodeCache>,
    tol: f64,
) -> (NodeLp, bool) {
    let mut key: Vec<(usize, bool)> = fixings.iter().map(|&(j, v)| (j, v > 0.5)).collect();
    key.sort_unstable();
    if let Some(c) = cache.as_deref_mut() {
        if let Some(hit) = c.lookup(&key, &mip.lp, tol) {
            return (hit, false);
        }
    }
    for &j in &mip.binaries {
        simplex.set_bounds(j, mip.lp.lower[j], mip.lp.upper[j]);
    }
    for &(j, v) in fixings {
        simplex.set_bounds(j, v, v);
    }
    let sol = simplex.solve();
    let out = NodeLp {
        status: sol.status,
        objective: sol.objective,
        x: sol.x,
        iterations: sol.iterations,
    };
    if let Some(c) = cache.as_deref_mut() {
        c.store(key, mip.lp.rows.len(), &out);
    }
    (out, true)
}

pub fn solve_mip(mip: &MixedIntegerProgram, opts: &MipOptions) -> MipSolution {
    solve_mip_with(mip, opts, None, None)
}

pub fn solve_mip_with(
    mip: &MixedIntegerProgram,
    opts: &MipOptions,
    warm: Option<&Basis>,
    mut cache: Option<&mut NodeCache>,
) -> MipSolution {
    let lp = &mip.lp;
    let n = lp.num_vars();
    let mut simplex = Simplex::new(lp, opts.lp);
    if let Some(b) = warm {
        simplex.load_basis(b);
    }
    if let Some(c) = cache.as_deref_mut() {
        c.sync(mip);
    }
    let tol = opts.lp.tol_feas;

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        key: f64::NEG_INFINITY,
        seq: 0,
        depth: 0,
        fixings: Vec::new(),
    });
    let mut seq = 1;
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut log = Vec::new();
    let mut root_basis = None;
    let mut breakdown = false;
    let mut global_bound = f64::NEG_INFINITY;

    let close_enough =
        |inc: f64, bound: f64| inc - bound <= opts.gap_abs.max(opts.gap_rel * inc.abs());

    while let Some(node) = heap.pop() {
        global_bound = node.key;
        if let Some((inc, _)) = &incumbent {
            if close_enough(*inc, node.key) {
                heap.push(node);
                break;
            }
        }
        if nodes >= opts.node_limit {
            heap.push(node);
            break;
        }
        nodes += 1;

        let (sol, solved) = node_lp(&mut simplex, mip, &node.fixings, &mut cache, tol);
        lp_iterations += sol.iterations;
        if node.depth == 0 && solved {
            root_basis = Some(simplex.basis());
        }
        let mut record = |relaxation: f64, event: NodeEvent, inc: &Option<(f64, Vec<f64>)>| {
            if opts.keep_log {
                log.push(NodeRecord {
                    node: nodes,
                    depth: node.depth,
                    relaxation,
                    incumbent: inc.as_ref().map(|(v, _)| *v),
                    event,
                    iterations: sol.iterations,
                });
            }
        };
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                record(f64::NAN, NodeEvent::Infeasible, &incumbent);
                continue;
            }
            LpStatus::Unbounded if node.depth == 0 => {
                return MipSolution {
                    status: MipStatus::Unbounded,
                    objective: f64::NEG_INFINITY,
                    bound: f64::NEG_INFINITY,
                    gap: f64::NAN,
                    x: vec![f64::NAN; n],
                    nodes,
                    lp_iterations,
                    log,
                    root_basis,
                };
            }
            _ => {
                debug!("node {nodes}: LP status {:?}", sol.status);
                breakdown = true;
                continue;
            }
        }
        let relax = sol.objective;
        if let Some((inc, _)) = &incumbent {
            if relax >= *inc || close_enough(*inc, relax) {
                record(relax, NodeEvent::Pruned, &incumbent);
                continue;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        for &j in &mip.binaries {
            let f = sol.x[j] - sol.x[j].floor();
            let frac = f.min(1.0 - f);
            if frac > opts.tol_int && branch.map_or(true, |(_, bf)| frac > bf) {
                branch = Some((j, frac));
            }
        }

        match branch {
            None => {
                // Re-solve with binaries snapped so continuous values are exact.
                let snapped: Vec<(usize, f64)> = mip
                    .binaries
                    .iter()
                    .map(|&j| (j, sol.x[j].round()))
                    .collect();
                let (exact, _) = node_lp(&mut simplex, mip, &snapped, &mut cache, tol);
                lp_iterations += exact.iterations;
                let (value, x) = if exact.is_optimal() {
                    (exact.objective, exact.x)
                } else {
                    (relax, sol.x)
                };
                let improves = incumbent.as_ref().map_or(true, |(inc, _)| value < *inc);
                if improves {
                    trace!("node {nodes}: incumbent {value}");
                    incumbent = Some((value, x));
                    record(relax, NodeEvent::Incumbent, &incumbent);
                } else {
                    record(relax, NodeEvent::Integral, &incumbent);
                }
            }
            Some((j, _)) => {
                record(relax, NodeEvent::Branched, &incumbent);
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        key: relax,
                        seq,
                        depth: node.depth + 1,
                        fixings,
                    });
                    seq += 1;
                }
            }
        }
    }

    let open_bound = heap.peek().map(|n| n.key);
    match incumbent {
        Some((value, x)) => {
            let bound = open_bound.map_or(value, |b| b.min(value));
            let status = if heap.is_empty() || close_enough(value, bound) {
                if breakdown {
                    MipStatus::NumericalBreakdown
                } else {
                    MipStatus::Optimal
                }
            } else {
                MipStatus::Limit
            };
            MipSolution {
                status,
                objective: value,
                bound,
                gap: value - bound,
                x,
                nodes,
                lp_iterations,
                log,
                root_basis,
            }
        }
        None => {
            let status = if breakdown {
                MipStatus::NumericalBreakdown
            } else if heap.is_empty() {
                MipStatus::Infeasible
            } else {
                MipStatus::Limit
            };
            MipSolution {
                status,
                objective: f64::INFINITY,
                bound: open_bound.unwrap_or(global_bound),
                gap: f64::INFINITY,
                x: vec![f64::NAN; n],
                nodes,
                lp_iterations,
                log,
                root_basis,
            }
        }
    }
}
