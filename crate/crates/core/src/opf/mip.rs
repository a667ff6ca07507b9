use serde::{Deserialize, Serialize};

use super::{parametric, LacConfig, Model, OpfError, ParametricLp};
use crate::grid::Network;
use crate::lp::{dual_with_origins, solve_lp, Cmp, DualOrigin, LinearProgram};
use crate::milp::{MipSolution, MixedIntegerProgram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MipConfig {
    /// Bound on the lower-level multipliers of attack-dependent rows, as a
    /// multiple of the largest objective coefficient.
    pub dual_bound_factor: f64,
}

impl Default for MipConfig {
    fn default() -> Self {
        Self {
            dual_bound_factor: 10.0,
        }
    }
}

/// Single-level reformulation: primal feasibility, dual feasibility and
/// strong duality of the lower level, with one McCormick product
/// `xi_k = z_k * w_k` per attackable branch.
#[derive(Debug, Clone)]
pub struct InterdictionMip {
    pub mip: MixedIntegerProgram,
    pub model: Model,
    pub budget: usize,
    pub par: ParametricLp,
    /// Attackable branch positions, aligned with `z_cols` and `xi_cols`.
    pub attackable: Vec<usize>,
    pub z_cols: Vec<usize>,
    pub xi_cols: Vec<usize>,
    /// First column of the lower-level multipliers.
    pub dual_start: usize,
    pub dual_bound: f64,
    /// Lower level with non-attackable branches fixed in service.
    pub base: LinearProgram,
}

impl InterdictionMip {
    /// Shed of a MIP solution (the MIP minimizes its negation).
    pub fn shed(&self, sol: &MipSolution) -> f64 {
        -sol.objective
    }

    /// Attacked branch positions of a solution vector, ascending.
    pub fn attacked(&self, x: &[f64]) -> Vec<usize> {
        self.attackable
            .iter()
            .zip(&self.z_cols)
            .filter(|&(_, &c)| x[c] < 0.5)
            .map(|(&k, _)| k)
            .collect()
    }

    pub fn z_col(&self, branch: usize) -> Option<usize> {
        self.attackable
            .iter()
            .position(|&k| k == branch)
            .map(|i| self.z_cols[i])
    }

    fn z_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .attackable
            .iter()
            .flat_map(|&k| self.par.z_terms[k].iter().map(|&(r, _)| r))
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}

pub fn build_interdiction_mip(
    network: &Network,
    model: Model,
    budget: usize,
    lac: &LacConfig,
    config: &MipConfig,
) -> Result<InterdictionMip, OpfError> {
    let par = parametric(network, model, lac)?;
    let attackable = network.attackable_branches();
    let mut base = par.lp.clone();
    for k in 0..par.num_branches() {
        if !attackable.contains(&k) {
            for &(r, f) in &par.z_terms[k] {
                base.rows[r].rhs += f;
            }
        }
    }
    let n = base.num_vars();
    let cmax = base
        .objective
        .iter()
        .fold(0.0f64, |a, &c| a.max(c.abs()))
        .max(1e-12);
    let dual_bound = config.dual_bound_factor * cmax;

    let mut lp = LinearProgram::new();
    for j in 0..n {
        lp.add_var(
            base.var_labels[j].clone(),
            base.lower[j],
            base.upper[j],
            -base.objective[j],
        );
    }
    lp.offset = -base.offset;
    let z_cols: Vec<usize> = attackable
        .iter()
        .map(|&k| lp.add_var(format!("z[{}]", network.branches[k].id), 0.0, 1.0, 0.0))
        .collect();

    let mut z_in_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); base.num_rows()];
    for (i, &k) in attackable.iter().enumerate() {
        for &(r, f) in &par.z_terms[k] {
            z_in_row[r].push((z_cols[i], -f));
        }
    }
    for (r, row) in base.rows.iter().enumerate() {
        let coeffs = row
            .coeffs
            .iter()
            .copied()
            .chain(z_in_row[r].iter().copied());
        lp.add_row(row.label.clone(), coeffs, row.cmp, row.rhs);
    }

    let dual = dual_with_origins(&base);
    let dual_start = lp.num_vars();
    let mut z_row = vec![false; base.num_rows()];
    for &k in &attackable {
        for &(r, _) in &par.z_terms[k] {
            z_row[r] = true;
        }
    }
    for t in 0..dual.lp.num_vars() {
        let (mut lo, mut hi) = (dual.lp.lower[t], dual.lp.upper[t]);
        if let DualOrigin::Row(r) = dual.origins[t] {
            if z_row[r] {
                lo = lo.max(-dual_bound);
                hi = hi.min(dual_bound);
            }
        }
        lp.add_var(dual.lp.var_labels[t].clone(), lo, hi, 0.0);
    }
    for row in &dual.lp.rows {
        lp.add_row(
            row.label.clone(),
            row.coeffs.iter().map(|&(t, a)| (dual_start + t, a)),
            row.cmp,
            row.rhs,
        );
    }

    let mut xi_cols = Vec::with_capacity(attackable.len());
    let mut strong: Vec<(usize, f64)> = (0..n).map(|j| (j, base.objective[j])).collect();
    for (t, &b) in dual.rhs.iter().enumerate() {
        strong.push((dual_start + t, -b));
    }
    for (i, &k) in attackable.iter().enumerate() {
        let id = network.branches[k].id;
        // w_k = sum_r F_rk lambda_r; dual column t of Row(r) is r.
        let w: Vec<(usize, f64)> = par.z_terms[k]
            .iter()
            .map(|&(r, f)| (dual_start + r, f))
            .collect();
        let (mut wl, mut wu) = (0.0, 0.0);
        for &(c, f) in &w {
            let (a, b) = (f * lp.lower[c], f * lp.upper[c]);
            wl += a.min(b);
            wu += a.max(b);
        }
        let xi = lp.add_var(format!("xi[{id}]"), wl.min(0.0), wu.max(0.0), 0.0);
        let z = z_cols[i];
        lp.add_row(
            format!("mccormick_a[{id}]"),
            [(xi, 1.0), (z, -wu)],
            Cmp::Le,
            0.0,
        );
        lp.add_row(
            format!("mccormick_b[{id}]"),
            [(xi, 1.0), (z, -wl)],
            Cmp::Ge,
            0.0,
        );
        let neg_w = || w.iter().map(|&(c, f)| (c, -f));
        lp.add_row(
            format!("mccormick_c[{id}]"),
            [(xi, 1.0), (z, -wl)].into_iter().chain(neg_w()),
            Cmp::Le,
            -wl,
        );
        lp.add_row(
            format!("mccormick_d[{id}]"),
            [(xi, 1.0), (z, -wu)].into_iter().chain(neg_w()),
            Cmp::Ge,
            -wu,
        );
        strong.push((xi, -1.0));
        xi_cols.push(xi);
    }
    lp.add_row("strong_duality", strong, Cmp::Eq, 0.0);
    lp.add_row(
        "attack_budget",
        z_cols.iter().map(|&c| (c, -1.0)),
        Cmp::Le,
        budget as f64 - attackable.len() as f64,
    );
    let mip =
        MixedIntegerProgram::new(lp, z_cols.clone()).expect("binaries are valid [0,1] columns");
    log::debug!(
        "{model} interdiction MIP: {} columns, {} rows, {} binaries, dual bound {dual_bound}",
        mip.lp.num_vars(),
        mip.lp.num_rows(),
        z_cols.len()
    );
    Ok(InterdictionMip {
        mip,
        model,
        budget,
        par,
        attackable,
        z_cols,
        xi_cols,
        dual_start,
        dual_bound,
        base,
    })
}

/// Evidence that no big-M value restricts the optimum of a given attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigMAudit {
    /// Lower-level optimum with the relaxed rows of attacked branches removed.
    pub without_relaxed_rows: f64,
    /// Lower-level dual optimum with multipliers kept strictly inside the bound.
    pub inside_dual_bound: f64,
    pub shed: f64,
    pub passed: bool,
}

/// Re-solves the lower level for attack `out` (branch positions) twice:
/// once without the big-M rows of attacked branches and once as a dual whose
/// bounded multipliers stay `margin` away from their bound. Both must equal
/// `shed`.
pub fn audit_big_m(
    im: &InterdictionMip,
    out: &[usize],
    shed: f64,
    margin: f64,
    tol: f64,
) -> BigMAudit {
    let mut z = vec![1.0; im.par.num_branches()];
    for &k in out {
        z[k] = 0.0;
    }
    let fixed = im.par.with_status(&z);

    let mut stripped = fixed.clone();
    let drop: Vec<usize> = out
        .iter()
        .flat_map(|&k| im.par.z_terms[k].iter().map(|&(r, _)| r))
        .filter(|&r| im.par.big_m[r].is_some())
        .collect();
    let mut kept = 0;
    stripped.rows.retain(|_| {
        let keep = !drop.contains(&kept);
        kept += 1;
        keep
    });
    let p = solve_lp(&stripped);
    let primal = if p.is_optimal() {
        p.objective
    } else {
        f64::NAN
    };

    let z_rows = im.z_rows();
    let mut dual = dual_with_origins(&fixed);
    let bound = im.dual_bound - margin;
    for t in 0..dual.lp.num_vars() {
        if let DualOrigin::Row(r) = dual.origins[t] {
            if z_rows.binary_search(&r).is_ok() {
                dual.lp.lower[t] = dual.lp.lower[t].max(-bound);
                dual.lp.upper[t] = dual.lp.upper[t].min(bound);
            }
        }
    }
    let d = solve_lp(&dual.lp);
    let dual_value = if d.is_optimal() {
        -d.objective
    } else {
        f64::NAN
    };
    let close = |a: f64| (a - shed).abs() <= tol * shed.abs().max(1.0);
    BigMAudit {
        without_relaxed_rows: primal,
        inside_dual_bound: dual_value,
        shed,
        passed: close(primal) && close(dual_value),
    }
}
