//! Bounded-variable revised simplex.
//!
//! Every row `a'x (cmp) b` becomes `a'x - r = 0` with a row-activity column
//! `r` bounded according to `cmp`, so the all-activity basis `B = -I` is always
//! available. Phase 1 minimizes the sum of basic bound violations starting from
//! any basis, which also serves warm starts after bound changes or appended
//! rows. Pricing is Dantzig with a Harris ratio test; after a run of degenerate
//! pivots the solver switches to Bland's rule until progress resumes.
//!
//! When a warm basis is dual feasible but primal infeasible (the usual case
//! after a bound change in branch-and-bound) dual simplex pivots run first,
//! on slightly shifted costs; the shift is dropped before the primal pass.

use super::{Cmp, LinearProgram, LpOptions, LpSolution, LpStatus};

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_LIMIT: usize = 50;
const DUAL_REPAIR_TOL: f64 = 1e-7;

enum DualStep {
    Pivoted,
    /// No entering column: the primal is infeasible.
    Blocked,
    /// The basis is not dual feasible.
    NotApplicable,
}

/// Basis snapshot usable as a warm start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub num_vars: usize,
    /// Basic columns in position order; `num_vars + i` is the activity of row `i`.
    pub basic: Vec<usize>,
    /// Nonbasic-at-upper flag for every column.
    pub at_upper: Vec<bool>,
}

pub struct Simplex {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    offset: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basic: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    x: Vec<f64>,
    /// Column-major `B^-1`: entry (r, c) at `binv[c * m + r]`.
    binv: Vec<f64>,
    since_refactor: usize,
    needs_refactor: bool,
    needs_recompute: bool,
    /// Cost shifts active during dual pivots; empty when off.
    perturb: Vec<f64>,
    opts: LpOptions,
}

pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    solve_lp_with(lp, &LpOptions::default(), None)
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions, warm: Option<&Basis>) -> LpSolution {
    let mut s = Simplex::new(lp, *opts);
    if let Some(b) = warm {
        s.load_basis(b);
    }
    s.solve()
}

impl Simplex {
    pub fn new(lp: &LinearProgram, opts: LpOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        for row in &lp.rows {
            let (l, h) = match row.cmp {
                Cmp::Le => (f64::NEG_INFINITY, row.rhs),
                Cmp::Ge => (row.rhs, f64::INFINITY),
                Cmp::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            hi.push(h);
        }
        let mut s = Self {
            n,
            m,
            cols,
            cost: lp.objective.clone(),
            offset: lp.offset,
            lo,
            hi,
            basic: (n..n + m).collect(),
            pos: vec![NONE; n + m],
            at_upper: vec![false; n + m],
            x: vec![0.0; n + m],
            binv: Vec::new(),
            since_refactor: 0,
            needs_refactor: true,
            needs_recompute: false,
            perturb: Vec::new(),
            opts,
        };
        for (p, &k) in s.basic.iter().enumerate() {
            s.pos[k] = p;
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lo[j] = lower;
        self.hi[j] = upper;
        self.needs_recompute = true;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    pub fn basis(&self) -> Basis {
        Basis {
            num_vars: self.n,
            basic: self.basic.clone(),
            at_upper: self.at_upper.clone(),
        }
    }

    /// Loads a basis taken from the same program, possibly before extra rows
    /// were appended; the activities of appended rows start basic. Anything
    /// else is ignored and the current basis kept.
    pub fn load_basis(&mut self, b: &Basis) {
        let total = self.n + self.m;
        if b.num_vars != self.n || b.at_upper.len() > total || b.basic.len() > self.m {
            return;
        }
        let old_m = b.basic.len();
        if b.at_upper.len() != self.n + old_m {
            return;
        }
        self.basic = b.basic.clone();
        self.basic.extend(self.n + old_m..total);
        self.pos = vec![NONE; total];
        for (p, &k) in self.basic.iter().enumerate() {
            self.pos[k] = p;
        }
        self.at_upper = b.at_upper.clone();
        self.at_upper.resize(total, false);
        self.needs_refactor = true;
    }

    fn column(&self, k: usize) -> ColIter<'_> {
        if k < self.n {
            ColIter::Structural(self.cols[k].iter())
        } else {
            ColIter::Activity(Some(k - self.n))
        }
    }

    fn cost_of(&self, k: usize) -> f64 {
        let c = if k < self.n { self.cost[k] } else { 0.0 };
        match self.perturb.get(k) {
            Some(e) => c + e,
            None => c,
        }
    }

    /// Shifts nonbasic costs away from zero reduced cost so that dual pivots
    /// make progress on degenerate programs.
    fn perturb_costs(&mut self) {
        let total = self.n + self.m;
        let cb: Vec<f64> = self.basic.iter().map(|&k| self.cost_of(k)).collect();
        let y = self.btran(&cb);
        let mut eps = vec![0.0; total];
        for k in 0..total {
            if self.pos[k] != NONE || self.lo[k] == self.hi[k] {
                continue;
            }
            let d = self.reduced_cost(k, &y, false);
            let (l, h) = (self.lo[k], self.hi[k]);
            if !l.is_finite() && !h.is_finite() {
                if d.abs() <= DUAL_REPAIR_TOL {
                    eps[k] = -d;
                }
                continue;
            }
            let u = (k as u64).wrapping_mul(2_654_435_761) % 1024;
            let mag = 1e-7 * (1.0 + self.cost_of(k).abs()) * (1.0 + u as f64 / 1024.0);
            let sign = if self.at_upper[k] || !l.is_finite() {
                -1.0
            } else {
                1.0
            };
            let wrong = (-sign * d).max(0.0);
            if wrong <= DUAL_REPAIR_TOL {
                eps[k] = sign * (mag + wrong);
            }
        }
        self.perturb = eps;
    }

    fn place_nonbasic(&mut self, k: usize) {
        let (l, h) = (self.lo[k], self.hi[k]);
        if l == h {
            self.at_upper[k] = false;
            self.x[k] = l;
        } else if self.at_upper[k] && h.is_finite() {
            self.x[k] = h;
        } else if l.is_finite() {
            self.at_upper[k] = false;
            self.x[k] = l;
        } else if h.is_finite() {
            self.at_upper[k] = true;
            self.x[k] = h;
        } else {
            self.at_upper[k] = false;
            self.x[k] = 0.0;
        }
    }

    /// Rebuilds `B^-1` from scratch; dependent basic columns are swapped for
    /// row activities so the basis is always nonsingular afterwards.
    fn refactor(&mut self) {
        let m = self.m;
        for attempt in 0..2 {
            let mut a = vec![0.0; m * m]; // row-major B
            for (c, &k) in self.basic.iter().enumerate() {
                for (r, v) in self.column(k) {
                    a[r * m + c] = v;
                }
            }
            let mut inv = vec![0.0; m * m]; // row-major
            for i in 0..m {
                inv[i * m + i] = 1.0;
            }
            let mut row_of_col = vec![NONE; m];
            let mut used = vec![false; m];
            let mut singular = Vec::new();
            for c in 0..m {
                let mut best = NONE;
                let mut best_abs = SINGULAR_TOL;
                for r in 0..m {
                    if !used[r] && a[r * m + c].abs() > best_abs {
                        best_abs = a[r * m + c].abs();
                        best = r;
                    }
                }
                if best == NONE {
                    singular.push(c);
                    continue;
                }
                used[best] = true;
                row_of_col[c] = best;
                let piv = a[best * m + c];
                for v in &mut a[best * m..(best + 1) * m] {
                    *v /= piv;
                }
                for v in &mut inv[best * m..(best + 1) * m] {
                    *v /= piv;
                }
                let prow_a: Vec<(usize, f64)> = (c..m)
                    .filter_map(|j| {
                        let v = a[best * m + j];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect();
                let prow_i: Vec<(usize, f64)> = (0..m)
                    .filter_map(|j| {
                        let v = inv[best * m + j];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect();
                for r in 0..m {
                    if r == best {
                        continue;
                    }
                    let f = a[r * m + c];
                    if f == 0.0 {
                        continue;
                    }
                    for &(j, v) in &prow_a {
                        a[r * m + j] -= f * v;
                    }
                    a[r * m + c] = 0.0;
                    for &(j, v) in &prow_i {
                        inv[r * m + j] -= f * v;
                    }
                }
            }
            if singular.is_empty() {
                let mut binv = vec![0.0; m * m];
                for c in 0..m {
                    let src = row_of_col[c];
                    for col in 0..m {
                        binv[col * m + c] = inv[src * m + col];
                    }
                }
                self.binv = binv;
                self.since_refactor = 0;
                self.needs_refactor = false;
                self.compute_basic_values();
                return;
            }
            assert!(attempt == 0, "basis repair failed");
            let mut free_rows = (0..m).filter(|&r| !used[r]);
            for c in singular {
                let r = free_rows.next().expect("row count matches singular count");
                let old = self.basic[c];
                let new = self.n + r;
                if self.pos[new] != NONE {
                    // activity already basic elsewhere; cannot happen for a
                    // genuinely unused row, but keep the basis consistent.
                    continue;
                }
                self.pos[old] = NONE;
                self.place_nonbasic(old);
                self.basic[c] = new;
                self.pos[new] = c;
            }
        }
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for k in 0..self.n + self.m {
            if self.pos[k] != NONE {
                continue;
            }
            self.place_nonbasic(k);
            let xk = self.x[k];
            if xk != 0.0 {
                for (r, v) in self.column(k) {
                    rhs[r] -= v * xk;
                }
            }
        }
        let mut xb = vec![0.0; m];
        for (r, &v) in rhs.iter().enumerate() {
            if v != 0.0 {
                let col = &self.binv[r * m..(r + 1) * m];
                for (xi, &b) in xb.iter_mut().zip(col) {
                    *xi += b * v;
                }
            }
        }
        for (p, &k) in self.basic.iter().enumerate() {
            self.x[k] = xb[p];
        }
    }

    fn ftran(&self, k: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (r, v) in self.column(k) {
            let col = &self.binv[r * m..(r + 1) * m];
            for (a, &b) in alpha.iter_mut().zip(col) {
                *a += b * v;
            }
        }
        alpha
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|r| {
                self.binv[r * m..(r + 1) * m]
                    .iter()
                    .zip(cb)
                    .map(|(b, c)| b * c)
                    .sum()
            })
            .collect()
    }

    fn reduced_cost(&self, k: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost_of(k) };
        c - self.column(k).map(|(r, v)| y[r] * v).sum::<f64>()
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let ap = alpha[r];
        for c in 0..m {
            let col = &mut self.binv[c * m..(c + 1) * m];
            let e = col[r];
            if e == 0.0 {
                continue;
            }
            let e = e / ap;
            for (i, v) in col.iter_mut().enumerate() {
                *v -= alpha[i] * e;
            }
            col[r] = e;
        }
    }

    /// Makes nonbasic columns dual feasible by moving boxed ones to the
    /// bound matching their reduced-cost sign. Returns false if a column with
    /// an infinite bound has the wrong sign.
    fn restore_dual_feasibility(&mut self, y: &[f64]) -> bool {
        let tol = self.opts.tol_opt;
        let mut flipped = false;
        for k in 0..self.n + self.m {
            if self.pos[k] != NONE || self.lo[k] == self.hi[k] {
                continue;
            }
            let d = self.reduced_cost(k, y, false);
            let (l, h) = (self.lo[k], self.hi[k]);
            let wants_upper = d < -tol;
            let wants_lower = d > tol;
            let stuck = if !l.is_finite() && !h.is_finite() {
                wants_upper || wants_lower
            } else if wants_upper && !self.at_upper[k] {
                if h.is_finite() {
                    self.at_upper[k] = true;
                    flipped = true;
                }
                !h.is_finite()
            } else if wants_lower && self.at_upper[k] {
                if l.is_finite() {
                    self.at_upper[k] = false;
                    flipped = true;
                }
                !l.is_finite()
            } else {
                false
            };
            if stuck {
                // Tiny sign errors are absorbed into the cost shift.
                if self.perturb.is_empty() || d.abs() > DUAL_REPAIR_TOL {
                    return false;
                }
                self.perturb[k] -= d;
            }
        }
        if flipped {
            self.compute_basic_values();
        }
        true
    }

    /// One dual simplex pivot from a dual feasible basis: the most infeasible
    /// basic column leaves at its violated bound.
    fn dual_step(&mut self, y: &[f64]) -> DualStep {
        let (n, m) = (self.n, self.m);
        let tol = self.opts.tol_feas;
        let tol_opt = self.opts.tol_opt;
        let mut p = NONE;
        let mut worst = 0.0;
        for (q, &k) in self.basic.iter().enumerate() {
            let inf = self.infeasibility(k);
            if inf > worst {
                worst = inf;
                p = q;
            }
        }
        if p == NONE {
            return DualStep::NotApplicable;
        }
        let k = self.basic[p];
        let target = if self.x[k] < self.lo[k] - tol {
            self.lo[k]
        } else {
            self.hi[k]
        };
        let delta = target - self.x[k];
        let rho: Vec<f64> = (0..m).map(|c| self.binv[c * m + p]).collect();

        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        let mut theta_max = f64::INFINITY;
        for j in 0..n + m {
            if self.pos[j] != NONE || self.lo[j] == self.hi[j] {
                continue;
            }
            let a: f64 = self.column(j).map(|(r, v)| rho[r] * v).sum();
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let free = !self.lo[j].is_finite() && !self.hi[j].is_finite();
            let eligible = if free {
                true
            } else if self.at_upper[j] {
                a * delta > 0.0
            } else {
                a * delta < 0.0
            };
            if !eligible {
                continue;
            }
            let d = self.reduced_cost(j, y, false);
            theta_max = theta_max.min((d.abs() + tol_opt) / a.abs());
            cands.push((j, a, d));
        }
        if cands.is_empty() {
            return DualStep::Blocked;
        }
        let mut entering = NONE;
        let mut best = 0.0;
        for &(j, a, d) in &cands {
            if d.abs() / a.abs() <= theta_max && a.abs() > best {
                best = a.abs();
                entering = j;
            }
        }
        let alpha = self.ftran(entering);
        if alpha[p].abs() < PIVOT_TOL {
            self.needs_refactor = true;
            return DualStep::NotApplicable;
        }
        let t = -delta / alpha[p];
        self.x[entering] += t;
        for (q, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let b = self.basic[q];
                self.x[b] -= a * t;
            }
        }
        self.x[k] = target;
        self.at_upper[k] = self.lo[k] != self.hi[k] && target == self.hi[k];
        self.pos[k] = NONE;
        self.basic[p] = entering;
        self.pos[entering] = p;
        self.at_upper[entering] = false;
        self.pivot(p, &alpha);
        self.since_refactor += 1;
        DualStep::Pivoted
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let tol = self.opts.tol_feas;
        let v = self.x[k];
        if v < self.lo[k] - tol {
            self.lo[k] - v
        } else if v > self.hi[k] + tol {
            v - self.hi[k]
        } else {
            0.0
        }
    }

    pub fn solve(&mut self) -> LpSolution {
        let (n, m) = (self.n, self.m);
        let tol = self.opts.tol_feas;
        let tol_opt = self.opts.tol_opt;
        let max_iter = self.opts.max_iterations.unwrap_or(50_000 + 50 * (n + m));
        if self.needs_refactor || self.binv.len() != m * m {
            self.refactor();
        } else if self.needs_recompute {
            self.compute_basic_values();
        }
        self.needs_recompute = false;
        self.perturb.clear();
        let mut iterations = 0usize;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut final_checks = 0usize;
        let mut verified = false;
        let mut dual_budget = 5 * (n + m) + 100;
        let mut dual_stall = 0usize;
        let mut dual_best = f64::NEG_INFINITY;
        loop {
            if iterations >= max_iter {
                return LpSolution::failed(LpStatus::NumericalBreakdown, n, m, iterations);
            }
            if self.since_refactor >= REFACTOR_EVERY || self.needs_refactor {
                self.refactor();
            }
            let mut phase1 = self.basic.iter().any(|&k| self.infeasibility(k) > 0.0);
            if phase1 && dual_budget > 0 {
                if self.perturb.is_empty() {
                    self.perturb_costs();
                }
                let cb: Vec<f64> = self.basic.iter().map(|&k| self.cost_of(k)).collect();
                let y = self.btran(&cb);
                if self.restore_dual_feasibility(&y) {
                    match self.dual_step(&y) {
                        DualStep::Pivoted => {
                            iterations += 1;
                            dual_budget -= 1;
                            verified = false;
                            let obj: f64 = (0..n + m).map(|k| self.cost_of(k) * self.x[k]).sum();
                            if obj > dual_best + 1e-9 * (1.0 + obj.abs()) {
                                dual_best = obj;
                                dual_stall = 0;
                            } else {
                                dual_stall += 1;
                                if dual_stall > DEGENERATE_LIMIT {
                                    dual_budget = 0;
                                }
                            }
                            continue;
                        }
                        DualStep::Blocked if !verified => {
                            verified = true;
                            self.refactor();
                            continue;
                        }
                        DualStep::Blocked => {
                            return LpSolution::failed(LpStatus::Infeasible, n, m, iterations);
                        }
                        DualStep::NotApplicable => {
                            phase1 = self.basic.iter().any(|&k| self.infeasibility(k) > 0.0);
                        }
                    }
                } else {
                    dual_budget = 0;
                }
            }
            if !self.perturb.is_empty() {
                self.perturb.clear();
                verified = false;
            }
            let cb: Vec<f64> = self
                .basic
                .iter()
                .map(|&k| {
                    if phase1 {
                        let v = self.x[k];
                        if v < self.lo[k] - tol {
                            -1.0
                        } else if v > self.hi[k] + tol {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        self.cost_of(k)
                    }
                })
                .collect();
            let y = self.btran(&cb);

            let mut entering = NONE;
            let mut dir = 0.0;
            let mut best = 0.0;
            for k in 0..n + m {
                if self.pos[k] != NONE || self.lo[k] == self.hi[k] {
                    continue;
                }
                let d = self.reduced_cost(k, &y, phase1);
                let free = !self.lo[k].is_finite() && !self.hi[k].is_finite();
                let cand = if free {
                    (d.abs() > tol_opt).then(|| if d < 0.0 { 1.0 } else { -1.0 })
                } else if self.at_upper[k] {
                    (d > tol_opt).then_some(-1.0)
                } else {
                    (d < -tol_opt).then_some(1.0)
                };
                if let Some(dk) = cand {
                    if bland {
                        entering = k;
                        dir = dk;
                        break;
                    }
                    if d.abs() > best {
                        best = d.abs();
                        entering = k;
                        dir = dk;
                    }
                }
            }

            if entering == NONE {
                // Recompute basic values from scratch before trusting the
                // verdict; an old inverse is rebuilt first.
                if !verified && final_checks < 3 {
                    final_checks += 1;
                    verified = true;
                    if phase1 || self.since_refactor >= REFACTOR_EVERY / 4 {
                        self.refactor();
                    } else {
                        self.compute_basic_values();
                    }
                    continue;
                }
                if phase1 {
                    return LpSolution::failed(LpStatus::Infeasible, n, m, iterations);
                }
                return self.extract(iterations);
            }

            let alpha = self.ftran(entering);
            let flip = self.hi[entering] - self.lo[entering];

            // Harris pass 1: relaxed step bound.
            let mut theta_max = f64::INFINITY;
            let mut targets: Vec<(usize, f64, f64)> = Vec::new(); // (pos, target, |rate|)
            for (p, &a) in alpha.iter().enumerate() {
                let rate = -dir * a;
                if rate.abs() < PIVOT_TOL {
                    continue;
                }
                let k = self.basic[p];
                let (xi, l, h) = (self.x[k], self.lo[k], self.hi[k]);
                // Infeasible basics block where they regain feasibility and
                // never block while moving further away.
                let target = if rate > 0.0 {
                    if xi < l - tol {
                        Some(l)
                    } else if xi > h + tol || !h.is_finite() {
                        None
                    } else {
                        Some(h)
                    }
                } else if xi > h + tol {
                    Some(h)
                } else if xi < l - tol || !l.is_finite() {
                    None
                } else {
                    Some(l)
                };
                if let Some(tg) = target {
                    let dist = (tg - xi) * rate.signum();
                    theta_max = theta_max.min((dist + tol) / rate.abs());
                    targets.push((p, tg, rate.abs()));
                }
            }

            // Pass 2: among ratios within the relaxed bound, take the largest pivot.
            let mut leave: Option<(usize, f64, f64)> = None; // (pos, target, step)
            let mut leave_key = (f64::NEG_INFINITY, usize::MAX);
            if bland {
                for &(p, tg, ra) in &targets {
                    let k = self.basic[p];
                    let t = ((tg - self.x[k]) * (-dir * alpha[p]).signum() / ra).max(0.0);
                    let better = match leave {
                        None => true,
                        Some((lp, _, lt)) => {
                            t < lt - 1e-12 || (t <= lt + 1e-12 && k < self.basic[lp])
                        }
                    };
                    if better {
                        leave = Some((p, tg, t));
                    }
                }
            } else {
                for &(p, tg, ra) in &targets {
                    let k = self.basic[p];
                    let t = ((tg - self.x[k]) * (-dir * alpha[p]).signum() / ra).max(0.0);
                    if t <= theta_max {
                        let key = (ra, usize::MAX - k);
                        if key.0 > leave_key.0 || (key.0 == leave_key.0 && key.1 > leave_key.1) {
                            leave_key = key;
                            leave = Some((p, tg, t));
                        }
                    }
                }
            }

            let use_flip = flip.is_finite() && leave.is_none_or(|(_, _, t)| flip <= t);
            if !use_flip && leave.is_none() {
                if phase1 {
                    return LpSolution::failed(LpStatus::NumericalBreakdown, n, m, iterations);
                }
                return LpSolution::failed(LpStatus::Unbounded, n, m, iterations);
            }
            let step = if use_flip { flip } else { leave.unwrap().2 };

            iterations += 1;
            verified = false;
            if step <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            self.x[entering] += dir * step;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let k = self.basic[p];
                    self.x[k] -= dir * a * step;
                }
            }
            if use_flip {
                self.at_upper[entering] = dir > 0.0;
                self.x[entering] = if dir > 0.0 {
                    self.hi[entering]
                } else {
                    self.lo[entering]
                };
                continue;
            }
            let (p, tg, _) = leave.unwrap();
            let leaving = self.basic[p];
            self.x[leaving] = tg;
            self.at_upper[leaving] = self.lo[leaving] != self.hi[leaving] && tg == self.hi[leaving];
            self.pos[leaving] = NONE;
            self.basic[p] = entering;
            self.pos[entering] = p;
            self.at_upper[entering] = false;
            self.pivot(p, &alpha);
            self.since_refactor += 1;
        }
    }

    fn extract(&self, iterations: usize) -> LpSolution {
        let (n, m) = (self.n, self.m);
        let cb: Vec<f64> = self.basic.iter().map(|&k| self.cost_of(k)).collect();
        let y = self.btran(&cb);
        let reduced: Vec<f64> = (0..n)
            .map(|j| {
                if self.pos[j] == NONE {
                    self.reduced_cost(j, &y, false)
                } else {
                    0.0
                }
            })
            .collect();
        let x: Vec<f64> = self.x[..n].to_vec();
        let objective = self.offset + x.iter().zip(&self.cost).map(|(a, b)| a * b).sum::<f64>();
        // Duals times the bound each nonbasic column sits at.
        let mut dual_objective = self.offset;
        for j in 0..n {
            if self.pos[j] == NONE {
                dual_objective += reduced[j] * self.x[j];
            }
        }
        let row_duals: Vec<f64> = (0..m)
            .map(|i| if self.pos[n + i] == NONE { y[i] } else { 0.0 })
            .collect();
        for i in 0..m {
            if self.pos[n + i] == NONE {
                dual_objective += row_duals[i] * self.x[n + i];
            }
        }
        LpSolution {
            status: LpStatus::Optimal,
            objective,
            dual_objective,
            x,
            row_duals,
            reduced_costs: reduced,
            iterations,
        }
    }
}

enum ColIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Activity(Option<usize>),
}

impl Iterator for ColIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColIter::Structural(it) => it.next().copied(),
            ColIter::Activity(r) => r.take().map(|r| (r, -1.0)),
        }
    }
}
