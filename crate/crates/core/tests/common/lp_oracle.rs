//! Vertex-enumeration oracle for small bounded linear programs and a random
//! instance generator. Independent of the simplex implementation.

use grid_interdict::lp::{Cmp, LinearProgram};
use rand::Rng;

/// Random feasible LP with a finite box on every variable.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize, max_rows: usize) -> LinearProgram {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut lp = LinearProgram::new();
    let mut x0 = Vec::with_capacity(n);
    for j in 0..n {
        let l: f64 = rng.gen_range(-5.0..0.0);
        let u = l + rng.gen_range(0.5..5.0);
        x0.push(rng.gen_range(l..u));
        lp.add_var(format!("x{j}"), l, u, rng.gen_range(-2.0..2.0));
    }
    let mut equalities = 0;
    for i in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.8) {
                coeffs.push((j, rng.gen_range(-3.0..3.0)));
            }
        }
        if coeffs.is_empty() {
            coeffs.push((i % n, 1.0));
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let r: f64 = rng.gen();
        let slack = rng.gen_range(0.0..2.0);
        if r < 0.1 && equalities + 1 < n {
            equalities += 1;
            lp.add_row(format!("r{i}"), coeffs, Cmp::Eq, act);
        } else if r < 0.55 {
            lp.add_row(format!("r{i}"), coeffs, Cmp::Le, act + slack);
        } else {
            lp.add_row(format!("r{i}"), coeffs, Cmp::Ge, act - slack);
        }
    }
    lp
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for j in c..k {
                        a[r][j] -= f * a[c][j];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..k).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum objective over all basic feasible solutions, `None` if none exist.
///
/// A vertex has `n` linearly independent active constraints: some rows at
/// their right-hand side plus variables at one of their bounds.
pub fn vertex_min(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let eq: Vec<usize> = (0..m).filter(|&i| lp.rows[i].cmp == Cmp::Eq).collect();
    let ineq: Vec<usize> = (0..m).filter(|&i| lp.rows[i].cmp != Cmp::Eq).collect();
    let dense: Vec<Vec<f64>> = lp.rows.iter().map(|r| r.dense(n)).collect();
    let mut best: Option<f64> = None;
    for k_extra in 0..=ineq.len().min(n.saturating_sub(eq.len())) {
        for extra in subsets(ineq.len(), k_extra) {
            let active: Vec<usize> = eq
                .iter()
                .copied()
                .chain(extra.iter().map(|&i| ineq[i]))
                .collect();
            let k = active.len();
            if k > n {
                continue;
            }
            for free in subsets(n, k) {
                let fixed: Vec<usize> = (0..n).filter(|j| !free.contains(j)).collect();
                for mask in 0..(1usize << fixed.len()) {
                    let mut x = vec![0.0; n];
                    for (b, &j) in fixed.iter().enumerate() {
                        x[j] = if mask >> b & 1 == 1 {
                            lp.upper[j]
                        } else {
                            lp.lower[j]
                        };
                    }
                    let a: Vec<Vec<f64>> = active
                        .iter()
                        .map(|&i| free.iter().map(|&j| dense[i][j]).collect())
                        .collect();
                    let rhs: Vec<f64> = active
                        .iter()
                        .map(|&i| {
                            lp.rows[i].rhs - fixed.iter().map(|&j| dense[i][j] * x[j]).sum::<f64>()
                        })
                        .collect();
                    let Some(sol) = solve_dense(a, rhs) else {
                        continue;
                    };
                    for (v, &j) in sol.iter().zip(&free) {
                        x[j] = *v;
                    }
                    if lp.max_violation(&x) <= 1e-9 {
                        let obj = lp.objective_value(&x);
                        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                    }
                }
            }
        }
    }
    best
}
