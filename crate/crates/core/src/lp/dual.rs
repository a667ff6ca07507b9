use super::{Cmp, LinearProgram};

/// Which primal constraint a dual column prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualOrigin {
    Row(usize),
    Lower(usize),
    Upper(usize),
    /// Variable with equal finite bounds.
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct DualProgram {
    pub lp: LinearProgram,
    /// One entry per dual column, in column order.
    pub origins: Vec<DualOrigin>,
    /// Right-hand side priced by each dual column (the dual objective is
    /// `sum rhs[t] * lambda[t] + primal offset`, maximized).
    pub rhs: Vec<f64>,
}

/// Standard LP dual of a minimization program, returned as a minimization of
/// the negated dual objective.
///
/// Finite variable bounds become explicit constraints, so every primal column
/// yields one equality `sum_t a_tj * lambda_t = c_j`. Multipliers of `>=`
/// constraints are nonnegative, of `<=` constraints nonpositive, and of
/// equalities free.
pub fn dual_of(lp: &LinearProgram) -> LinearProgram {
    dual_with_origins(lp).lp
}

pub fn dual_with_origins(lp: &LinearProgram) -> DualProgram {
    let n = lp.num_vars();
    let mut dual = LinearProgram::new();
    let mut origins = Vec::new();
    let mut rhs = Vec::new();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];

    let sign_bounds = |cmp: Cmp| match cmp {
        Cmp::Ge => (0.0, f64::INFINITY),
        Cmp::Le => (f64::NEG_INFINITY, 0.0),
        Cmp::Eq => (f64::NEG_INFINITY, f64::INFINITY),
    };

    for (i, row) in lp.rows.iter().enumerate() {
        let (l, u) = sign_bounds(row.cmp);
        let t = dual.add_var(format!("dual[{}]", row.label), l, u, -row.rhs);
        origins.push(DualOrigin::Row(i));
        rhs.push(row.rhs);
        for &(j, a) in &row.coeffs {
            columns[j].push((t, a));
        }
    }
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let name = &lp.var_labels[j];
        if l.is_finite() && l == u {
            let t = dual.add_var(
                format!("dual[fix {name}]"),
                f64::NEG_INFINITY,
                f64::INFINITY,
                -l,
            );
            origins.push(DualOrigin::Fixed(j));
            rhs.push(l);
            columns[j].push((t, 1.0));
            continue;
        }
        if l.is_finite() {
            let t = dual.add_var(format!("dual[lb {name}]"), 0.0, f64::INFINITY, -l);
            origins.push(DualOrigin::Lower(j));
            rhs.push(l);
            columns[j].push((t, 1.0));
        }
        if u.is_finite() {
            let t = dual.add_var(format!("dual[ub {name}]"), f64::NEG_INFINITY, 0.0, -u);
            origins.push(DualOrigin::Upper(j));
            rhs.push(u);
            columns[j].push((t, 1.0));
        }
    }
    for (j, col) in columns.into_iter().enumerate() {
        dual.add_row(
            format!("stationarity[{}]", lp.var_labels[j]),
            col,
            Cmp::Eq,
            lp.objective[j],
        );
    }
    dual.offset = -lp.offset;
    DualProgram {
        lp: dual,
        origins,
        rhs,
    }
}
