//! Linear programs in minimization form, their standard dual, and a dense
//! bounded-variable revised simplex solver.
//!
//! Rows are stored sparsely for construction convenience; the solver keeps a
//! dense basis inverse.

mod dual;
mod simplex;

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

pub use dual::{dual_of, dual_with_origins, DualOrigin, DualProgram};
pub use simplex::{solve_lp, solve_lp_with, Basis, Simplex};

/// Row comparison sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// `(column, coefficient)` pairs, sorted by column, no duplicates.
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
    pub label: String,
}

impl Row {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(j, a) in &self.coeffs {
            out[j] = a;
        }
        out
    }

    /// Amount by which `activity` violates the row requirement (0 when satisfied).
    pub fn violation(&self, activity: f64) -> f64 {
        match self.cmp {
            Cmp::Le => (activity - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - activity).max(0.0),
            Cmp::Eq => (activity - self.rhs).abs(),
        }
    }
}

/// `min c'x + offset` subject to labelled rows and per-variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_labels: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LpError {
    #[error("row `{row}` references column {col} but only {n} variables exist")]
    BadColumn { row: String, col: usize, n: usize },
    #[error("variable `{0}` has lower bound above upper bound")]
    CrossedBounds(String),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(
        &mut self,
        label: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_labels.push(label.into());
        self.objective.len() - 1
    }

    /// Appends a row; duplicate columns are merged and exact zeros dropped.
    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        cmp: Cmp,
        rhs: f64,
    ) -> usize {
        let mut c: Vec<(usize, f64)> = coeffs.into_iter().collect();
        c.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        for (j, a) in c {
            match merged.last_mut() {
                Some((lj, la)) if *lj == j => *la += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row {
            coeffs: merged,
            cmp,
            rhs,
            label: label.into(),
        });
        self.rows.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .objective
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(LpError::CrossedBounds(self.var_labels[j].clone()));
            }
            if !self.objective[j].is_finite() || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::NonFinite(self.var_labels[j].clone()));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(row.label.clone()));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::BadColumn {
                        row: row.label.clone(),
                        col: j,
                        n,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(row.label.clone()));
                }
            }
        }
        Ok(())
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            worst = worst.max(row.violation(row.dot(x)));
        }
        worst
    }

    /// Human-readable dump, one constraint per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, a: f64, j: usize| {
            let _ = write!(out, " {:+} {}", a, self.var_labels[j]);
        };
        out.push_str("minimize");
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, c, j);
            }
        }
        if self.offset != 0.0 {
            let _ = write!(out, " {:+}", self.offset);
        }
        out.push_str("\nsubject to\n");
        for row in &self.rows {
            let _ = write!(out, "  {}:", row.label);
            for &(j, a) in &row.coeffs {
                term(&mut out, a, j);
            }
            let _ = writeln!(out, " {} {}", row.cmp, row.rhs);
        }
        out.push_str("bounds\n");
        for j in 0..self.num_vars() {
            let _ = writeln!(
                out,
                "  {} <= {} <= {}",
                self.lower[j], self.var_labels[j], self.upper[j]
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Includes the objective offset.
    pub objective: f64,
    /// Objective recomputed from duals and active bounds.
    pub dual_objective: f64,
    pub x: Vec<f64>,
    /// Sensitivity of the objective to each row's right-hand side.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn failed(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            x: vec![f64::NAN; n],
            row_duals: vec![f64::NAN; m],
            reduced_costs: vec![f64::NAN; n],
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_cs: f64,
    /// Optimality tolerance on reduced costs.
    pub tol_opt: f64,
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap: 1e-7,
            tol_cs: 1e-7,
            tol_opt: 1e-9,
            max_iterations: None,
        }
    }
}
