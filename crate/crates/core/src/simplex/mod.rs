//! Bounded-variable revised simplex with warm starts.
//!
//! Models are in computational form
//!
//! ```text
//!   minimize    c^T x
//!   subject to  lo_i <= a_i^T x <= hi_i     (rows)
//!               l_j  <= x_j     <= u_j      (columns)
//! ```
//!
//! with infinite bounds allowed. Each row gets a logical (slack) variable
//! carrying the row bounds, so equality rows are rows with `lo == hi`.
//!
//! A [`Basis`] records the status of every column and row slack. It survives
//! model growth: new columns enter nonbasic at a bound and new rows enter
//! with a basic slack, so a re-solve after [`LpSession::add_columns`] keeps
//! primal feasibility and runs the primal simplex, and a re-solve after
//! [`LpSession::add_rows`] keeps dual feasibility and runs the dual simplex.

mod factor;
mod lu;
mod solver;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub use solver::solve;

/// Validated LP in computational form.
#[derive(Debug, Clone)]
pub struct LpModel {
    c: Vec<f64>,
    a: SparseMatrix,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
    col_lo: Vec<f64>,
    col_hi: Vec<f64>,
}

/// A column to append: objective coefficient, `(row, value)` entries with
/// increasing rows, and bounds.
#[derive(Debug, Clone)]
pub struct NewColumn {
    pub cost: f64,
    pub entries: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// A row to append: `(column, value)` entries and activity bounds.
#[derive(Debug, Clone)]
pub struct NewRow {
    pub entries: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

fn check_bound(what: &'static str, index: usize, lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
        return Err(Error::InvalidBound { what, index, lo, hi });
    }
    Ok(())
}

impl LpModel {
    /// Validates dimensions and bounds. No solve is performed.
    pub fn new(
        c: Vec<f64>,
        a: SparseMatrix,
        row_bounds: Vec<(f64, f64)>,
        var_bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if c.len() != a.n_cols() || var_bounds.len() != a.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns in A, {} costs, {} variable bounds",
                a.n_cols(),
                c.len(),
                var_bounds.len()
            )));
        }
        if row_bounds.len() != a.n_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows in A, {} row bounds",
                a.n_rows(),
                row_bounds.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) || !a.is_finite() {
            return Err(Error::NonFinite("LP data"));
        }
        for (i, &(lo, hi)) in row_bounds.iter().enumerate() {
            check_bound("row", i, lo, hi)?;
        }
        for (j, &(lo, hi)) in var_bounds.iter().enumerate() {
            check_bound("column", j, lo, hi)?;
        }
        let (row_lo, row_hi) = row_bounds.into_iter().unzip();
        let (col_lo, col_hi) = var_bounds.into_iter().unzip();
        Ok(LpModel {
            c,
            a,
            row_lo,
            row_hi,
            col_lo,
            col_hi,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.a.n_cols()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn cost(&self) -> &[f64] {
        &self.c
    }

    pub fn row_bounds(&self, i: usize) -> (f64, f64) {
        (self.row_lo[i], self.row_hi[i])
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.col_lo[j], self.col_hi[j])
    }

    pub fn set_row_bounds(&mut self, i: usize, lo: f64, hi: f64) -> Result<()> {
        if i >= self.n_rows() {
            return Err(Error::DimensionMismatch(format!("row {i} out of range")));
        }
        check_bound("row", i, lo, hi)?;
        self.row_lo[i] = lo;
        self.row_hi[i] = hi;
        Ok(())
    }

    pub fn set_col_bounds(&mut self, j: usize, lo: f64, hi: f64) -> Result<()> {
        if j >= self.n_cols() {
            return Err(Error::DimensionMismatch(format!("column {j} out of range")));
        }
        check_bound("column", j, lo, hi)?;
        self.col_lo[j] = lo;
        self.col_hi[j] = hi;
        Ok(())
    }

    /// Appends columns. Nothing is modified if any column is invalid.
    pub fn add_columns(&mut self, cols: Vec<NewColumn>) -> Result<()> {
        for (k, col) in cols.iter().enumerate() {
            check_bound("column", self.n_cols() + k, col.lo, col.hi)?;
            if !col.cost.is_finite() {
                return Err(Error::NonFinite("column cost"));
            }
            if col.entries.windows(2).any(|w| w[0].0 >= w[1].0)
                || col.entries.iter().any(|&(i, _)| i >= self.n_rows())
            {
                return Err(Error::DimensionMismatch(
                    "new column entries must have increasing rows within the model".into(),
                ));
            }
        }
        for col in cols {
            self.a.push_column(col.entries)?;
            self.c.push(col.cost);
            self.col_lo.push(col.lo);
            self.col_hi.push(col.hi);
        }
        Ok(())
    }

    /// Appends rows. Nothing is modified if any row is invalid.
    pub fn add_rows(&mut self, rows: Vec<NewRow>) -> Result<()> {
        for (k, row) in rows.iter().enumerate() {
            check_bound("row", self.n_rows() + k, row.lo, row.hi)?;
        }
        let entries: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| r.entries.clone()).collect();
        self.a.append_rows(&entries)?;
        for row in rows {
            self.row_lo.push(row.lo);
            self.row_hi.push(row.hi);
        }
        Ok(())
    }

    /// `c^T x`
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Human-readable dump, one constraint per line.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        let term = |s: &mut String, v: f64, name: &str| {
            let _ = write!(s, " {} {} {}", if v < 0.0 { "-" } else { "+" }, v.abs(), name);
        };
        s.push_str("minimize\n obj:");
        for (j, &c) in self.c.iter().enumerate() {
            if c != 0.0 {
                term(&mut s, c, &format!("x{j}"));
            }
        }
        s.push_str("\nsubject to\n");
        let t = self.a.transpose();
        for i in 0..self.n_rows() {
            let _ = write!(s, " r{i}:");
            let (idx, val) = t.col(i);
            for (&j, &v) in idx.iter().zip(val) {
                term(&mut s, v, &format!("x{j}"));
            }
            let (lo, hi) = (self.row_lo[i], self.row_hi[i]);
            if lo == hi {
                let _ = writeln!(s, " = {lo}");
            } else {
                let _ = writeln!(s, " in [{lo}, {hi}]");
            }
        }
        s.push_str("bounds\n");
        for j in 0..self.n_cols() {
            let _ = writeln!(s, " {} <= x{j} <= {}", self.col_lo[j], self.col_hi[j]);
        }
        s.push_str("end\n");
        s
    }
}

/// Status of one variable (column or row slack) in a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

impl VarStatus {
    /// Nonbasic status a variable with these bounds starts from.
    pub fn resting(lo: f64, hi: f64) -> Self {
        if lo.is_finite() {
            VarStatus::AtLower
        } else if hi.is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }
}

/// Basis description: one status per column and per row slack. A valid
/// basis has exactly `n_rows` basic entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub col_status: Vec<VarStatus>,
    pub row_status: Vec<VarStatus>,
}

impl Basis {
    /// All slacks basic, every column at a resting bound.
    pub fn slack(model: &LpModel) -> Self {
        Basis {
            col_status: (0..model.n_cols())
                .map(|j| VarStatus::resting(model.col_lo[j], model.col_hi[j]))
                .collect(),
            row_status: vec![VarStatus::Basic; model.n_rows()],
        }
    }

    pub fn num_basic(&self) -> usize {
        self.col_status
            .iter()
            .chain(&self.row_status)
            .filter(|s| **s == VarStatus::Basic)
            .count()
    }

    pub fn is_consistent_with(&self, model: &LpModel) -> bool {
        self.col_status.len() == model.n_cols()
            && self.row_status.len() == model.n_rows()
            && self.num_basic() == model.n_rows()
    }

    /// Extends the basis for columns appended to `model`.
    pub fn extend_columns(&mut self, model: &LpModel) {
        for j in self.col_status.len()..model.n_cols() {
            self.col_status
                .push(VarStatus::resting(model.col_lo[j], model.col_hi[j]));
        }
    }

    /// Extends the basis for rows appended to `model`; their slacks are basic.
    pub fn extend_rows(&mut self, model: &LpModel) {
        self.row_status.resize(model.n_rows(), VarStatus::Basic);
    }

    /// Compact identity of the basis and nonbasic bound choices, used to
    /// detect cycling.
    pub fn signature(&self) -> Vec<u8> {
        self.col_status
            .iter()
            .chain(&self.row_status)
            .map(|s| *s as u8)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Primal/dual bundle returned by a solve.
///
/// Row duals `duals` follow the convention `reduced_cost = c - A^T duals`,
/// so a `>=` row at its lower bound has a nonnegative dual. When the status
/// is `Infeasible`, `duals` holds the phase-one multipliers instead: a new
/// column `a` with `duals . a` strictly away from zero (in the direction its
/// bounds allow) can reduce the infeasibility.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub row_activity: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// Lagrangian bound built from the duals and the finite bounds.
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// Pivots plus bound flips performed by this solve.
    pub iterations: usize,
    /// Basis signatures visited, when [`SimplexOptions::record_bases`] is set.
    pub visited_bases: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub record_bases: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-10,
            max_iterations: 200_000,
            refactor_interval: 100,
            bland_after: 500,
            record_bases: false,
        }
    }
}

/// A model together with its current basis. Single owner; drive it from
/// one thread at a time.
#[derive(Debug, Clone)]
pub struct LpSession {
    model: LpModel,
    basis: Option<Basis>,
    options: SimplexOptions,
    total_iterations: usize,
}

impl LpSession {
    pub fn new(model: LpModel, options: SimplexOptions) -> Self {
        LpSession {
            model,
            basis: None,
            options,
            total_iterations: 0,
        }
    }

    pub fn with_basis(model: LpModel, basis: Basis, options: SimplexOptions) -> Result<Self> {
        if basis.col_status.len() != model.n_cols() || basis.row_status.len() != model.n_rows() {
            return Err(Error::DimensionMismatch("basis does not match model".into()));
        }
        Ok(LpSession {
            model,
            basis: Some(basis),
            options,
            total_iterations: 0,
        })
    }

    pub fn model(&self) -> &LpModel {
        &self.model
    }

    pub fn basis(&self) -> Option<&Basis> {
        self.basis.as_ref()
    }

    pub fn options_mut(&mut self) -> &mut SimplexOptions {
        &mut self.options
    }

    /// Pivots and bound flips accumulated over every solve of this session.
    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn solve(&mut self) -> Result<LpSolution> {
        let (sol, basis) = solve(&self.model, self.basis.as_ref(), &self.options)?;
        self.total_iterations += sol.iterations;
        self.basis = Some(basis);
        Ok(sol)
    }

    /// Appends columns; returns the index of the first new column.
    pub fn add_columns(&mut self, cols: Vec<NewColumn>) -> Result<usize> {
        let first = self.model.n_cols();
        self.model.add_columns(cols)?;
        if let Some(b) = self.basis.as_mut() {
            b.extend_columns(&self.model);
        }
        Ok(first)
    }

    /// Appends rows; returns the index of the first new row.
    pub fn add_rows(&mut self, rows: Vec<NewRow>) -> Result<usize> {
        let first = self.model.n_rows();
        self.model.add_rows(rows)?;
        if let Some(b) = self.basis.as_mut() {
            b.extend_rows(&self.model);
        }
        Ok(first)
    }

    pub fn set_row_bounds(&mut self, i: usize, lo: f64, hi: f64) -> Result<()> {
        self.model.set_row_bounds(i, lo, hi)
    }

    pub fn set_col_bounds(&mut self, j: usize, lo: f64, hi: f64) -> Result<()> {
        self.model.set_col_bounds(j, lo, hi)
    }

    pub fn into_parts(self) -> (LpModel, Option<Basis>) {
        (self.model, self.basis)
    }
}

#[cfg(test)]
mod tests;
