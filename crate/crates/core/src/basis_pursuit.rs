//! Column generation for basis pursuit
//!
//! ```text
//!   minimize ||b||_1  subject to  X b = y
//! ```
//!
//! The starting columns come from a Lasso continuation: the first support
//! along a halving sequence of `lambda` whose span contains `y`, completed
//! greedily when the sequence runs out.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::dantzig::{abs_correlations, beta_columns, inf_norm, rank, SolveStatus, Violation};
use crate::error::{Error, Result};
use crate::lasso::lasso_fit;
use crate::simplex::{LpModel, LpSession, LpStatus, SimplexOptions};
use crate::sparse::SparseMatrix;

/// Relative residual below which `y` counts as lying in a column span.
pub const SPAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BpOptions {
    pub eps: f64,
    pub col_batch: usize,
    pub max_outer: usize,
    pub simplex: SimplexOptions,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            eps: 1e-4,
            col_batch: 30,
            max_outer: 500,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BpTraceRecord {
    pub iteration: usize,
    pub cols: usize,
    pub added_cols: usize,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct BpSolution {
    pub beta: Vec<f64>,
    /// Duals of the equalities.
    pub v: Vec<f64>,
    pub objective: f64,
    /// `v^T y`.
    pub dual_objective: f64,
    /// `||y - X beta||_inf`.
    pub equality_residual: f64,
    /// `max(0, max_j |X_j^T v| - 1)` over every index.
    pub max_column_violation: f64,
    pub status: SolveStatus,
    pub j: Vec<usize>,
    pub trace: Vec<BpTraceRecord>,
    pub outer_iterations: usize,
    pub simplex_iterations: usize,
}

/// Incremental orthonormal basis of a growing column set.
struct Span {
    q: Vec<Vec<f64>>,
}

impl Span {
    fn new() -> Self {
        Span { q: Vec::new() }
    }

    fn project_out(&self, v: &mut [f64]) {
        // Two passes keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for q in &self.q {
                let d: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
    }

    /// Adds a column; returns false if it is (numerically) dependent.
    fn push(&mut self, mut v: Vec<f64>) -> bool {
        let before = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if before == 0.0 || self.q.len() >= v.len() {
            return false;
        }
        self.project_out(&mut v);
        let after = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if after <= 1e-10 * before {
            return false;
        }
        v.iter_mut().for_each(|a| *a /= after);
        self.q.push(v);
        true
    }

    fn residual(&self, y: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        self.project_out(&mut r);
        r
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Least-squares residual norm of `y` on the columns `cols`.
pub fn span_residual(x: &SparseMatrix, y: &[f64], cols: &[usize]) -> f64 {
    let mut span = Span::new();
    for &j in cols {
        span.push(x.dense_col(j));
    }
    norm2(&span.residual(y))
}

/// Starting columns whose span contains `y`.
pub fn bp_init_columns(x: &SparseMatrix, y: &[f64]) -> Result<Vec<usize>> {
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {} rows", y.len(), x.n_rows())));
    }
    let ynorm = norm2(y);
    if ynorm == 0.0 {
        return Ok(Vec::new());
    }
    let tol = SPAN_TOL * ynorm;
    let lmax = inf_norm(&x.t_matvec(y));
    let mut support: Vec<usize> = Vec::new();
    let mut warm = None;
    for k in 1..=30 {
        let lambda = lmax * 0.5f64.powi(k);
        let fit = lasso_fit(x, y, lambda, warm.as_ref())?;
        support = (0..fit.beta.len()).filter(|&j| fit.beta[j] != 0.0).collect();
        if span_residual(x, y, &support) <= tol {
            debug!("lasso continuation feasible at step {k} with {} columns", support.len());
            return Ok(support);
        }
        warm = Some(fit);
    }

    // Greedy completion by correlation with the current projection residual.
    let mut span = Span::new();
    let mut chosen = Vec::new();
    for &j in &support {
        if span.push(x.dense_col(j)) {
            chosen.push(j);
        }
    }
    let mut used = vec![false; x.n_cols()];
    chosen.iter().for_each(|&j| used[j] = true);
    loop {
        let r = span.residual(y);
        if norm2(&r) <= tol {
            chosen.sort_unstable();
            return Ok(chosen);
        }
        let scores = abs_correlations(x, &r, 0..x.n_cols());
        let pick = scores
            .iter()
            .filter(|&&(j, c)| !used[j] && c > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some(&(j, _)) = pick else {
            return Err(Error::InitInfeasible);
        };
        used[j] = true;
        if span.push(x.dense_col(j)) {
            chosen.push(j);
        }
    }
}

pub fn solve_bp(x: &SparseMatrix, y: &[f64], opts: &BpOptions) -> Result<BpSolution> {
    let j0 = bp_init_columns(x, y)?;
    solve_bp_from(x, y, &j0, opts)
}

/// Column generation from an explicit starting set.
pub fn solve_bp_from(x: &SparseMatrix, y: &[f64], j0: &[usize], opts: &BpOptions) -> Result<BpSolution> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {n} rows", y.len())));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("X"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    let mut cols: Vec<usize> = j0.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let mut in_j = vec![false; p];
    cols.iter().for_each(|&j| in_j[j] = true);

    let model = LpModel::new(
        Vec::new(),
        SparseMatrix::with_rows(n),
        y.iter().map(|&v| (v, v)).collect(),
        Vec::new(),
    )?;
    let mut session = LpSession::new(model, opts.simplex.clone());
    session.add_columns(cols.iter().flat_map(|&j| beta_columns(x, j)).collect())?;

    let mut trace = Vec::new();
    let mut outer = 0;
    let mut sol = session.solve()?;
    let status = loop {
        if sol.status == LpStatus::IterationLimit || outer >= opts.max_outer {
            break SolveStatus::IterationLimit;
        }
        if sol.status == LpStatus::Unbounded {
            return Err(Error::NumericalFailure("basis pursuit LP unbounded".into()));
        }
        outer += 1;
        let infeasible = sol.status == LpStatus::Infeasible;
        let scores = abs_correlations(x, &sol.duals, 0..p);
        let threshold = if infeasible { 1e-9 } else { 1.0 + opts.eps };
        let found = scores
            .into_iter()
            .filter(|&(j, c)| !in_j[j] && c > threshold)
            .map(|(index, value)| Violation { index, value })
            .collect();
        let add: Vec<usize> = rank(found, opts.col_batch).iter().map(|v| v.index).collect();
        trace.push(BpTraceRecord {
            iteration: outer,
            cols: cols.len(),
            added_cols: add.len(),
            objective: if infeasible { f64::INFINITY } else { sol.objective },
        });
        if add.is_empty() {
            if infeasible {
                return Err(Error::InitInfeasible);
            }
            break SolveStatus::Optimal;
        }
        add.iter().for_each(|&j| in_j[j] = true);
        session.add_columns(add.iter().flat_map(|&j| beta_columns(x, j)).collect())?;
        cols.extend(add);
        sol = session.solve()?;
    };

    let mut beta = vec![0.0; p];
    if sol.status != LpStatus::Infeasible {
        for (t, &j) in cols.iter().enumerate() {
            beta[j] = sol.x[2 * t] - sol.x[2 * t + 1];
        }
    }
    let fit = x.matvec(&beta);
    let equality_residual = y.iter().zip(&fit).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let v = sol.duals.clone();
    let max_column_violation = (inf_norm(&x.t_matvec(&v)) - 1.0).max(0.0);
    let mut j = cols;
    j.sort_unstable();
    Ok(BpSolution {
        objective: beta.iter().map(|b| b.abs()).sum(),
        dual_objective: v.iter().zip(y).map(|(a, b)| a * b).sum(),
        beta,
        v,
        equality_residual,
        max_column_violation,
        status,
        j,
        trace,
        outer_iterations: outer,
        simplex_iterations: session.total_iterations(),
    })
}

/// Basis pursuit with every column present.
pub fn solve_bp_full(x: &SparseMatrix, y: &[f64], opts: &BpOptions) -> Result<BpSolution> {
    let all: Vec<usize> = (0..x.n_cols()).collect();
    solve_bp_from(x, y, &all, opts)
}
