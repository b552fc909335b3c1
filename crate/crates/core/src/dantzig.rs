//! Column and constraint generation for the Dantzig selector
//!
//! ```text
//!   minimize ||b||_1  subject to  ||X^T (y - X b)||_inf <= lambda
//! ```
//!
//! solved through the LP in `(b+, b-, r)`:
//!
//! ```text
//!   minimize   sum_J (b+_j + b-_j)
//!   subject to r + X_J (b+_J - b-_J) = y
//!              -lambda <= X_i^T r <= lambda      for i in I
//!              b+, b- >= 0, r free
//! ```
//!
//! `X^T X` is never formed. The driver starts from the Lasso support and its
//! active constraints, adds violated constraints while there are any, then
//! prices columns against the equality duals, re-solving from the previous
//! basis each time.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{active_sets, default_eps_act, lasso_fit, LassoFit};
use crate::simplex::{Basis, LpModel, LpSession, LpSolution, LpStatus, NewColumn, NewRow, SimplexOptions, VarStatus};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
}

/// One outer iteration of generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub rows: usize,
    pub cols: usize,
    pub added_rows: usize,
    pub added_cols: usize,
    pub objective: f64,
    pub max_constraint_violation: f64,
    pub max_column_violation: f64,
}

/// Enforced constraints `i` and included columns `j`, both sorted, plus the
/// generation trace.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WorkingSets {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct DantzigSolution {
    /// Coefficients, zero outside the working columns.
    pub beta: Vec<f64>,
    pub residual: Vec<f64>,
    /// Duals of the residual equalities.
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
    /// Lagrangian bound of the final reduced problem.
    pub dual_objective: f64,
    /// `max(0, max_i |X_i^T r| - lambda)` over every index.
    pub max_constraint_violation: f64,
    /// `max(0, max_j |X_j^T alpha| - 1)` over every index.
    pub max_column_violation: f64,
    pub status: SolveStatus,
    pub sets: WorkingSets,
    pub outer_iterations: usize,
    pub simplex_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DsOptions {
    pub eps: f64,
    pub col_batch: usize,
    pub row_batch: usize,
    pub max_outer: usize,
    /// Examine at most this many indices per scan before the final full
    /// certification pass.
    pub partial_scan: Option<usize>,
    pub simplex: SimplexOptions,
}

impl Default for DsOptions {
    fn default() -> Self {
        DsOptions {
            eps: 1e-4,
            col_batch: 30,
            row_batch: 50,
            max_outer: 500,
            partial_scan: None,
            simplex: SimplexOptions::default(),
        }
    }
}

/// A ranked violation: the index and its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub value: f64,
}

pub(crate) fn rank(mut v: Vec<Violation>, limit: usize) -> Vec<Violation> {
    v.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
    v.truncate(limit);
    v
}

pub(crate) fn abs_correlations(x: &SparseMatrix, v: &[f64], range: std::ops::Range<usize>) -> Vec<(usize, f64)> {
    range.into_par_iter().map(|j| (j, x.col_dot(j, v).abs())).collect()
}

/// Indices with `|X_i^T r| - lambda > eps`, ranked by that excess.
pub fn violation_scan_constraints(x: &SparseMatrix, r: &[f64], lambda: f64, eps: f64, limit: usize) -> Vec<Violation> {
    let found = abs_correlations(x, r, 0..x.n_cols())
        .into_iter()
        .filter(|&(_, c)| c - lambda > eps)
        .map(|(index, c)| Violation { index, value: c - lambda })
        .collect();
    rank(found, limit)
}

/// Indices with `|X_j^T alpha| > 1 + eps`, ranked by `|X_j^T alpha|`.
pub fn violation_scan_columns(x: &SparseMatrix, alpha: &[f64], eps: f64, limit: usize) -> Vec<Violation> {
    let found = abs_correlations(x, alpha, 0..x.n_cols())
        .into_iter()
        .filter(|&(_, c)| c > 1.0 + eps)
        .map(|(index, value)| Violation { index, value })
        .collect();
    rank(found, limit)
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

pub(crate) fn beta_columns(x: &SparseMatrix, j: usize) -> [NewColumn; 2] {
    let (idx, val) = x.col(j);
    let plus: Vec<(usize, f64)> = idx.iter().copied().zip(val.iter().copied()).collect();
    let minus = plus.iter().map(|&(i, v)| (i, -v)).collect();
    [
        NewColumn { cost: 1.0, entries: plus, lo: 0.0, hi: f64::INFINITY },
        NewColumn { cost: 1.0, entries: minus, lo: 0.0, hi: f64::INFINITY },
    ]
}

fn range_row(x: &SparseMatrix, i: usize, lambda: f64) -> NewRow {
    let (idx, val) = x.col(i);
    NewRow {
        entries: idx.iter().copied().zip(val.iter().copied()).collect(),
        lo: -lambda,
        hi: lambda,
    }
}

/// Builds the reduced LP for constraint set `i_set` and column set `j_set`.
/// Columns are `r` (n of them) followed by `(b+_j, b-_j)` pairs in `j_set`
/// order; rows are the n equalities followed by the ranges in `i_set` order.
pub fn build_reduced_ds(x: &SparseMatrix, y: &[f64], lambda: f64, i_set: &[usize], j_set: &[usize]) -> Result<LpModel> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {n} rows", y.len())));
    }
    let p = x.n_cols();
    if let Some(&bad) = i_set.iter().chain(j_set).find(|&&k| k >= p) {
        return Err(Error::DimensionMismatch(format!("index {bad} outside 0..{p}")));
    }
    let r_block = SparseMatrix::identity(n);
    let mut model = LpModel::new(
        vec![0.0; n],
        r_block,
        y.iter().map(|&v| (v, v)).collect(),
        vec![(f64::NEG_INFINITY, f64::INFINITY); n],
    )?;
    model.add_columns(j_set.iter().flat_map(|&j| beta_columns(x, j)).collect())?;
    model.add_rows(i_set.iter().map(|&i| range_row(x, i, lambda)).collect())?;
    Ok(model)
}

/// Reduced model plus the bookkeeping that maps it back to `X`.
struct DsSession {
    session: LpSession,
    n: usize,
    p: usize,
    lambda: f64,
    rows: Vec<usize>,
    cols: Vec<usize>,
    in_i: Vec<bool>,
    in_j: Vec<bool>,
    trace: Vec<TraceRecord>,
    scan_cursor: usize,
}

impl DsSession {
    fn new(x: &SparseMatrix, y: &[f64], lambda: f64, i0: &[usize], j0: &[usize], opts: &DsOptions) -> Result<Self> {
        let p = x.n_cols();
        let mut i_set = i0.to_vec();
        i_set.sort_unstable();
        i_set.dedup();
        let mut j_set = j0.to_vec();
        j_set.sort_unstable();
        j_set.dedup();
        let model = build_reduced_ds(x, y, lambda, &i_set, &j_set)?;
        let mut in_i = vec![false; p];
        let mut in_j = vec![false; p];
        i_set.iter().for_each(|&i| in_i[i] = true);
        j_set.iter().for_each(|&j| in_j[j] = true);
        Ok(DsSession {
            session: LpSession::new(model, opts.simplex.clone()),
            n: x.n_rows(),
            p,
            lambda,
            rows: i_set,
            cols: j_set,
            in_i,
            in_j,
            trace: Vec::new(),
            scan_cursor: 0,
        })
    }

    fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        self.lambda = lambda;
        for t in 0..self.rows.len() {
            self.session.set_row_bounds(self.n + t, -lambda, lambda)?;
        }
        Ok(())
    }

    fn add_rows(&mut self, x: &SparseMatrix, idx: &[usize]) -> Result<()> {
        let new: Vec<usize> = idx.iter().copied().filter(|&i| !self.in_i[i]).collect();
        new.iter().for_each(|&i| self.in_i[i] = true);
        self.session
            .add_rows(new.iter().map(|&i| range_row(x, i, self.lambda)).collect())?;
        self.rows.extend(new);
        Ok(())
    }

    fn add_cols(&mut self, x: &SparseMatrix, idx: &[usize]) -> Result<()> {
        let new: Vec<usize> = idx.iter().copied().filter(|&j| !self.in_j[j]).collect();
        new.iter().for_each(|&j| self.in_j[j] = true);
        self.session
            .add_columns(new.iter().flat_map(|&j| beta_columns(x, j)).collect())?;
        self.cols.extend(new);
        Ok(())
    }

    fn beta(&self, sol: &LpSolution) -> Vec<f64> {
        let mut beta = vec![0.0; self.p];
        for (t, &j) in self.cols.iter().enumerate() {
            beta[j] = sol.x[self.n + 2 * t] - sol.x[self.n + 2 * t + 1];
        }
        beta
    }

    /// Scan window for this round; `None` means every index.
    fn window(&mut self, partial: Option<usize>) -> Option<(usize, usize)> {
        let len = partial.filter(|&w| w < self.p)?;
        let start = self.scan_cursor;
        self.scan_cursor = (start + len) % self.p;
        Some((start, len))
    }

    fn sets(&self) -> WorkingSets {
        let mut i = self.rows.clone();
        i.sort_unstable();
        let mut j = self.cols.clone();
        j.sort_unstable();
        WorkingSets { i, j, trace: self.trace.clone() }
    }
}

/// Scores over a cyclic window of indices.
fn windowed_scores(x: &SparseMatrix, v: &[f64], window: Option<(usize, usize)>) -> Vec<(usize, f64)> {
    let p = x.n_cols();
    match window {
        None => abs_correlations(x, v, 0..p),
        Some((start, len)) => {
            let end = start + len;
            let mut out = abs_correlations(x, v, start..end.min(p));
            if end > p {
                out.extend(abs_correlations(x, v, 0..end - p));
            }
            out
        }
    }
}

/// Seeds `(I, J)` from a Lasso fit at `lambda`.
pub fn lasso_seed(x: &SparseMatrix, y: &[f64], lambda: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    lasso_start(x, y, lambda).map(|(i, j, _)| (i, j))
}

fn lasso_start(x: &SparseMatrix, y: &[f64], lambda: f64) -> Result<(Vec<usize>, Vec<usize>, LassoFit)> {
    let fit = lasso_fit(x, y, lambda, None)?;
    let (i, mut j) = active_sets(x, &fit, lambda, default_eps_act(lambda));
    if j.is_empty() {
        let c = x.t_matvec(y);
        if let Some(best) = (0..c.len()).max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()).then(b.cmp(&a))) {
            j.push(best);
        }
    }
    Ok((i, j, fit))
}

/// Basis of the reduced model at which the simplex sits on the Lasso point:
/// `r` and the signed part of each nonzero coefficient are basic, and as
/// many ranges of `I` as there are nonzeros, the most correlated first, rest
/// at the bound matching their sign.
fn lasso_crash(x: &SparseMatrix, fit: &LassoFit, i_set: &[usize], j_set: &[usize]) -> Option<Basis> {
    let n = x.n_rows();
    let mut col_status = vec![VarStatus::Basic; n];
    let mut support = 0;
    for &j in j_set {
        let b = fit.beta[j];
        let (plus, minus) = if b > 0.0 {
            (VarStatus::Basic, VarStatus::AtLower)
        } else if b < 0.0 {
            (VarStatus::AtLower, VarStatus::Basic)
        } else {
            (VarStatus::AtLower, VarStatus::AtLower)
        };
        support += usize::from(b != 0.0);
        col_status.extend([plus, minus]);
    }
    if support > i_set.len() {
        return None;
    }
    let corr: Vec<f64> = i_set.iter().map(|&i| x.col_dot(i, &fit.residual)).collect();
    let mut order: Vec<usize> = (0..i_set.len()).collect();
    order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()).then(a.cmp(&b)));
    let mut row_status = vec![VarStatus::AtLower; n];
    row_status.extend(std::iter::repeat_n(VarStatus::Basic, i_set.len()));
    for &t in &order[..support] {
        row_status[n + t] = if corr[t] > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
    }
    Some(Basis { col_status, row_status })
}

fn check_inputs(x: &SparseMatrix, y: &[f64], lambda: f64) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {} rows", y.len(), x.n_rows())));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("X"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::NonFinite("lambda"));
    }
    Ok(())
}

/// Solves at one `lambda`, seeding the working sets from the Lasso.
/// The simplex starts from the basis of the Lasso point.
pub fn solve_ds(x: &SparseMatrix, y: &[f64], lambda: f64, opts: &DsOptions) -> Result<DantzigSolution> {
    check_inputs(x, y, lambda)?;
    let (i0, j0, fit) = lasso_start(x, y, lambda)?;
    let mut s = DsSession::new(x, y, lambda, &i0, &j0, opts)?;
    if let Some(basis) = lasso_crash(x, &fit, &s.rows, &s.cols) {
        s.session = LpSession::with_basis(s.session.model().clone(), basis, opts.simplex.clone())?;
    }
    generate(&mut s, x, y, opts)
}

/// Solves at one `lambda` from explicit starting sets.
pub fn solve_ds_from(
    x: &SparseMatrix,
    y: &[f64],
    lambda: f64,
    i0: &[usize],
    j0: &[usize],
    opts: &DsOptions,
) -> Result<DantzigSolution> {
    check_inputs(x, y, lambda)?;
    let mut s = DsSession::new(x, y, lambda, i0, j0, opts)?;
    generate(&mut s, x, y, opts)
}

/// Solves the LP with every constraint and column present.
pub fn solve_ds_full(x: &SparseMatrix, y: &[f64], lambda: f64, opts: &DsOptions) -> Result<DantzigSolution> {
    let all: Vec<usize> = (0..x.n_cols()).collect();
    solve_ds_from(x, y, lambda, &all, &all, opts)
}

/// Algorithm loop on an existing session: constraints first, then columns.
fn generate(s: &mut DsSession, x: &SparseMatrix, y: &[f64], opts: &DsOptions) -> Result<DantzigSolution> {
    let start_iterations = s.session.total_iterations();
    let mut outer = 0;
    let mut sol = s.session.solve()?;
    loop {
        if sol.status == LpStatus::IterationLimit || outer >= opts.max_outer {
            return finish(s, x, y, &sol, SolveStatus::IterationLimit, outer, start_iterations);
        }
        outer += 1;
        if sol.status == LpStatus::Infeasible {
            // Columns that can reduce the phase-one infeasibility.
            let farkas = &sol.duals[..s.n];
            let scores = abs_correlations(x, farkas, 0..s.p);
            let found = scores
                .into_iter()
                .filter(|&(j, c)| !s.in_j[j] && c > 1e-9)
                .map(|(index, value)| Violation { index, value })
                .collect();
            let add: Vec<usize> = rank(found, opts.col_batch).iter().map(|v| v.index).collect();
            if add.is_empty() {
                return Err(Error::NumericalFailure("reduced model infeasible and no column prices in".into()));
            }
            debug!("reduced model infeasible; adding {} columns", add.len());
            s.add_cols(x, &add)?;
            sol = s.session.solve()?;
            continue;
        }
        if sol.status == LpStatus::Unbounded {
            return Err(Error::NumericalFailure("reduced model unbounded".into()));
        }

        let beta = s.beta(&sol);
        let residual: Vec<f64> = sol.x[..s.n].to_vec();
        let alpha: Vec<f64> = sol.duals[..s.n].iter().map(|v| -v).collect();

        let mut window = s.window(opts.partial_scan);
        let mut full = window.is_none();
        let (add_rows, add_cols) = loop {
            let rows: Vec<usize> = rank(
                windowed_scores(x, &residual, window)
                    .into_iter()
                    .filter(|&(i, c)| !s.in_i[i] && c - s.lambda > opts.eps)
                    .map(|(index, c)| Violation { index, value: c - s.lambda })
                    .collect(),
                opts.row_batch,
            )
            .iter()
            .map(|v| v.index)
            .collect();
            if !rows.is_empty() {
                break (rows, Vec::new());
            }
            let cols: Vec<usize> = rank(
                windowed_scores(x, &alpha, window)
                    .into_iter()
                    .filter(|&(j, c)| !s.in_j[j] && c > 1.0 + opts.eps)
                    .map(|(index, value)| Violation { index, value })
                    .collect(),
                opts.col_batch,
            )
            .iter()
            .map(|v| v.index)
            .collect();
            if !cols.is_empty() || full {
                break (Vec::new(), cols);
            }
            // Nothing in the window: certify with one pass over everything.
            window = None;
            full = true;
        };

        s.trace.push(TraceRecord {
            iteration: outer,
            rows: s.rows.len(),
            cols: s.cols.len(),
            added_rows: add_rows.len(),
            added_cols: add_cols.len(),
            objective: beta.iter().map(|b| b.abs()).sum(),
            max_constraint_violation: 0.0,
            max_column_violation: 0.0,
        });
        if add_rows.is_empty() && add_cols.is_empty() {
            return finish(s, x, y, &sol, SolveStatus::Optimal, outer, start_iterations);
        }
        if !add_rows.is_empty() {
            s.add_rows(x, &add_rows)?;
        } else {
            s.add_cols(x, &add_cols)?;
        }
        sol = s.session.solve()?;
    }
}

fn finish(
    s: &mut DsSession,
    x: &SparseMatrix,
    y: &[f64],
    sol: &LpSolution,
    status: SolveStatus,
    outer: usize,
    start_iterations: usize,
) -> Result<DantzigSolution> {
    let beta = if sol.status == LpStatus::Infeasible { vec![0.0; s.p] } else { s.beta(sol) };
    let fit = x.matvec(&beta);
    let residual: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let alpha: Vec<f64> = sol.duals[..s.n].iter().map(|v| -v).collect();
    let max_constraint_violation = (inf_norm(&x.t_matvec(&residual)) - s.lambda).max(0.0);
    let max_column_violation = (inf_norm(&x.t_matvec(&alpha)) - 1.0).max(0.0);
    if let Some(last) = s.trace.last_mut() {
        last.max_constraint_violation = max_constraint_violation;
        last.max_column_violation = max_column_violation;
    }
    Ok(DantzigSolution {
        objective: beta.iter().map(|b| b.abs()).sum(),
        beta,
        residual,
        alpha,
        lambda: s.lambda,
        dual_objective: sol.dual_objective,
        max_constraint_violation,
        max_column_violation,
        status,
        sets: s.sets(),
        outer_iterations: outer,
        simplex_iterations: s.session.total_iterations() - start_iterations,
    })
}

/// Solves a strictly decreasing grid. The Lasso is fitted once at the
/// smallest value; each solve then starts from the previous working sets and
/// basis.
pub fn solve_ds_path(x: &SparseMatrix, y: &[f64], grid: &[f64], opts: &DsOptions) -> Result<Vec<DantzigSolution>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|l| !l.is_finite() || *l <= 0.0) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid);
    }
    check_inputs(x, y, grid[0])?;
    let smallest = grid[grid.len() - 1];
    let (i0, j0) = lasso_seed(x, y, smallest)?;
    let mut s = DsSession::new(x, y, grid[0], &i0, &j0, opts)?;
    let mut out = Vec::with_capacity(grid.len());
    for (k, &lambda) in grid.iter().enumerate() {
        if k > 0 {
            s.set_lambda(lambda)?;
        }
        s.trace.clear();
        out.push(generate(&mut s, x, y, opts)?);
    }
    Ok(out)
}
