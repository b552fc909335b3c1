//! Fused Dantzig selector.
//!
//! Signal estimation (`X = I`) works on a banded LP in the variables
//! `beta`, `r`, `g`, `alpha`:
//!
//! ```text
//!   minimize    sum_{j >= 1} |alpha_j|
//!   subject to  D beta = alpha,  r = y - beta,  D^T g = r,
//!               g_0 = 0,  -lambda <= g_i <= lambda  (i >= 1)
//! ```
//!
//! where `D` takes the first entry and successive differences. Every pricing
//! and violation check is O(1) per index. Regression with a general design is
//! reduced to an ordinary Dantzig selector on projected data.

use log::debug;

use crate::dantzig::{inf_norm, solve_ds_from, DsOptions, SolveStatus, TraceRecord, Violation};
use crate::error::{Error, Result};
use crate::fused_prox::{cumulative, fista_fused_with, fused_dp, knots_of, FistaOptions, KNOT_THRESHOLD};
use crate::simplex::{LpModel, LpSession, LpSolution, LpStatus, NewColumn};
use crate::sparse::SparseMatrix;

/// Relative slack below `lambda` at which a constraint counts as active
/// when seeding the working set.
pub const ACTIVE_REL_TOL: f64 = 1e-6;

/// Reduced banded LP together with its working sets.
///
/// Column layout: `beta` (n), `r` (n), `g` (n), `alpha_0`, then one
/// `(alpha+_j, alpha-_j)` pair per entry of `j`. Row layout: the `D beta`
/// rows (n), the fit rows (n), the `D^T g` rows (n).
#[derive(Debug, Clone)]
pub struct FusedDsModel {
    pub n: usize,
    pub lambda: f64,
    /// Indices `i >= 1` whose `g_i` is bounded.
    pub i: Vec<usize>,
    /// Indices `j >= 1` whose `alpha_j` may be nonzero.
    pub j: Vec<usize>,
    pub lp: LpModel,
}

impl FusedDsModel {
    fn g_col(&self, i: usize) -> usize {
        2 * self.n + i
    }

    fn alpha_cols(&self, t: usize) -> (usize, usize) {
        let base = 3 * self.n + 1 + 2 * t;
        (base, base + 1)
    }
}

fn alpha_pair(j: usize) -> [NewColumn; 2] {
    [
        NewColumn { cost: 1.0, entries: vec![(j, -1.0)], lo: 0.0, hi: f64::INFINITY },
        NewColumn { cost: 1.0, entries: vec![(j, 1.0)], lo: 0.0, hi: f64::INFINITY },
    ]
}

fn check_subset(n: usize, set: &[usize], what: &str) -> Result<()> {
    match set.iter().find(|&&k| k == 0 || k >= n) {
        Some(bad) => Err(Error::DimensionMismatch(format!("{what} index {bad} outside 1..{n}"))),
        None => Ok(()),
    }
}

fn sorted_unique(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn build_fused_model(y: &[f64], lambda: f64, i_set: &[usize], j_set: &[usize]) -> Result<FusedDsModel> {
    let n = y.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty signal".into()));
    }
    check_subset(n, i_set, "constraint")?;
    check_subset(n, j_set, "column")?;
    let i = sorted_unique(i_set);
    let j = sorted_unique(j_set);

    let n_cols = 3 * n + 1;
    let mut t = Vec::with_capacity(8 * n);
    for k in 0..n {
        // D beta - alpha = 0
        t.push((k, k, 1.0));
        if k > 0 {
            t.push((k, k - 1, -1.0));
        }
        // r + beta = y
        t.push((n + k, n + k, 1.0));
        t.push((n + k, k, 1.0));
        // g_k - g_{k+1} - r_k = 0
        t.push((2 * n + k, 2 * n + k, 1.0));
        if k + 1 < n {
            t.push((2 * n + k, 2 * n + k + 1, -1.0));
        }
        t.push((2 * n + k, n + k, -1.0));
    }
    t.push((0, 3 * n, -1.0));
    let a = SparseMatrix::from_triplets(3 * n, n_cols, &t)?;

    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let mut var_bounds = vec![free; n_cols];
    var_bounds[2 * n] = (0.0, 0.0);
    for &k in &i {
        var_bounds[2 * n + k] = (-lambda, lambda);
    }
    let mut row_bounds = vec![(0.0, 0.0); 3 * n];
    for k in 0..n {
        row_bounds[n + k] = (y[k], y[k]);
    }
    let mut lp = LpModel::new(vec![0.0; n_cols], a, row_bounds, var_bounds)?;
    lp.add_columns(j.iter().flat_map(|&k| alpha_pair(k)).collect())?;
    Ok(FusedDsModel { n, lambda, i, j, lp })
}

/// Negative reduced costs `min(1 - v_j, 1 + v_j)` for `j >= 1` outside
/// `j_set`, most negative first.
pub fn price_fused_columns(v: &[f64], j_set: &[usize], eps: f64, limit: usize) -> Vec<Violation> {
    let mut in_j = vec![false; v.len()];
    j_set.iter().filter(|&&j| j < v.len()).for_each(|&j| in_j[j] = true);
    let mut found: Vec<Violation> = (1..v.len())
        .filter(|&j| !in_j[j])
        .map(|j| Violation { index: j, value: (1.0 - v[j]).min(1.0 + v[j]) })
        .filter(|c| c.value < -eps)
        .collect();
    found.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
    found.truncate(limit);
    found
}

/// Indices `i >= 1` outside `i_set` with `|g_i| > lambda + eps`, ranked by
/// the excess `|g_i| - lambda`.
pub fn check_fused_constraints(g: &[f64], i_set: &[usize], lambda: f64, eps: f64, limit: usize) -> Vec<Violation> {
    let mut in_i = vec![false; g.len()];
    i_set.iter().filter(|&&i| i < g.len()).for_each(|&i| in_i[i] = true);
    let mut found: Vec<Violation> = (1..g.len())
        .filter(|&i| !in_i[i])
        .map(|i| Violation { index: i, value: g[i].abs() - lambda })
        .filter(|c| c.value > eps)
        .collect();
    found.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
    found.truncate(limit);
    found
}

/// `H^T r`: suffix sums, `g_i = sum_{k >= i} r_k`.
pub fn suffix_sums(r: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; r.len()];
    let mut acc = 0.0;
    for k in (0..r.len()).rev() {
        acc += r[k];
        g[k] = acc;
    }
    g
}

#[derive(Debug, Clone)]
pub struct FusedDsSolution {
    pub beta: Vec<f64>,
    /// `D beta`; `alpha[0]` is the unpenalized level.
    pub alpha: Vec<f64>,
    pub lambda: f64,
    /// `sum_{j >= 1} |alpha_j|`.
    pub objective: f64,
    pub max_constraint_violation: f64,
    pub max_column_violation: f64,
    pub status: SolveStatus,
    /// Bounded constraint indices (in `alpha` numbering).
    pub i: Vec<usize>,
    /// Generated `alpha` indices.
    pub j: Vec<usize>,
    pub trace: Vec<TraceRecord>,
    pub outer_iterations: usize,
    pub simplex_iterations: usize,
}

impl FusedDsSolution {
    pub fn knots(&self) -> Vec<usize> {
        knots_of(&self.alpha, KNOT_THRESHOLD)
    }
}

/// Working sets from the fused lasso at the same `lambda`.
pub fn fused_signal_seed(y: &[f64], lambda: f64) -> (Vec<usize>, Vec<usize>) {
    let fit = fused_dp(y, lambda);
    let r: Vec<f64> = y.iter().zip(&fit.beta).map(|(a, b)| a - b).collect();
    let g = suffix_sums(&r);
    let cut = lambda * (1.0 - ACTIVE_REL_TOL);
    let i = (1..g.len()).filter(|&k| g[k].abs() >= cut).collect();
    (i, fit.knots)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::NonFinite("lambda"));
    }
    Ok(())
}

pub fn solve_fused_signal(y: &[f64], lambda: f64, opts: &DsOptions) -> Result<FusedDsSolution> {
    check_lambda(lambda)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    let (i0, j0) = fused_signal_seed(y, lambda);
    solve_fused_signal_from(y, lambda, &i0, &j0, opts)
}

/// Signal estimation from explicit starting sets.
pub fn solve_fused_signal_from(
    y: &[f64],
    lambda: f64,
    i0: &[usize],
    j0: &[usize],
    opts: &DsOptions,
) -> Result<FusedDsSolution> {
    check_lambda(lambda)?;
    let model = build_fused_model(y, lambda, i0, j0)?;
    let n = model.n;
    let lp = model.lp.clone();
    let mut m = model;
    let mut session = LpSession::new(lp, opts.simplex.clone());
    let mut trace = Vec::new();
    let mut outer = 0;
    let mut sol = session.solve()?;
    let status = loop {
        if sol.status == LpStatus::IterationLimit || outer >= opts.max_outer {
            break SolveStatus::IterationLimit;
        }
        if sol.status == LpStatus::Unbounded {
            return Err(Error::NumericalFailure("fused model unbounded".into()));
        }
        outer += 1;
        if sol.status == LpStatus::Infeasible {
            let mut in_j = vec![false; n];
            m.j.iter().for_each(|&j| in_j[j] = true);
            let mut found: Vec<Violation> = (1..n)
                .filter(|&j| !in_j[j] && sol.duals[j].abs() > 1e-9)
                .map(|j| Violation { index: j, value: sol.duals[j].abs() })
                .collect();
            found.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)));
            found.truncate(opts.col_batch);
            if found.is_empty() {
                return Err(Error::NumericalFailure("fused model infeasible and no column prices in".into()));
            }
            debug!("fused model infeasible; adding {} columns", found.len());
            add_alpha(&mut session, &mut m, &found)?;
            sol = session.solve()?;
            continue;
        }
        let g = &sol.x[2 * n..3 * n];
        let v: Vec<f64> = sol.duals[..n].iter().map(|d| -d).collect();
        let rows = check_fused_constraints(g, &m.i, lambda, opts.eps, opts.row_batch);
        let cols = if rows.is_empty() {
            price_fused_columns(&v, &m.j, opts.eps, opts.col_batch)
        } else {
            Vec::new()
        };
        trace.push(TraceRecord {
            iteration: outer,
            rows: m.i.len(),
            cols: m.j.len(),
            added_rows: rows.len(),
            added_cols: cols.len(),
            objective: sol.objective,
            max_constraint_violation: rows.first().map_or(0.0, |c| c.value),
            max_column_violation: cols.first().map_or(0.0, |c| -c.value),
        });
        if rows.is_empty() && cols.is_empty() {
            break SolveStatus::Optimal;
        }
        for c in &rows {
            session.set_col_bounds(m.g_col(c.index), -lambda, lambda)?;
            m.i.push(c.index);
        }
        add_alpha(&mut session, &mut m, &cols)?;
        sol = session.solve()?;
    };
    Ok(finish_signal(y, &m, &sol, status, trace, outer, session.total_iterations()))
}

fn add_alpha(session: &mut LpSession, m: &mut FusedDsModel, cols: &[Violation]) -> Result<()> {
    if cols.is_empty() {
        return Ok(());
    }
    session.add_columns(cols.iter().flat_map(|c| alpha_pair(c.index)).collect())?;
    m.j.extend(cols.iter().map(|c| c.index));
    Ok(())
}

fn finish_signal(
    y: &[f64],
    m: &FusedDsModel,
    sol: &LpSolution,
    status: SolveStatus,
    trace: Vec<TraceRecord>,
    outer: usize,
    simplex_iterations: usize,
) -> FusedDsSolution {
    let n = m.n;
    let mut alpha = vec![0.0; n];
    if sol.status != LpStatus::Infeasible {
        alpha[0] = sol.x[3 * n];
        for (t, &j) in m.j.iter().enumerate() {
            let (p, q) = m.alpha_cols(t);
            alpha[j] = sol.x[p] - sol.x[q];
        }
    }
    let beta = cumulative(&alpha);
    let r: Vec<f64> = y.iter().zip(&beta).map(|(a, b)| a - b).collect();
    let g = suffix_sums(&r);
    let max_constraint_violation = g
        .iter()
        .enumerate()
        .map(|(k, gk)| if k == 0 { gk.abs() } else { gk.abs() - m.lambda })
        .fold(0.0f64, f64::max);
    let max_column_violation = sol.duals[1..n].iter().fold(0.0f64, |acc, d| acc.max(d.abs() - 1.0));
    let mut i = m.i.clone();
    i.sort_unstable();
    let mut j = m.j.clone();
    j.sort_unstable();
    FusedDsSolution {
        objective: alpha[1..].iter().map(|a| a.abs()).sum(),
        beta,
        alpha,
        lambda: m.lambda,
        max_constraint_violation,
        max_column_violation,
        status,
        i,
        j,
        trace,
        outer_iterations: outer,
        simplex_iterations,
    }
}

/// Smallest `lambda` at which the constant fit `mean(y)` is optimal.
pub fn full_fusion_lambda(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let r: Vec<f64> = y.iter().map(|v| v - mean).collect();
    inf_norm(&suffix_sums(&r)[1..])
}

/// Data of the projected problem `min ||a||_1 s.t. ||Xt^T (yt - Xt a)|| <= lambda`.
#[derive(Debug, Clone)]
pub struct ProjectedData {
    /// `(I - P) y`.
    pub y_tilde: Vec<f64>,
    /// `(I - P) X H_B`, n by p - 1.
    pub x_tilde: SparseMatrix,
    /// `X 1`, the direction `P` projects onto.
    pub u: Vec<f64>,
}

impl ProjectedData {
    pub fn new(x: &SparseMatrix, y: &[f64]) -> Result<Self> {
        let (n, p) = (x.n_rows(), x.n_cols());
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("y has {} entries, X has {n} rows", y.len())));
        }
        if p < 2 {
            return Err(Error::DimensionMismatch("fused regression needs at least two columns".into()));
        }
        // Columns of X H are suffix sums of the columns of X.
        let mut suffix = vec![vec![0.0; n]; p];
        let mut acc = vec![0.0; n];
        for j in (0..p).rev() {
            x.col_axpy(j, 1.0, &mut acc);
            suffix[j].copy_from_slice(&acc);
        }
        let u = std::mem::take(&mut suffix[0]);
        let uu: f64 = u.iter().map(|a| a * a).sum();
        let project = |v: &mut [f64]| {
            if uu > 0.0 {
                let s = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() / uu;
                v.iter_mut().zip(&u).for_each(|(b, a)| *b -= s * a);
            }
        };
        let mut y_tilde = y.to_vec();
        project(&mut y_tilde);
        for c in suffix.iter_mut().skip(1) {
            project(c);
        }
        let x_tilde = SparseMatrix::from_dense_cols(n, &suffix[1..])?;
        Ok(ProjectedData { y_tilde, x_tilde, u })
    }

    /// Full `alpha` from its penalized block, choosing `alpha_0` so that
    /// `1^T X^T (y - X beta) = 0`.
    pub fn recover_alpha(&self, x: &SparseMatrix, y: &[f64], alpha_b: &[f64]) -> Vec<f64> {
        let mut alpha = Vec::with_capacity(alpha_b.len() + 1);
        alpha.push(0.0);
        alpha.extend_from_slice(alpha_b);
        let fit = x.matvec(&cumulative(&alpha));
        let uu: f64 = self.u.iter().map(|a| a * a).sum();
        if uu > 0.0 {
            alpha[0] = self.u.iter().zip(y.iter().zip(&fit)).map(|(a, (b, c))| a * (b - c)).sum::<f64>() / uu;
        }
        alpha
    }
}

/// Working sets for the projected problem from a FISTA fit, in `X~` column
/// numbering.
pub fn fused_regression_seed(
    x: &SparseMatrix,
    y: &[f64],
    data: &ProjectedData,
    lambda: f64,
    fista: &FistaOptions,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let fit = fista_fused_with(x, y, lambda, fista)?;
    let alpha_b = &fit.alpha[1..];
    let j: Vec<usize> = (0..alpha_b.len()).filter(|&k| alpha_b[k].abs() > KNOT_THRESHOLD).collect();
    let fitted = data.x_tilde.matvec(alpha_b);
    let r: Vec<f64> = data.y_tilde.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let c = data.x_tilde.t_matvec(&r);
    let cut = lambda * (1.0 - ACTIVE_REL_TOL);
    let i = (0..c.len()).filter(|&k| c[k].abs() >= cut).collect();
    Ok((i, j))
}

pub fn solve_fused_regression(x: &SparseMatrix, y: &[f64], lambda: f64, opts: &DsOptions) -> Result<FusedDsSolution> {
    solve_fused_regression_with(x, y, lambda, opts, &FistaOptions::default())
}

pub fn solve_fused_regression_with(
    x: &SparseMatrix,
    y: &[f64],
    lambda: f64,
    opts: &DsOptions,
    fista: &FistaOptions,
) -> Result<FusedDsSolution> {
    check_lambda(lambda)?;
    if !x.is_finite() {
        return Err(Error::NonFinite("X"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    let data = ProjectedData::new(x, y)?;
    let (i0, j0) = fused_regression_seed(x, y, &data, lambda, fista)?;
    let ds = solve_ds_from(&data.x_tilde, &data.y_tilde, lambda, &i0, &j0, opts)?;
    let alpha = data.recover_alpha(x, y, &ds.beta);
    Ok(FusedDsSolution {
        beta: cumulative(&alpha),
        alpha,
        lambda,
        objective: ds.objective,
        max_constraint_violation: ds.max_constraint_violation,
        max_column_violation: ds.max_column_violation,
        status: ds.status,
        i: ds.sets.i.iter().map(|k| k + 1).collect(),
        j: ds.sets.j.iter().map(|k| k + 1).collect(),
        trace: ds.sets.trace,
        outer_iterations: ds.outer_iterations,
        simplex_iterations: ds.simplex_iterations,
    })
}
