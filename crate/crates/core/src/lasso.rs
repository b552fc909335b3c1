//! Coordinate descent for the Lasso
//!
//! ```text
//!   minimize  1/2 ||y - X b||^2 + lambda ||b||_1
//! ```
//!
//! Sweeps cycle over the current nonzero coordinates and periodically over
//! all of them. With `p <= 10_000` the gradient is maintained through cached
//! Gram columns of the coordinates that ever became nonzero; otherwise the
//! residual is updated directly.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Coordinates above this count switch the solver to residual updates.
pub const COVARIANCE_MAX_P: usize = 10_000;

#[derive(Debug, Clone)]
pub struct LassoOptions {
    /// A sweep converges when no coordinate moves by more than this.
    pub update_tol: f64,
    /// Required KKT residual at return.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
    /// Force (`Some(true)`) or forbid the Gram-cached mode; `None` decides by `p`.
    pub covariance: Option<bool>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            update_tol: 1e-8,
            kkt_tol: 1e-7,
            max_sweeps: 100_000,
            covariance: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    /// `y - X beta`, recomputed from scratch before returning.
    pub residual: Vec<f64>,
    pub lambda: f64,
    pub kkt_violation: f64,
    pub sweeps: usize,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

pub fn lasso_objective(x: &SparseMatrix, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let fit = x.matvec(beta);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * rss + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest violation of the Lasso optimality conditions.
pub fn kkt_violation(x: &SparseMatrix, residual: &[f64], beta: &[f64], lambda: f64) -> f64 {
    (0..x.n_cols())
        .map(|j| {
            let g = x.col_dot(j, residual);
            if beta[j] > 0.0 {
                (g - lambda).abs()
            } else if beta[j] < 0.0 {
                (g + lambda).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn residual_of(x: &SparseMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let fit = x.matvec(beta);
    y.iter().zip(fit).map(|(a, b)| a - b).collect()
}

pub fn lasso_fit(x: &SparseMatrix, y: &[f64], lambda: f64, warm: Option<&LassoFit>) -> Result<LassoFit> {
    lasso_fit_with(x, y, lambda, warm, &LassoOptions::default())
}

pub fn lasso_fit_with(
    x: &SparseMatrix,
    y: &[f64],
    lambda: f64,
    warm: Option<&LassoFit>,
    opts: &LassoOptions,
) -> Result<LassoFit> {
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
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::NonFinite("lambda"));
    }
    let mut beta = match warm {
        Some(w) if w.beta.len() == p => w.beta.clone(),
        _ => vec![0.0; p],
    };
    let norms: Vec<f64> = (0..p).map(|j| x.col_norm_sq(j)).collect();
    let covariance = opts.covariance.unwrap_or(p <= COVARIANCE_MAX_P);
    let mut state = if covariance {
        Coords::Gram(GramState::new(x, y, &beta))
    } else {
        Coords::Naive(residual_of(x, y, &beta))
    };

    let mut sweeps = 0;
    let mut tol = opts.update_tol;
    loop {
        // Full sweep, then iterate on the nonzero set until it settles.
        let mut change = sweep(x, &norms, lambda, &mut beta, &mut state, None);
        sweeps += 1;
        while change > tol && sweeps < opts.max_sweeps {
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                let c = sweep(x, &norms, lambda, &mut beta, &mut state, Some(&active));
                sweeps += 1;
                if c <= tol || sweeps >= opts.max_sweeps {
                    break;
                }
            }
            change = sweep(x, &norms, lambda, &mut beta, &mut state, None);
            sweeps += 1;
        }
        let residual = residual_of(x, y, &beta);
        let kkt = kkt_violation(x, &residual, &beta, lambda);
        if kkt <= opts.kkt_tol || sweeps >= opts.max_sweeps || tol < 1e-15 {
            return Ok(LassoFit { beta, residual, lambda, kkt_violation: kkt, sweeps });
        }
        // Drift in the maintained quantities or a loose tolerance; rebuild and tighten.
        state = match state {
            Coords::Gram(_) => Coords::Gram(GramState::new(x, y, &beta)),
            Coords::Naive(_) => Coords::Naive(residual),
        };
        tol *= 0.1;
    }
}

enum Coords {
    Naive(Vec<f64>),
    Gram(GramState),
}

/// Gradient `X^T r` kept current through cached Gram columns.
struct GramState {
    grad: Vec<f64>,
    gram: Vec<Option<Vec<f64>>>,
}

impl GramState {
    fn new(x: &SparseMatrix, y: &[f64], beta: &[f64]) -> Self {
        let r = residual_of(x, y, beta);
        GramState {
            grad: x.t_matvec(&r),
            gram: vec![None; x.n_cols()],
        }
    }

    fn update(&mut self, x: &SparseMatrix, k: usize, delta: f64) {
        let col = self.gram[k].get_or_insert_with(|| x.t_matvec(&x.dense_col(k)));
        for (gi, ci) in self.grad.iter_mut().zip(col.iter()) {
            *gi -= delta * ci;
        }
    }
}

/// One coordinate pass; returns the largest coordinate move.
fn sweep(
    x: &SparseMatrix,
    norms: &[f64],
    lambda: f64,
    beta: &mut [f64],
    state: &mut Coords,
    only: Option<&[usize]>,
) -> f64 {
    let mut change = 0.0f64;
    let p = beta.len();
    let mut visit = |j: usize, state: &mut Coords| {
        let nj = norms[j];
        if nj == 0.0 {
            return;
        }
        let g = match state {
            Coords::Naive(r) => x.col_dot(j, r),
            Coords::Gram(s) => s.grad[j],
        };
        let old = beta[j];
        let new = soft_threshold(old * nj + g, lambda) / nj;
        let delta = new - old;
        if delta == 0.0 {
            return;
        }
        beta[j] = new;
        change = change.max(delta.abs());
        match state {
            Coords::Naive(r) => x.col_axpy(j, -delta, r),
            Coords::Gram(s) => s.update(x, j, delta),
        }
    };
    match only {
        Some(idx) => idx.iter().for_each(|&j| visit(j, state)),
        None => (0..p).for_each(|j| visit(j, state)),
    }
    change
}

/// Fits a strictly decreasing grid, warm-starting each fit from the last.
pub fn lasso_path(x: &SparseMatrix, y: &[f64], grid: &[f64]) -> Result<Vec<LassoFit>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|l| l.is_nan() || *l <= 0.0) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid);
    }
    let mut fits: Vec<LassoFit> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let fit = lasso_fit(x, y, lambda, fits.last())?;
        fits.push(fit);
    }
    Ok(fits)
}

/// Tolerance used to decide that `|X_i^T r|` sits at `lambda`.
pub fn default_eps_act(lambda: f64) -> f64 {
    1e-6 * lambda.max(1.0)
}

/// Support `J` of the fit and the near-active constraint set `I`, both sorted.
pub fn active_sets(x: &SparseMatrix, fit: &LassoFit, lambda: f64, eps_act: f64) -> (Vec<usize>, Vec<usize>) {
    let j: Vec<usize> = (0..fit.beta.len()).filter(|&k| fit.beta[k] != 0.0).collect();
    let i: Vec<usize> = (0..x.n_cols())
        .filter(|&k| x.col_dot(k, &fit.residual).abs() >= lambda - eps_act)
        .collect();
    (i, j)
}
