//! Reference solvers for the integration tests. The LP oracles are written
//! in their textbook dense form and handed to an unrelated simplex
//! implementation, so agreement checks the whole pipeline rather than one
//! shared code path.

#![allow(dead_code)]

use dantzig_lp::SparseMatrix;
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|a| a.abs()).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Dense `n x p` matrix with orthonormal columns (modified Gram-Schmidt on
/// Gaussian draws).
pub fn orthonormal(n: usize, p: usize, seed: u64) -> SparseMatrix {
    let mut r = rng(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    while q.len() < p {
        let mut v = normals(&mut r, n);
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(v);
        }
    }
    SparseMatrix::from_dense_cols(n, &q).unwrap()
}

fn gram(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = m.len();
    let mut g = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let v: f64 = m[a].iter().zip(&m[b]).map(|(s, t)| s * t).sum();
            g[a][b] = v;
            g[b][a] = v;
        }
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(s, t)| s * t).sum()
}

fn dense_cols(x: &SparseMatrix) -> Vec<Vec<f64>> {
    (0..x.n_cols()).map(|j| x.dense_col(j)).collect()
}

/// `min ||b||_1` s.t. `|M_a^T (y - M b)| <= lambda` for `a` with a finite
/// bound and `M_a^T (y - M b) = 0` where `free[a]` leaves `b_a` unpenalized.
/// Returns the objective and `b`.
fn l1_dantzig(cols: &[Vec<f64>], y: &[f64], lambda: f64, free: &[bool]) -> (f64, Vec<f64>) {
    let p = cols.len();
    let g = gram(cols);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..p)
        .map(|a| {
            if free[a] {
                (lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)), None)
            } else {
                (lp.add_var(1.0, (0.0, f64::INFINITY)), Some(lp.add_var(1.0, (0.0, f64::INFINITY))))
            }
        })
        .collect();
    for a in 0..p {
        let mty = dot(&cols[a], y);
        let mut expr = Vec::new();
        for (b, &(plus, minus)) in vars.iter().enumerate() {
            if g[a][b] != 0.0 {
                expr.push((plus, g[a][b]));
                if let Some(m) = minus {
                    expr.push((m, -g[a][b]));
                }
            }
        }
        if free[a] {
            lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, mty);
        } else {
            lp.add_constraint(expr.as_slice(), ComparisonOp::Le, mty + lambda);
            lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, mty - lambda);
        }
    }
    let sol = lp.solve().expect("oracle LP solves").into_solution().expect("oracle LP finishes");
    let b = vars
        .iter()
        .map(|&(plus, minus)| sol.var_value(plus) - minus.map_or(0.0, |m| sol.var_value(m)))
        .collect();
    (sol.objective(), b)
}

/// Dantzig selector as one dense LP.
pub fn ds_oracle(x: &SparseMatrix, y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let cols = dense_cols(x);
    l1_dantzig(&cols, y, lambda, &vec![false; cols.len()])
}

/// Basis pursuit as one dense LP.
pub fn bp_oracle(x: &SparseMatrix, y: &[f64]) -> (f64, Vec<f64>) {
    let p = x.n_cols();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..p)
        .map(|_| (lp.add_var(1.0, (0.0, f64::INFINITY)), lp.add_var(1.0, (0.0, f64::INFINITY))))
        .collect();
    let rows = x.to_dense_rows();
    for (i, row) in rows.iter().enumerate() {
        let mut expr = Vec::new();
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                expr.push((vars[j].0, v));
                expr.push((vars[j].1, -v));
            }
        }
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, y[i]);
    }
    let sol = lp.solve().expect("oracle LP solves").into_solution().expect("oracle LP finishes");
    let b = vars.iter().map(|&(a, m)| sol.var_value(a) - sol.var_value(m)).collect();
    (sol.objective(), b)
}

/// Fused Dantzig selector over `beta` in R^p: write `beta = H alpha` with
/// `H` the lower-triangular ones matrix, so column `a` of `X H` is the sum of
/// the columns of `X` from `a` on, and solve the Dantzig selector in `alpha`
/// with `alpha_0` unpenalized.
pub fn fused_oracle(x: &SparseMatrix, y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let p = x.n_cols();
    let n = x.n_rows();
    let xc = dense_cols(x);
    let mut m = vec![vec![0.0; n]; p];
    let mut acc = vec![0.0; n];
    for a in (0..p).rev() {
        acc.iter_mut().zip(&xc[a]).for_each(|(s, v)| *s += v);
        m[a] = acc.clone();
    }
    let mut free = vec![false; p];
    free[0] = true;
    let (obj, alpha) = l1_dantzig(&m, y, lambda, &free);
    let mut beta = Vec::with_capacity(p);
    let mut s = 0.0;
    for a in alpha {
        s += a;
        beta.push(s);
    }
    (obj, beta)
}

/// `1/2 ||y - b||^2 + lambda sum |b_{i+1} - b_i|` by accelerated projected
/// gradient on the box-constrained dual, with gradient restarts, run long.
/// Returns the primal point.
pub fn tv_dual_oracle(y: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let primal = |u: &[f64], b: &mut [f64]| {
        b.copy_from_slice(y);
        for (i, &ui) in u.iter().enumerate() {
            b[i + 1] -= ui;
            b[i] += ui;
        }
    };
    let m = y.len().saturating_sub(1);
    let mut u = vec![0.0; m];
    let mut w = u.clone();
    let mut prev = u.clone();
    let mut b = y.to_vec();
    let mut t = 1.0f64;
    for _ in 0..iters {
        primal(&w, &mut b);
        prev.copy_from_slice(&u);
        for i in 0..m {
            u[i] = (w[i] + 0.25 * (b[i + 1] - b[i])).clamp(-lambda, lambda);
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mut restart = 0.0;
        for i in 0..m {
            restart += (w[i] - u[i]) * (u[i] - prev[i]);
        }
        if restart > 0.0 {
            t = 1.0;
            w.copy_from_slice(&u);
        } else {
            let beta = (t - 1.0) / t_next;
            for i in 0..m {
                w[i] = u[i] + beta * (u[i] - prev[i]);
            }
            t = t_next;
        }
    }
    primal(&u, &mut b);
    b
}

pub fn tv_objective(y: &[f64], b: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(b).map(|(s, t)| (s - t).powi(2)).sum::<f64>() / 2.0;
    fit + lambda * b.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
}

/// Peak resident set size of this process in bytes, where the platform
/// reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
