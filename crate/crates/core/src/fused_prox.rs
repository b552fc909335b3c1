//! One-dimensional fused lasso: an exact linear-time dynamic program for
//!
//! ```text
//!   minimize  1/2 ||y - b||^2 + lambda sum_i |b_{i+1} - b_i|
//! ```
//!
//! and accelerated proximal gradient (FISTA) for the regression form
//! `1/2 ||y - X b||^2 + lambda sum_i |b_{i+1} - b_i|`, whose prox step is the
//! dynamic program.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Differences below this magnitude are not reported as knots.
pub const KNOT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FusedFit {
    pub beta: Vec<f64>,
    /// `alpha[0] = beta[0]`, `alpha[i] = beta[i] - beta[i-1]`.
    pub alpha: Vec<f64>,
    pub lambda: f64,
    /// Indices `i >= 1` with `|alpha[i]| > KNOT_THRESHOLD`.
    pub knots: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
}

impl FusedFit {
    fn new(beta: Vec<f64>, lambda: f64, objective: f64, iterations: usize) -> Self {
        let alpha = differences(&beta);
        let knots = knots_of(&alpha, KNOT_THRESHOLD);
        FusedFit { beta, alpha, lambda, knots, objective, iterations }
    }
}

/// `D b`: the first entry followed by successive differences.
pub fn differences(beta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(beta.len());
    for (i, &b) in beta.iter().enumerate() {
        out.push(if i == 0 { b } else { b - beta[i - 1] });
    }
    out
}

/// `H a` with `H = D^{-1}` the lower-triangular matrix of ones: prefix sums.
pub fn cumulative(alpha: &[f64]) -> Vec<f64> {
    alpha
        .iter()
        .scan(0.0, |acc, &a| {
            *acc += a;
            Some(*acc)
        })
        .collect()
}

pub fn knots_of(alpha: &[f64], threshold: f64) -> Vec<usize> {
    (1..alpha.len()).filter(|&i| alpha[i].abs() > threshold).collect()
}

pub fn total_variation(beta: &[f64]) -> f64 {
    beta.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn fused_objective(y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let rss: f64 = y.iter().zip(beta).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * rss + lambda * total_variation(beta)
}

pub fn fused_regression_objective(x: &SparseMatrix, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let fit = x.matvec(beta);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * rss + lambda * total_variation(beta)
}

/// Exact fused-lasso signal approximator.
///
/// Forward pass: the derivative of each clipped message is a continuous
/// increasing piecewise-linear function from `-lambda` to `lambda`, stored
/// as knots in a double-ended array with the slope/intercept jump at each
/// knot. Each step trims knots from both ends, so the pass is O(n).
pub fn fused_dp(y: &[f64], lambda: f64) -> FusedFit {
    let beta = fused_dp_beta(y, lambda);
    let objective = fused_objective(y, &beta, lambda);
    FusedFit::new(beta, lambda, objective, 0)
}

fn fused_dp_beta(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    if n <= 1 || lambda <= 0.0 {
        return y.to_vec();
    }
    let cap = 2 * n + 2;
    let mut x = vec![0.0; cap];
    let mut da = vec![0.0; cap];
    let mut db = vec![0.0; cap];
    let mut tm = vec![0.0; n - 1];
    let mut tp = vec![0.0; n - 1];

    // Message of the first term: derivative t - y0 clipped to [-lambda, lambda].
    let (mut l, mut r) = (n, n + 1);
    tm[0] = y[0] - lambda;
    tp[0] = y[0] + lambda;
    x[l] = tm[0];
    da[l] = 1.0;
    db[l] = lambda - y[0];
    x[r] = tp[0];
    da[r] = -1.0;
    db[r] = lambda + y[0];

    for k in 1..n {
        // Derivative of the accumulated cost is (t - y_k) + message'(t).
        let (mut al, mut bl) = (1.0, -y[k] - lambda);
        let (mut ar, mut br) = (1.0, -y[k] + lambda);
        let mut lo = l;
        let mut hi = r;
        if k == n - 1 {
            while lo <= hi && al * x[lo] + bl <= 0.0 {
                al += da[lo];
                bl += db[lo];
                lo += 1;
            }
            let mut beta = vec![0.0; n];
            beta[n - 1] = -bl / al;
            for i in (0..n - 1).rev() {
                beta[i] = beta[i + 1].clamp(tm[i], tp[i]);
            }
            return beta;
        }
        while lo <= hi && al * x[lo] + bl <= -lambda {
            al += da[lo];
            bl += db[lo];
            lo += 1;
        }
        while hi >= lo && ar * x[hi] + br >= lambda {
            ar -= da[hi];
            br -= db[hi];
            hi -= 1;
        }
        tm[k] = (-lambda - bl) / al;
        tp[k] = (lambda - br) / ar;
        l = lo - 1;
        r = hi + 1;
        x[l] = tm[k];
        da[l] = al;
        db[l] = bl + lambda;
        x[r] = tp[k];
        da[r] = -ar;
        db[r] = lambda - br;
    }
    unreachable!("loop returns at the last index")
}

/// Prox step `argmin_b L/2 ||b - (u - grad/L)||^2 + lambda TV(b)`.
pub fn prox_theta(u: &[f64], grad: &[f64], l: f64, lambda: f64) -> Vec<f64> {
    let point: Vec<f64> = u.iter().zip(grad).map(|(a, g)| a - g / l).collect();
    fused_dp_beta(&point, lambda / l)
}

/// Largest eigenvalue of `X^T X` by power iteration, inflated by 1%.
pub fn power_method(x: &SparseMatrix) -> Result<f64> {
    let p = x.n_cols();
    if p == 0 || x.n_rows() == 0 {
        return Ok(0.0);
    }
    if !x.is_finite() {
        return Err(Error::PowerMethodDivergence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nw = norm(&w);
    w.iter_mut().for_each(|a| *a /= nw);
    let mut est = 0.0;
    for _ in 0..200 {
        let v = x.t_matvec(&x.matvec(&w));
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let nv = norm(&v);
        if !nv.is_finite() || !rayleigh.is_finite() {
            return Err(Error::PowerMethodDivergence);
        }
        if nv == 0.0 {
            return Ok(0.0);
        }
        w = v.iter().map(|a| a / nv).collect();
        let converged = (rayleigh - est).abs() <= 1e-8 * rayleigh.abs();
        est = rayleigh;
        if converged {
            break;
        }
    }
    Ok(est * 1.01)
}

#[derive(Debug, Clone)]
pub struct FistaOptions {
    pub max_iter: usize,
    /// Stop when the objective changes by less than this (relative) over
    /// `window` iterations.
    pub rel_tol: f64,
    pub window: usize,
}

impl Default for FistaOptions {
    fn default() -> Self {
        FistaOptions { max_iter: 10_000, rel_tol: 1e-8, window: 10 }
    }
}

pub fn fista_fused(x: &SparseMatrix, y: &[f64], lambda: f64, max_iter: usize) -> Result<FusedFit> {
    fista_fused_with(x, y, lambda, &FistaOptions { max_iter, ..Default::default() })
}

/// Accelerated proximal gradient; returns the best iterate seen.
pub fn fista_fused_with(x: &SparseMatrix, y: &[f64], lambda: f64, opts: &FistaOptions) -> Result<FusedFit> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {n} rows", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    let l = power_method(x)?;
    let objective = |b: &[f64]| fused_regression_objective(x, y, b, lambda);
    if l == 0.0 {
        let beta = vec![0.0; p];
        let obj = objective(&beta);
        return Ok(FusedFit::new(beta, lambda, obj, 0));
    }

    let mut prev = vec![0.0; p];
    let mut u = vec![0.0; p];
    let mut q = 1.0f64;
    let mut best = prev.clone();
    let mut best_obj = objective(&best);
    let mut history: Vec<f64> = vec![best_obj];
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        iterations = k;
        let resid: Vec<f64> = x.matvec(&u).iter().zip(y).map(|(a, b)| a - b).collect();
        let grad = x.t_matvec(&resid);
        let next = prox_theta(&u, &grad, l, lambda);
        let q_next = 0.5 * (1.0 + (1.0 + 4.0 * q * q).sqrt());
        let momentum = (q - 1.0) / q_next;
        u = next.iter().zip(&prev).map(|(a, b)| a + momentum * (a - b)).collect();
        q = q_next;
        let obj = objective(&next);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&next);
        }
        prev = next;
        history.push(best_obj);
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            if (old - best_obj).abs() <= opts.rel_tol * best_obj.abs().max(1e-300) {
                break;
            }
        }
    }
    Ok(FusedFit::new(best, lambda, best_obj, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand_distr::StandardNormal;

    /// Projected gradient on the dual `min_{|u| <= lambda} 1/2 ||y - D0^T u||^2`;
    /// the primal point is `y - D0^T u`.
    fn dual_oracle(y: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
        let n = y.len();
        let mut u = vec![0.0; n.saturating_sub(1)];
        let primal = |u: &[f64]| {
            let mut b = y.to_vec();
            for (i, &ui) in u.iter().enumerate() {
                // D0 row i is e_{i+1} - e_i.
                b[i + 1] -= ui;
                b[i] += ui;
            }
            b
        };
        for _ in 0..iters {
            let b = primal(&u);
            for i in 0..u.len() {
                // Gradient of the dual objective in u_i is -(D0 b)_i.
                u[i] = (u[i] + 0.25 * (b[i + 1] - b[i])).clamp(-lambda, lambda);
            }
        }
        primal(&u)
    }

    fn subgradient_gap(y: &[f64], beta: &[f64], lambda: f64) -> f64 {
        let mut worst = 0.0f64;
        let mut s = 0.0;
        let n = y.len();
        for i in 0..n {
            s += beta[i] - y[i];
            if i + 1 == n {
                worst = worst.max(s.abs());
            } else {
                worst = worst.max(s.abs() - lambda);
                let d = beta[i + 1] - beta[i];
                if d.abs() > 1e-9 {
                    // The partial sum sits at lambda * sign(d).
                    worst = worst.max((s - lambda * d.signum()).abs());
                }
            }
        }
        worst
    }

    fn random_y(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| (i / 7) as f64 * 0.5 + rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    #[test]
    fn zero_lambda_is_identity() {
        let y = random_y(20, 1);
        assert_eq!(fused_dp(&y, 0.0).beta, y);
    }

    #[test]
    fn large_lambda_fuses_everything() {
        let y = vec![1.0, -2.0, 0.5, 4.0, 3.0];
        let mean = y.iter().sum::<f64>() / 5.0;
        let bound = 0.5 * y.iter().map(|v| (v - mean).abs()).sum::<f64>();
        let fit = fused_dp(&y, bound);
        for b in &fit.beta {
            assert!((b - mean).abs() < 1e-12);
        }
        assert!(fit.knots.is_empty());
    }

    #[test]
    fn two_level_step() {
        let y = [0.0, 0.0, 1.0, 1.0];
        let fit = fused_dp(&y, 0.25);
        assert_eq!(fit.beta[0], fit.beta[1]);
        assert_eq!(fit.beta[2], fit.beta[3]);
        let oracle = dual_oracle(&y, 0.25, 200_000);
        for (a, b) in fit.beta.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6);
        }
        // Each block moves lambda / 2 toward the other.
        assert!((fit.beta[0] - 0.125).abs() < 1e-12);
        assert!((fit.beta[3] - 0.875).abs() < 1e-12);
    }

    #[test]
    fn alpha_reconstructs_beta() {
        let y = random_y(40, 3);
        let fit = fused_dp(&y, 0.7);
        let back = cumulative(&fit.alpha);
        for (a, b) in back.iter().zip(&fit.beta) {
            assert!((a - b).abs() < 1e-12);
        }
        for &k in &fit.knots {
            assert!(fit.alpha[k].abs() > KNOT_THRESHOLD);
        }
    }

    #[test]
    fn inverse_of_difference_operator_is_lower_ones() {
        let n = 10;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let h_col = cumulative(&e);
            for (i, &v) in h_col.iter().enumerate() {
                assert_eq!(v, if i >= j { 1.0 } else { 0.0 });
            }
            let back = differences(&h_col);
            assert_eq!(back, e);
        }
    }

    #[test]
    fn prox_cases() {
        let u = random_y(12, 5);
        let zero = vec![0.0; 12];
        assert_eq!(prox_theta(&u, &zero, 2.0, 0.0), u);
        let a = prox_theta(&u, &zero, 2.0, 0.6);
        assert_eq!(a, fused_dp(&u, 0.3).beta);
    }

    #[test]
    fn fista_identity_matches_dp() {
        let y = random_y(50, 8);
        let lambda = 0.8;
        let x = SparseMatrix::identity(50);
        let fit = fista_fused(&x, &y, lambda, 2000).unwrap();
        let exact = fused_dp(&y, lambda);
        assert!(fit.iterations <= 2000);
        assert!((fit.objective - exact.objective).abs() < 1e-6, "{} vs {}", fit.objective, exact.objective);
    }

    #[test]
    fn fista_unregularized_square_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 6;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 3.0 } else { rng.random_range(-0.5..0.5) }).collect())
            .collect();
        let x = SparseMatrix::from_dense_cols(n, &cols).unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fit = fista_fused(&x, &y, 0.0, 10_000).unwrap();
        assert!(fit.objective < 1e-6);
    }

    #[test]
    fn fista_matches_unaccelerated_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, p) = (30, 20);
        let cols: Vec<Vec<f64>> =
            (0..p).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let x = SparseMatrix::from_dense_cols(n, &cols).unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let lambda = 2.0;
        let fit = fista_fused(&x, &y, lambda, 10_000).unwrap();
        let l = power_method(&x).unwrap();
        let mut b = vec![0.0; p];
        for _ in 0..200_000 {
            let resid: Vec<f64> = x.matvec(&b).iter().zip(&y).map(|(a, c)| a - c).collect();
            b = prox_theta(&b, &x.t_matvec(&resid), l, lambda);
        }
        let oracle = fused_regression_objective(&x, &y, &b, lambda);
        assert!((fit.objective - oracle).abs() < 1e-6, "{} vs {oracle}", fit.objective);
    }

    #[test]
    fn power_method_rejects_non_finite() {
        let x = SparseMatrix::from_dense_rows(&[vec![1.0, f64::NAN]]);
        if let Ok(x) = x {
            assert!(matches!(power_method(&x), Err(Error::PowerMethodDivergence)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dp_is_optimal(seed in 0u64..10_000, n in 1usize..60, lambda in 0.0f64..3.0) {
            let y = random_y(n, seed);
            let fit = fused_dp(&y, lambda);
            prop_assert!(subgradient_gap(&y, &fit.beta, lambda) < 1e-9);
            let oracle = dual_oracle(&y, lambda, 3000);
            prop_assert!(fit.objective <= fused_objective(&y, &oracle, lambda) + 1e-12);
        }

        #[test]
        fn total_variation_shrinks_with_lambda(seed in 0u64..10_000) {
            let y = random_y(40, seed);
            let mut last = f64::INFINITY;
            for k in 0..12 {
                let tv = total_variation(&fused_dp(&y, 0.05 * k as f64).beta);
                prop_assert!(tv <= last + 1e-9);
                last = tv;
            }
        }

        #[test]
        fn prox_satisfies_optimality_at_shifted_point(seed in 0u64..10_000) {
            let u = random_y(25, seed);
            let g = random_y(25, seed + 1);
            let (l, lambda) = (1.7, 0.9);
            let b = prox_theta(&u, &g, l, lambda);
            let shifted: Vec<f64> = u.iter().zip(&g).map(|(a, c)| a - c / l).collect();
            prop_assert!(subgradient_gap(&shifted, &b, lambda / l) < 1e-9);
        }

        #[test]
        fn power_method_bounds_operator(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> =
                (0..12).map(|_| (0..15).map(|_| rng.sample(StandardNormal)).collect()).collect();
            let x = SparseMatrix::from_dense_cols(15, &cols).unwrap();
            let l = power_method(&x).unwrap();
            for _ in 0..100 {
                let w: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
                let v = x.t_matvec(&x.matvec(&w));
                let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
                prop_assert!(nv <= l * nw * (1.0 + 1e-6));
            }
        }
    }
}
