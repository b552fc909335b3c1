//! Acceptance suite. Each criterion prints one PASS or FAIL line with the
//! measured quantity; the process fails if any criterion does.

mod common;

use std::time::Instant;

use common::*;
use dantzig_lp::basis_pursuit::{solve_bp, solve_bp_full, BpOptions};
use dantzig_lp::bench::{run_ablation, Variant};
use dantzig_lp::dantzig::{solve_ds, solve_ds_path, DsOptions, SolveStatus};
use dantzig_lp::fused_dantzig::{full_fusion_lambda, solve_fused_regression, solve_fused_signal, ProjectedData};
use dantzig_lp::fused_prox::fused_dp;
use dantzig_lp::instance::{
    ds_anchors, fused_regression_anchors, gen_design, generate, lambda_grid, InstanceKind, InstanceSpec,
};
use dantzig_lp::lasso::soft_threshold;
use dantzig_lp::SparseMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;

const EPS: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ds_spec(n: usize, p: usize, pi: f64, seed: u64) -> InstanceSpec {
    InstanceSpec { pi, ..InstanceSpec::new(InstanceKind::Ds, n, p, seed) }
}

/// Dual certificate recomputed from the returned vectors.
fn ds_certificate(x: &SparseMatrix, y: &[f64], lambda: f64, beta: &[f64], alpha: &[f64]) -> (f64, f64) {
    let r = sub(y, &x.matvec(beta));
    let cons = (inf_norm(&x.t_matvec(&r)) - lambda).max(0.0);
    let cols = (inf_norm(&x.t_matvec(alpha)) - 1.0).max(0.0);
    (cons, cols)
}

fn oracle_ds() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut all_optimal = true;
    for seed in 0..20 {
        let inst = generate(&ds_spec(20, 60, 0.0, seed)).unwrap();
        let lambda = inf_norm(&inst.x.t_matvec(&inst.e0));
        let sol = solve_ds(&inst.x, &inst.y, lambda, &DsOptions::default()).unwrap();
        let (want, _) = ds_oracle(&inst.x, &inst.y, lambda);
        all_optimal &= sol.status == SolveStatus::Optimal;
        worst = worst.max((sol.objective - want).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        all_optimal && worst <= 1e-7 && secs < 30.0,
        format!("max |objective gap| {worst:.2e} (tol 1e-7), {secs:.2}s (limit 30s)"),
    )
}

fn oracle_bp() -> Outcome {
    let (n, p, k) = (40, 100, 5);
    let mut worst_gap = 0.0f64;
    let mut worst_full = 0.0f64;
    let mut residual_ok = true;
    let mut recovered = 0;
    let mut recoverable = 0;
    let mut all_optimal = true;
    for seed in 0..20 {
        let x = gen_design(n, p, 0.0, 0.0, seed).unwrap();
        let mut r = rng(1000 + seed);
        let mut beta0 = vec![0.0; p];
        for j in sample(&mut r, p, k) {
            beta0[j] = normals(&mut r, 1)[0];
        }
        let y = x.matvec(&beta0);
        let sol = solve_bp(&x, &y, &BpOptions::default()).unwrap();
        let full = solve_bp_full(&x, &y, &BpOptions::default()).unwrap();
        let (want, oracle_beta) = bp_oracle(&x, &y);
        all_optimal &= sol.status == SolveStatus::Optimal && full.status == SolveStatus::Optimal;
        worst_gap = worst_gap.max((sol.objective - want).abs());
        worst_full = worst_full.max((sol.objective - full.objective).abs());
        let res = inf_norm(&sub(&y, &x.matvec(&sol.beta)));
        residual_ok &= res <= 1e-8 * (1.0 + inf_norm(&y));
        if inf_norm(&sub(&oracle_beta, &beta0)) <= 1e-6 {
            recoverable += 1;
            if inf_norm(&sub(&sol.beta, &beta0)) <= 1e-6 {
                recovered += 1;
            }
        }
    }
    outcome(
        all_optimal && worst_gap <= 1e-7 && worst_full <= 1e-7 && residual_ok && recovered == recoverable,
        format!(
            "gap to oracle {worst_gap:.2e}, to full LP {worst_full:.2e} (tol 1e-7); residual ok {residual_ok}; \
             exact recovery {recovered}/{recoverable}"
        ),
    )
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn oracle_fused() -> Outcome {
    let mut worst_signal = 0.0f64;
    let mut worst_regression = 0.0f64;
    let mut all_optimal = true;
    for seed in 0..10 {
        let n = 30 + 2 * seed as usize;
        let spec = InstanceSpec { knots: Some(3), ..InstanceSpec::new(InstanceKind::FusedSignal, n, n, seed) };
        let inst = generate(&spec).unwrap();
        let lambda = 0.3 * full_fusion_lambda(&inst.y);
        let sol = solve_fused_signal(&inst.y, lambda, &DsOptions::default()).unwrap();
        let (want, _) = fused_oracle(&inst.x, &inst.y, lambda);
        all_optimal &= sol.status == SolveStatus::Optimal;
        worst_signal = worst_signal.max(rel_gap(sol.objective, want));

        let spec = InstanceSpec { knots: Some(3), ..InstanceSpec::new(InstanceKind::FusedRegression, 25, 15, seed) };
        let inst = generate(&spec).unwrap();
        let data = ProjectedData::new(&inst.x, &inst.y).unwrap();
        let lambda = 0.2 * fused_regression_anchors(&data, None).lambda_max;
        let sol = solve_fused_regression(&inst.x, &inst.y, lambda, &DsOptions::default()).unwrap();
        let (want, _) = fused_oracle(&inst.x, &inst.y, lambda);
        all_optimal &= sol.status == SolveStatus::Optimal;
        worst_regression = worst_regression.max(rel_gap(sol.objective, want));
    }
    outcome(
        all_optimal && worst_signal <= 1e-6 && worst_regression <= 1e-6,
        format!("relative gap signal {worst_signal:.2e}, regression {worst_regression:.2e} (tol 1e-6)"),
    )
}

fn closed_forms() -> Outcome {
    let mut worst_st = 0.0f64;
    for seed in 0..10 {
        let n = 10 + 3 * seed as usize;
        let x = orthonormal(n, n, seed);
        let y = normals(&mut rng(500 + seed), n);
        let z = x.t_matvec(&y);
        let lambda = 0.4 * inf_norm(&z);
        let sol = solve_ds(&x, &y, lambda, &DsOptions::default()).unwrap();
        for (b, zj) in sol.beta.iter().zip(&z) {
            worst_st = worst_st.max((b - soft_threshold(*zj, lambda)).abs());
        }
    }
    let y = normals(&mut rng(77), 40);
    let identity = fused_dp(&y, 0.0).beta == y;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let bound = 0.5 * y.iter().map(|v| (v - mean).abs()).sum::<f64>();
    let dp_mean = inf_norm(&fused_dp(&y, bound).beta.iter().map(|b| b - mean).collect::<Vec<_>>());
    let lp = solve_fused_signal(&y, 1.0001 * full_fusion_lambda(&y), &DsOptions::default()).unwrap();
    let lp_mean = inf_norm(&lp.beta.iter().map(|b| b - mean).collect::<Vec<_>>());
    outcome(
        worst_st <= 1e-8 && identity && dp_mean <= 1e-10 && lp_mean <= 1e-9,
        format!(
            "soft-threshold error {worst_st:.2e} (tol 1e-8); fused_dp(y, 0) = y: {identity}; \
             full fusion error dp {dp_mean:.2e}, lp {lp_mean:.2e}"
        ),
    )
}

fn certificates() -> Outcome {
    let mut worst_cons = 0.0f64;
    let mut worst_cols = 0.0f64;
    let mut solves = 0;
    let grid_of = |x: &SparseMatrix, y: &[f64], e0: &[f64]| {
        let a = ds_anchors(x, y, Some(e0));
        lambda_grid(a.default_min(), a.lambda_max, 6).unwrap()
    };
    for seed in 0..8 {
        let inst = generate(&ds_spec(60, 300, 0.3 * (seed % 3) as f64, seed)).unwrap();
        for lambda in grid_of(&inst.x, &inst.y, &inst.e0) {
            let sol = solve_ds(&inst.x, &inst.y, lambda, &DsOptions::default()).unwrap();
            if sol.status == SolveStatus::Optimal {
                let (c, k) = ds_certificate(&inst.x, &inst.y, lambda, &sol.beta, &sol.alpha);
                worst_cons = worst_cons.max(c).max(sol.max_constraint_violation);
                worst_cols = worst_cols.max(k).max(sol.max_column_violation);
                solves += 1;
            }
        }
        let bp = generate(&InstanceSpec::new(InstanceKind::Bp, 40, 150, seed)).unwrap();
        let sol = solve_bp(&bp.x, &bp.y, &BpOptions::default()).unwrap();
        if sol.status == SolveStatus::Optimal {
            worst_cols = worst_cols.max((inf_norm(&bp.x.t_matvec(&sol.v)) - 1.0).max(0.0));
            solves += 1;
        }
        let spec = InstanceSpec { knots: Some(4), ..InstanceSpec::new(InstanceKind::FusedSignal, 200, 200, seed) };
        let fs = generate(&spec).unwrap();
        let lambda = 0.1 * full_fusion_lambda(&fs.y);
        let sol = solve_fused_signal(&fs.y, lambda, &DsOptions::default()).unwrap();
        if sol.status == SolveStatus::Optimal {
            // Suffix sums of the residual are the constraint activities.
            let r = sub(&fs.y, &sol.beta);
            let mut g = 0.0;
            let mut worst = 0.0f64;
            for (k, rk) in r.iter().enumerate().rev() {
                g += rk;
                worst = worst.max(if k == 0 { g.abs() } else { g.abs() - lambda });
            }
            worst_cons = worst_cons.max(worst).max(sol.max_constraint_violation);
            worst_cols = worst_cols.max(sol.max_column_violation);
            solves += 1;
        }
    }
    outcome(
        solves > 0 && worst_cons <= EPS && worst_cols <= EPS,
        format!("{solves} optimal solves; max constraint violation {worst_cons:.2e}, column {worst_cols:.2e} (tol 1e-4)"),
    )
}

fn ablation() -> Outcome {
    let rows: Vec<(f64, bool, usize, usize)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let inst = generate(&ds_spec(100, 1000, 0.0, seed)).unwrap();
            let lambda = inf_norm(&inst.x.t_matvec(&inst.e0));
            let runs: Vec<_> = Variant::ALL
                .iter()
                .map(|&v| run_ablation(&inst, lambda, v, &DsOptions::default()).unwrap())
                .collect();
            let base = runs[0].objective;
            let spread = runs.iter().map(|r| rel_gap(r.objective, base)).fold(0.0, f64::max);
            let optimal = runs.iter().all(|r| r.status == SolveStatus::Optimal);
            (spread, optimal, runs[1].simplex_iterations, runs[0].simplex_iterations)
        })
        .collect();
    let spread = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let optimal = rows.iter().all(|r| r.1);
    let fewer = rows.iter().filter(|r| r.2 <= r.3).count();
    outcome(
        optimal && spread <= 1e-6 && fewer >= 15,
        format!("objective spread {spread:.2e} (tol 1e-6); lasso-seeded pivots <= full LP on {fewer}/20 seeds (need 15)"),
    )
}

fn path() -> Outcome {
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut optimal = true;
    for seed in 0..3 {
        let inst = generate(&ds_spec(60, 300, 0.0, seed)).unwrap();
        let a = ds_anchors(&inst.x, &inst.y, Some(&inst.e0));
        let grid = lambda_grid(a.default_min(), a.lambda_max, 50).unwrap();
        let path = solve_ds_path(&inst.x, &inst.y, &grid, &DsOptions::default()).unwrap();
        let cold: Vec<_> = grid
            .par_iter()
            .map(|&l| solve_ds(&inst.x, &inst.y, l, &DsOptions::default()).unwrap())
            .collect();
        for (p, c) in path.iter().zip(&cold) {
            optimal &= p.status == SolveStatus::Optimal && c.status == SolveStatus::Optimal;
            worst = worst.max((p.objective - c.objective).abs());
        }
        for w in path.windows(2) {
            monotone &= l1(&w[1].beta) >= l1(&w[0].beta) - 1e-7;
        }
    }
    outcome(
        optimal && worst <= 1e-7 && monotone,
        format!("path vs cold objective gap {worst:.2e} (tol 1e-7); ||beta||_1 nondecreasing: {monotone}"),
    )
}

fn prox() -> Outcome {
    let worst = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(9000 + seed);
            let n = 5 + (seed as usize * 37) % 196;
            let y: Vec<f64> = normals(&mut r, n).iter().enumerate().map(|(i, e)| (i / 9) as f64 * 0.7 + e).collect();
            let lambda = 0.1 + 2.0 * (seed % 7) as f64 / 7.0;
            let fit = fused_dp(&y, lambda);
            let reference = tv_dual_oracle(&y, lambda, 400_000);
            let (got, want) = (tv_objective(&y, &fit.beta, lambda), tv_objective(&y, &reference, lambda));
            (got - want).abs() / want.max(1.0)
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-6, format!("max relative objective gap {worst:.2e} over 50 instances (tol 1e-6)"))
}

fn scale() -> Outcome {
    let (n, p) = (200, 20_000);
    let mut faster = 0;
    let mut optimal = true;
    let mut slowest = 0.0f64;
    let start = Instant::now();
    // Sequential so each timing has the machine to itself.
    for seed in 0..20 {
        let mut secs = [0.0; 2];
        for (k, pi) in [0.8, 0.0].into_iter().enumerate() {
            let inst = generate(&ds_spec(n, p, pi, seed)).unwrap();
            let lambda = 2.0 * inf_norm(&inst.x.t_matvec(&inst.e0));
            let t = Instant::now();
            let sol = solve_ds(&inst.x, &inst.y, lambda, &DsOptions::default()).unwrap();
            secs[k] = t.elapsed().as_secs_f64();
            optimal &= sol.status == SolveStatus::Optimal;
        }
        slowest = slowest.max(secs[0]);
        if secs[0] < secs[1] {
            faster += 1;
        }
    }
    let total = start.elapsed().as_secs_f64();
    let peak = peak_rss_bytes();
    let within_memory = peak.is_none_or(|b| b < 2 << 30);
    outcome(
        optimal && within_memory && faster >= 15,
        format!(
            "sparse faster on {faster}/20 seeds (need 15); slowest sparse solve {slowest:.2}s; \
             total {total:.1}s; peak RSS {} (limit 2 GiB)",
            peak.map_or("unavailable".to_string(), |b| format!("{:.0} MiB", b as f64 / (1 << 20) as f64))
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 oracle equivalence, Dantzig selector", oracle_ds),
        ("2 oracle equivalence, basis pursuit", oracle_bp),
        ("3 oracle equivalence, fused", oracle_fused),
        ("4 closed forms", closed_forms),
        ("5 certificate validity", certificates),
        ("6 ablation consensus", ablation),
        ("7 path consistency", path),
        ("8 prox exactness", prox),
        ("9 scale smoke test", scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {} [{:.1}s]", o.detail, t.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
