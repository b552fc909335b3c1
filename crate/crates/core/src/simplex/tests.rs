use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

const INF: f64 = f64::INFINITY;

fn dense(rows: &[Vec<f64>]) -> SparseMatrix {
    SparseMatrix::from_dense_rows(rows).unwrap()
}

fn opts() -> SimplexOptions {
    SimplexOptions::default()
}

/// Brute-force optimum of `min c.x  s.t. A x <= b, 0 <= x <= 1` by
/// enumerating every basic solution.
fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let n = c.len();
    // Hyperplanes: (normal, rhs)
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, 1.0));
    }
    let np = planes.len();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        // Solve the n x n system of the selected planes.
        let mut mat: Vec<Vec<f64>> = idx
            .iter()
            .map(|&p| {
                let mut r = planes[p].0.clone();
                r.push(planes[p].1);
                r
            })
            .collect();
        let mut ok = true;
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs())).unwrap();
            if mat[piv][col].abs() < 1e-10 {
                ok = false;
                break;
            }
            mat.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = mat[r][col] / mat[col][col];
                    for k in col..=n {
                        mat[r][k] -= f * mat[col][k];
                    }
                }
            }
        }
        if ok {
            let x: Vec<f64> = (0..n).map(|i| mat[i][n] / mat[i][i]).collect();
            let feasible = x.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v))
                && a.iter().zip(b).all(|(row, &bi)| {
                    row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9
                });
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = best.min(obj);
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < np - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn random_box_lp(seed: u64, m: usize, n: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let b = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    (c, a, b)
}

fn box_model(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpModel {
    LpModel::new(
        c.to_vec(),
        dense(a),
        b.iter().map(|&bi| (-INF, bi)).collect(),
        vec![(0.0, 1.0); c.len()],
    )
    .unwrap()
}

fn assert_strong_duality(sol: &LpSolution) {
    assert_eq!(sol.status, LpStatus::Optimal);
    let gap = (sol.objective - sol.dual_objective).abs();
    assert!(
        gap <= 1e-7 * (1.0 + sol.objective.abs()),
        "duality gap {gap} (primal {}, dual {})",
        sol.objective,
        sol.dual_objective
    );
}

#[test]
fn build_model_accepts_well_formed_input() {
    let m = LpModel::new(vec![1.0, 1.0], dense(&[vec![1.0, 1.0]]), vec![(1.0, INF)], vec![(0.0, INF); 2])
        .unwrap();
    assert_eq!((m.n_rows(), m.n_cols()), (1, 2));
}

#[test]
fn build_model_rejects_inverted_row_bound() {
    let err = LpModel::new(vec![1.0, 1.0], dense(&[vec![1.0, 1.0]]), vec![(2.0, 1.0)], vec![(0.0, INF); 2])
        .unwrap_err();
    assert!(matches!(err, Error::InvalidBound { what: "row", .. }));
}

#[test]
fn build_model_rejects_dimension_mismatch() {
    let err = LpModel::new(
        vec![1.0, 1.0],
        dense(&[vec![1.0, 1.0, 1.0]]),
        vec![(1.0, INF)],
        vec![(0.0, INF); 3],
    )
    .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)));
}

#[test]
fn symmetric_vertex_has_unit_dual() {
    let m = LpModel::new(vec![1.0, 1.0], dense(&[vec![1.0, 1.0]]), vec![(1.0, INF)], vec![(0.0, INF); 2])
        .unwrap();
    let (sol, _) = solve(&m, None, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-12);
    assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    assert_strong_duality(&sol);
}

#[test]
fn unbounded_ray_is_detected() {
    let m = LpModel::new(vec![-1.0], SparseMatrix::zeros(0, 1), vec![], vec![(0.0, INF)]).unwrap();
    let (sol, _) = solve(&m, None, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

#[test]
fn infeasible_model_reports_phase_one_multipliers() {
    // x1 + x2 <= 1 and x1 + x2 >= 2
    let m = LpModel::new(
        vec![1.0, 1.0],
        dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]),
        vec![(-INF, 1.0), (2.0, INF)],
        vec![(0.0, INF); 2],
    )
    .unwrap();
    let (sol, _) = solve(&m, None, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
    assert_eq!(sol.duals.len(), 2);
}

#[test]
fn equality_rows_and_free_variables() {
    // min |t| style: x free, x = 3 - y, y in [0, 2], minimize x
    let m = LpModel::new(
        vec![1.0, 0.0],
        dense(&[vec![1.0, 1.0]]),
        vec![(3.0, 3.0)],
        vec![(-INF, INF), (0.0, 2.0)],
    )
    .unwrap();
    let (sol, _) = solve(&m, None, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-12);
    assert_strong_duality(&sol);
}

#[test]
fn random_lp_matches_vertex_enumeration() {
    for seed in 0..10 {
        let (c, a, b) = random_box_lp(seed, 5, 8);
        let oracle = vertex_enumeration(&c, &a, &b);
        let (sol, _) = solve(&box_model(&c, &a, &b), None, &opts()).unwrap();
        assert_strong_duality(&sol);
        assert!(
            (sol.objective - oracle).abs() < 1e-9,
            "seed {seed}: simplex {} vs enumeration {oracle}",
            sol.objective
        );
    }
}

#[test]
fn warm_basis_reproduces_solution_without_pivots() {
    let (c, a, b) = random_box_lp(42, 5, 8);
    let model = box_model(&c, &a, &b);
    let (cold, basis) = solve(&model, None, &opts()).unwrap();
    let (warm, basis2) = solve(&model, Some(&basis), &opts()).unwrap();
    assert_eq!(warm.iterations, 0);
    assert!((cold.objective - warm.objective).abs() <= 1e-9);
    assert_eq!(basis, basis2);
}

fn two_var_model() -> LpModel {
    // min -x0 - 2 x1  s.t.  x0 + x1 <= 4, x0 + 3 x1 <= 6, x >= 0
    LpModel::new(
        vec![-1.0, -2.0],
        dense(&[vec![1.0, 1.0], vec![1.0, 3.0]]),
        vec![(-INF, 4.0), (-INF, 6.0)],
        vec![(0.0, INF); 2],
    )
    .unwrap()
}

#[test]
fn add_column_with_nonnegative_reduced_cost_needs_no_pivot() {
    let mut s = LpSession::new(two_var_model(), opts());
    let first = s.solve().unwrap();
    let y = first.duals.clone();
    // reduced cost = c - y.a >= 0 for c = 5
    let col = NewColumn { cost: 5.0, entries: vec![(0, 1.0), (1, 1.0)], lo: 0.0, hi: INF };
    assert!(5.0 - (y[0] + y[1]) >= 0.0);
    s.add_columns(vec![col]).unwrap();
    let second = s.solve().unwrap();
    assert_eq!(second.iterations, 0);
    assert!((second.objective - first.objective).abs() < 1e-12);
}

#[test]
fn duplicate_basic_column_leaves_objective_unchanged() {
    let mut s = LpSession::new(two_var_model(), opts());
    let first = s.solve().unwrap();
    s.add_columns(vec![NewColumn { cost: -2.0, entries: vec![(0, 1.0), (1, 3.0)], lo: 0.0, hi: INF }])
        .unwrap();
    let second = s.solve().unwrap();
    assert!((second.objective - first.objective).abs() < 1e-12);
}

#[test]
fn add_excluded_column_reaches_full_optimum() {
    let full = two_var_model();
    let (oracle, _) = solve(&full, None, &opts()).unwrap();
    let restricted = LpModel::new(
        vec![-1.0],
        dense(&[vec![1.0], vec![1.0]]),
        vec![(-INF, 4.0), (-INF, 6.0)],
        vec![(0.0, INF)],
    )
    .unwrap();
    let mut s = LpSession::new(restricted, opts());
    let first = s.solve().unwrap();
    assert!((first.objective + 4.0).abs() < 1e-12);
    s.add_columns(vec![NewColumn { cost: -2.0, entries: vec![(0, 1.0), (1, 3.0)], lo: 0.0, hi: INF }])
        .unwrap();
    let second = s.solve().unwrap();
    assert!((second.objective - oracle.objective).abs() < 1e-12);
    assert!(second.objective < first.objective);
}

#[test]
fn add_satisfied_row_needs_no_pivot() {
    let mut s = LpSession::new(two_var_model(), opts());
    let first = s.solve().unwrap();
    s.add_rows(vec![NewRow { entries: vec![(0, 1.0)], lo: -INF, hi: 100.0 }]).unwrap();
    let second = s.solve().unwrap();
    assert_eq!(second.iterations, 0);
    assert!((second.objective - first.objective).abs() < 1e-12);
}

#[test]
fn add_row_forcing_zero() {
    // min x0 + x1, x >= 0, x0 + x1 >= 1  then add  x0 + x1 <= 0 ... infeasible;
    // instead: min x0 + 2 x1 with x0 - x1 >= -5; add rows x0 <= 0, x1 <= 0.
    let m = LpModel::new(
        vec![1.0, 2.0],
        dense(&[vec![1.0, -1.0]]),
        vec![(-5.0, INF)],
        vec![(0.0, INF); 2],
    )
    .unwrap();
    let mut s = LpSession::new(m, opts());
    s.solve().unwrap();
    s.add_rows(vec![
        NewRow { entries: vec![(0, 1.0)], lo: -INF, hi: 0.0 },
        NewRow { entries: vec![(1, 1.0)], lo: -INF, hi: 0.0 },
    ])
    .unwrap();
    let sol = s.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_eq!(sol.objective, 0.0);
}

#[test]
fn violated_cut_matches_full_lp() {
    let (c, a, b) = random_box_lp(7, 6, 8);
    let full = box_model(&c, &a, &b);
    let (oracle, _) = solve(&full, None, &opts()).unwrap();
    let partial = box_model(&c, &a[..3], &b[..3]);
    let mut s = LpSession::new(partial, opts());
    let relaxed = s.solve().unwrap();
    assert!(relaxed.objective <= oracle.objective + 1e-12);
    let rows = (3..6)
        .map(|i| NewRow {
            entries: a[i].iter().copied().enumerate().collect(),
            lo: -INF,
            hi: b[i],
        })
        .collect();
    s.add_rows(rows).unwrap();
    let sol = s.solve().unwrap();
    assert!((sol.objective - oracle.objective).abs() < 1e-9);
    assert!((sol.objective - vertex_enumeration(&c, &a, &b)).abs() < 1e-9);
}

#[test]
fn bland_rule_never_repeats_a_basis() {
    let o = SimplexOptions { bland_after: 0, record_bases: true, ..opts() };
    for seed in 0..20 {
        let (c, a, b) = random_box_lp(100 + seed, 6, 9);
        let (sol, _) = solve(&box_model(&c, &a, &b), None, &o).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let mut seen = HashSet::new();
        for sig in &sol.visited_bases {
            assert!(seen.insert(sig.clone()), "seed {seed}: basis repeated");
        }
    }
}

#[test]
fn singular_warm_basis_is_repaired() {
    // Two identical columns both marked basic.
    let m = LpModel::new(
        vec![1.0, 1.0, 0.0],
        dense(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0]]),
        vec![(1.0, INF), (0.0, 10.0)],
        vec![(0.0, INF); 3],
    )
    .unwrap();
    let basis = Basis {
        col_status: vec![VarStatus::Basic, VarStatus::Basic, VarStatus::AtLower],
        row_status: vec![VarStatus::AtLower, VarStatus::AtLower],
    };
    let (sol, _) = solve(&m, Some(&basis), &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-12);
}

#[test]
fn lp_text_dump_lists_every_row() {
    let text = two_var_model().to_lp_text();
    assert!(text.contains("r0: + 1 x0 + 1 x1 in [-inf, 4]"));
    assert_eq!(text.lines().filter(|l| l.starts_with(" r")).count(), 2);
}

fn random_general_lp(seed: u64) -> LpModel {
    // Mixed bounds, equality and range rows. Feasible by construction
    // around a random interior point.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..7);
    let n = rng.random_range(3..10);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random_bool(0.6) { rng.random_range(-2.0..2.0) } else { 0.0 })
                .collect()
        })
        .collect();
    let bounds = rows
        .iter()
        .map(|r| {
            let act: f64 = r.iter().zip(&x0).map(|(a, b)| a * b).sum();
            match rng.random_range(0..3) {
                0 => (act, act),
                1 => (act - rng.random_range(0.0..1.0), act + rng.random_range(0.0..1.0)),
                _ => (-INF, act + 0.5),
            }
        })
        .collect();
    let vb: Vec<(f64, f64)> = x0
        .iter()
        .map(|&v| match rng.random_range(0..3) {
            0 => (v - 2.0, v + 2.0),
            1 => (v - 1.0, INF),
            _ => (-3.0, 3.0),
        })
        .collect();
    // Nonnegative cost on columns without an upper bound keeps the LP bounded.
    let c = vb
        .iter()
        .map(|&(_, hi): &(f64, f64)| {
            let v: f64 = rng.random_range(-1.0..1.0);
            if hi.is_finite() { v } else { v.abs() }
        })
        .collect();
    LpModel::new(c, dense(&rows), bounds, vb).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn strong_duality_and_warm_equivalence(seed in 0u64..10_000) {
        let model = random_general_lp(seed);
        let (cold, basis) = solve(&model, None, &opts()).unwrap();
        prop_assert_eq!(cold.status, LpStatus::Optimal);
        let gap = (cold.objective - cold.dual_objective).abs();
        prop_assert!(gap <= 1e-7 * (1.0 + cold.objective.abs()), "gap {}", gap);
        prop_assert!(cold.primal_infeasibility <= 1e-8);
        let (warm, _) = solve(&model, Some(&basis), &opts()).unwrap();
        prop_assert!((cold.objective - warm.objective).abs() <= 1e-9);
    }

    #[test]
    fn augmented_resolve_matches_cold_solve(seed in 0u64..10_000) {
        let (c, a, b) = random_box_lp(seed, 6, 7);
        let split = 1 + (seed as usize % 5);
        // rows: start with `split` rows, add the rest
        let mut s = LpSession::new(box_model(&c, &a[..split], &b[..split]), opts());
        s.solve().unwrap();
        let rows = (split..6)
            .map(|i| NewRow { entries: a[i].iter().copied().enumerate().collect(), lo: -INF, hi: b[i] })
            .collect();
        s.add_rows(rows).unwrap();
        let warm = s.solve().unwrap();
        let (cold, _) = solve(s.model(), None, &opts()).unwrap();
        prop_assert!((warm.objective - cold.objective).abs() <= 1e-9);

        // columns: start with the first 3 columns, add the rest
        let sub: Vec<Vec<f64>> = a.iter().map(|r| r[..3].to_vec()).collect();
        let mut s = LpSession::new(box_model(&c[..3], &sub, &b), opts());
        s.solve().unwrap();
        let cols = (3..7)
            .map(|j| NewColumn {
                cost: c[j],
                entries: (0..6).map(|i| (i, a[i][j])).filter(|e| e.1 != 0.0).collect(),
                lo: 0.0,
                hi: 1.0,
            })
            .collect();
        s.add_columns(cols).unwrap();
        let warm = s.solve().unwrap();
        let (cold, _) = solve(s.model(), None, &opts()).unwrap();
        prop_assert!((warm.objective - cold.objective).abs() <= 1e-9);
    }
}

