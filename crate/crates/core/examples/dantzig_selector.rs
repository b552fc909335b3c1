//! Dantzig selector at a single lambda by constraint and column generation,
//! compared against solving the full LP.

use std::time::Instant;

use dantzig_lp::dantzig::{solve_ds, solve_ds_full, DsOptions};
use dantzig_lp::instance::{generate, Anchors, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let spec = InstanceSpec { rho: 0.3, ..InstanceSpec::new(InstanceKind::Ds, 200, 5000, 3) };
    let inst = generate(&spec)?;
    let lambda = Anchors::of(&inst)?.scaled(1.0)?;
    let opts = DsOptions::default();

    let t = Instant::now();
    let sol = solve_ds(&inst.x, &inst.y, lambda, &opts)?;
    println!(
        "generation: {:?}, objective {:.6}, |I| = {}, |J| = {}, {} outer / {} simplex iterations, {:.2?}",
        sol.status,
        sol.objective,
        sol.sets.i.len(),
        sol.sets.j.len(),
        sol.outer_iterations,
        sol.simplex_iterations,
        t.elapsed()
    );
    for rec in &sol.sets.trace {
        println!("  round {:2}: {} rows, {} cols, +{} rows, +{} cols", rec.iteration, rec.rows, rec.cols, rec.added_rows, rec.added_cols);
    }
    println!(
        "certificate: constraint violation {:.1e}, column violation {:.1e}, dual bound {:.6}",
        sol.max_constraint_violation, sol.max_column_violation, sol.dual_objective
    );

    let t = Instant::now();
    let full = solve_ds_full(&inst.x, &inst.y, lambda, &opts)?;
    println!("full LP: objective {:.6}, {} simplex iterations, {:.2?}", full.objective, full.simplex_iterations, t.elapsed());
    Ok(())
}
