//! Compare the five solver variants on one instance and a small grid.

use dantzig_lp::bench::{run_bench, Variant};
use dantzig_lp::dantzig::DsOptions;
use dantzig_lp::instance::{generate, lambda_grid, Anchors, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let inst = generate(&InstanceSpec { pi: 0.5, ..InstanceSpec::new(InstanceKind::Ds, 100, 1000, 2) })?;
    let a = Anchors::of(&inst)?;
    let grid = lambda_grid(a.default_min(), a.lambda_max, 3)?;
    println!("{:<18} {:>9} {:>12} {:>7} {:>6} {:>6} {:>9}", "variant", "lambda", "objective", "pivots", "|I|", "|J|", "seconds");
    for r in run_bench(&inst, &grid, &Variant::ALL, &DsOptions::default())? {
        println!(
            "{:<18} {:>9.4} {:>12.6} {:>7} {:>6} {:>6} {:>9.4}",
            r.variant,
            r.lambda.unwrap_or(f64::NAN),
            r.objective,
            r.simplex_iterations,
            r.i_size,
            r.j_size,
            r.wall_time_s
        );
    }
    Ok(())
}
