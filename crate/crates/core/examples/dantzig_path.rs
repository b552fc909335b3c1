//! Dantzig selector over a 50-point grid, reusing working sets and the
//! simplex basis from one lambda to the next.

use dantzig_lp::dantzig::{solve_ds_path, DsOptions};
use dantzig_lp::instance::{generate, lambda_grid, Anchors, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let inst = generate(&InstanceSpec::new(InstanceKind::Ds, 100, 2000, 11))?;
    let anchors = Anchors::of(&inst)?;
    let grid = lambda_grid(anchors.default_min(), anchors.lambda_max, 50)?;
    let path = solve_ds_path(&inst.x, &inst.y, &grid, &DsOptions::default())?;
    for sol in path.iter().step_by(7) {
        let support = sol.beta.iter().filter(|b| **b != 0.0).count();
        println!(
            "lambda {:8.4}  ||beta||_1 {:8.4}  support {:3}  simplex iterations {:4}",
            sol.lambda, sol.objective, support, sol.simplex_iterations
        );
    }
    let total: usize = path.iter().map(|s| s.simplex_iterations).sum();
    println!("{} solves, {total} simplex iterations in total", path.len());
    Ok(())
}
