//! Coordinate-descent Lasso along a decreasing grid, with warm starts.

use dantzig_lp::instance::{generate, lambda_grid, InstanceKind, InstanceSpec};
use dantzig_lp::lasso::{active_sets, default_eps_act, lasso_path};

fn main() -> dantzig_lp::Result<()> {
    let inst = generate(&InstanceSpec::new(InstanceKind::Ds, 100, 400, 7))?;
    let top = inst.x.t_matvec(&inst.y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let grid = lambda_grid(0.01 * top, top, 8)?;
    for fit in lasso_path(&inst.x, &inst.y, &grid)? {
        let (i, j) = active_sets(&inst.x, &fit, fit.lambda, default_eps_act(fit.lambda));
        println!(
            "lambda {:8.4}  support {:3}  active constraints {:3}  sweeps {:4}  kkt {:.1e}",
            fit.lambda,
            j.len(),
            i.len(),
            fit.sweeps,
            fit.kkt_violation
        );
    }
    Ok(())
}
