//! Exact 1-d fused lasso by dynamic programming, and FISTA for a general
//! design built on top of it.

use dantzig_lp::fused_prox::{fista_fused, fused_dp};
use dantzig_lp::instance::{generate, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let spec = InstanceSpec { knots: Some(4), ..InstanceSpec::new(InstanceKind::FusedSignal, 200, 200, 1) };
    let inst = generate(&spec)?;
    for lambda in [0.5, 2.0, 8.0] {
        let fit = fused_dp(&inst.y, lambda);
        println!("signal  lambda {lambda:4.1}: {:2} knots, objective {:.4}", fit.knots.len(), fit.objective);
    }

    let spec = InstanceSpec { knots: Some(3), ..InstanceSpec::new(InstanceKind::FusedRegression, 80, 40, 2) };
    let inst = generate(&spec)?;
    for lambda in [5.0, 50.0] {
        let fit = fista_fused(&inst.x, &inst.y, lambda, 10_000)?;
        // Differences never vanish exactly; the knot list uses a small threshold.
        println!(
            "regression lambda {lambda:4.1}: objective {:.4}, {} differences above threshold, {} iterations",
            fit.objective,
            fit.knots.len(),
            fit.iterations
        );
    }
    Ok(())
}
