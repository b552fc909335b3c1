//! Fused Dantzig selector with a general design, seeded from FISTA.

use dantzig_lp::dantzig::DsOptions;
use dantzig_lp::fused_dantzig::solve_fused_regression;
use dantzig_lp::fused_prox::fused_regression_objective;
use dantzig_lp::instance::{generate, Anchors, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let spec = InstanceSpec { knots: Some(5), ..InstanceSpec::new(InstanceKind::FusedRegression, 150, 100, 8) };
    let inst = generate(&spec)?;
    let lambda = Anchors::of(&inst)?.scaled(1.0)?;
    let sol = solve_fused_regression(&inst.x, &inst.y, lambda, &DsOptions::default())?;
    println!(
        "{:?}: sum |alpha_j| = {:.4}, knots {:?}",
        sol.status,
        sol.objective,
        sol.knots()
    );
    println!(
        "fit objective at lambda: {:.4} (truth {:.4})",
        fused_regression_objective(&inst.x, &inst.y, &sol.beta, lambda),
        fused_regression_objective(&inst.x, &inst.y, &inst.beta0, lambda)
    );
    Ok(())
}
