//! Fused Dantzig selector on a noisy piecewise-constant signal.

use dantzig_lp::dantzig::DsOptions;
use dantzig_lp::fused_dantzig::solve_fused_signal;
use dantzig_lp::instance::{generate, Anchors, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let spec = InstanceSpec { knots: Some(6), ..InstanceSpec::new(InstanceKind::FusedSignal, 2000, 2000, 4) };
    let inst = generate(&spec)?;
    let truth: Vec<usize> = (1..inst.beta0.len()).filter(|&i| inst.beta0[i] != inst.beta0[i - 1]).collect();
    let anchors = Anchors::of(&inst)?;
    for tau in [1.0, 2.0, 4.0] {
        let sol = solve_fused_signal(&inst.y, anchors.scaled(tau)?, &DsOptions::default())?;
        println!(
            "tau {tau}: {:?}, {} knots, {} bounded constraints, {} outer iterations",
            sol.status,
            sol.knots().len(),
            sol.i.len(),
            sol.outer_iterations
        );
    }
    println!("true knots: {truth:?}");
    Ok(())
}
