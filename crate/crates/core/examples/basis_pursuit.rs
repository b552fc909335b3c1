//! Noiseless recovery by basis pursuit with column generation.

use dantzig_lp::basis_pursuit::{solve_bp, BpOptions};
use dantzig_lp::instance::{generate, InstanceKind, InstanceSpec};

fn main() -> dantzig_lp::Result<()> {
    let inst = generate(&InstanceSpec::new(InstanceKind::Bp, 100, 400, 5))?;
    let sol = solve_bp(&inst.x, &inst.y, &BpOptions::default())?;
    let err = sol.beta.iter().zip(&inst.beta0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!(
        "{:?}: ||beta||_1 = {:.6} (dual bound {:.6}), {} columns generated of {}",
        sol.status,
        sol.objective,
        sol.dual_objective,
        sol.j.len(),
        inst.x.n_cols()
    );
    println!("equality residual {:.1e}, max error against the truth {err:.1e}", sol.equality_residual);
    Ok(())
}
