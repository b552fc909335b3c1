//! Build a small LP, solve it, then grow it with a column and a row and
//! re-solve from the previous basis.

use dantzig_lp::simplex::{LpModel, LpSession, NewColumn, NewRow, SimplexOptions};
use dantzig_lp::SparseMatrix;

fn main() -> dantzig_lp::Result<()> {
    // minimize 2 x0 + 3 x1  s.t.  x0 + x1 >= 4,  x0 - x1 <= 1,  x >= 0
    let a = SparseMatrix::from_dense_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]])?;
    let model = LpModel::new(
        vec![2.0, 3.0],
        a,
        vec![(4.0, f64::INFINITY), (f64::NEG_INFINITY, 1.0)],
        vec![(0.0, f64::INFINITY); 2],
    )?;
    let mut session = LpSession::new(model, SimplexOptions::default());
    let sol = session.solve()?;
    println!("initial: {:?} objective {} x {:?} duals {:?}", sol.status, sol.objective, sol.x, sol.duals);

    // A cheaper way to cover the first row enters the basis.
    session.add_columns(vec![NewColumn { cost: 1.5, entries: vec![(0, 1.0)], lo: 0.0, hi: f64::INFINITY }])?;
    let sol = session.solve()?;
    println!("with column: objective {} after {} pivots", sol.objective, sol.iterations);

    // Cap the new variable; the dual simplex repairs feasibility.
    session.add_rows(vec![NewRow { entries: vec![(2, 1.0)], lo: f64::NEG_INFINITY, hi: 1.0 }])?;
    let sol = session.solve()?;
    println!("with row: objective {} after {} pivots, x {:?}", sol.objective, sol.iterations, sol.x);
    println!("total pivots across solves: {}", session.total_iterations());
    Ok(())
}
