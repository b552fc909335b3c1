//! Generate an instance, write it as Matrix Market and CSV, and read it back.

use dantzig_lp::instance::{generate, InstanceKind, InstanceSpec};
use dantzig_lp::io::{read_matrix_market, read_vector, write_matrix_market, write_vector};

fn main() -> dantzig_lp::Result<()> {
    let spec = InstanceSpec { rho: 0.5, pi: 0.8, ..InstanceSpec::new(InstanceKind::Ds, 50, 300, 12) };
    let inst = generate(&spec)?;
    let dir = std::env::temp_dir().join(format!("dantzig-lp-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    write_matrix_market(&dir.join("x.mtx"), &inst.x)?;
    write_vector(&dir.join("y.csv"), &inst.y)?;

    let x = read_matrix_market(&dir.join("x.mtx"))?;
    let y = read_vector(&dir.join("y.csv"))?;
    println!(
        "{} x {} design with {} nonzeros ({:.0}% dense); round trip exact: {}",
        x.n_rows(),
        x.n_cols(),
        x.nnz(),
        100.0 * x.nnz() as f64 / (x.n_rows() * x.n_cols()) as f64,
        x == inst.x && y == inst.y
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
