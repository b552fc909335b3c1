pub mod basis_pursuit;
pub mod bench;
pub mod cli;
pub mod dantzig;
pub mod error;
pub mod fused_dantzig;
pub mod fused_prox;
pub mod instance;
pub mod io;
pub mod lasso;
pub mod simplex;
pub mod sparse;

pub use error::{Error, Result};
pub use sparse::SparseMatrix;
