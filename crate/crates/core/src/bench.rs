//! Run records and the ablation harness.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis_pursuit::BpSolution;
use crate::dantzig::{lasso_seed, solve_ds, solve_ds_from, solve_ds_full, solve_ds_path, DantzigSolution, DsOptions, SolveStatus};
use crate::error::Result;
use crate::fused_dantzig::FusedDsSolution;
use crate::instance::{Instance, InstanceSpec};
use crate::sparse::SparseMatrix;

pub const SCHEMA_VERSION: u32 = 1;

/// Ablation variants of the Dantzig selector solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Every constraint and column from the start.
    Full,
    /// Lasso-seeded constraint and column generation.
    LassoInitCgCc,
    /// Constraint and column generation from random sets of size `||beta0||_0`.
    RandomInit,
    /// All columns; constraints generated from the Lasso seed.
    ConstraintOnly,
    /// All constraints; columns generated from the Lasso seed.
    ColumnOnly,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::LassoInitCgCc,
        Variant::RandomInit,
        Variant::ConstraintOnly,
        Variant::ColumnOnly,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::LassoInitCgCc => "lasso_init_cg_cc",
            Variant::RandomInit => "random_init",
            Variant::ConstraintOnly => "constraint_only",
            Variant::ColumnOnly => "column_only",
        }
    }
}

/// One solve at one `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub variant: String,
    pub lambda: Option<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub support_size: usize,
    pub max_constraint_violation: f64,
    pub max_column_violation: f64,
    pub outer_iterations: usize,
    pub simplex_iterations: usize,
    pub i_size: usize,
    pub j_size: usize,
    pub wall_time_s: f64,
}

fn support(v: &[f64]) -> usize {
    v.iter().filter(|a| **a != 0.0).count()
}

impl RunResult {
    pub fn from_ds(variant: &str, sol: &DantzigSolution, secs: f64) -> Self {
        RunResult {
            variant: variant.to_string(),
            lambda: Some(sol.lambda),
            status: sol.status,
            objective: sol.objective,
            support_size: support(&sol.beta),
            max_constraint_violation: sol.max_constraint_violation,
            max_column_violation: sol.max_column_violation,
            outer_iterations: sol.outer_iterations,
            simplex_iterations: sol.simplex_iterations,
            i_size: sol.sets.i.len(),
            j_size: sol.sets.j.len(),
            wall_time_s: secs,
        }
    }

    pub fn from_bp(sol: &BpSolution, secs: f64) -> Self {
        RunResult {
            variant: "column_generation".to_string(),
            lambda: None,
            status: sol.status,
            objective: sol.objective,
            support_size: support(&sol.beta),
            max_constraint_violation: sol.equality_residual,
            max_column_violation: sol.max_column_violation,
            outer_iterations: sol.outer_iterations,
            simplex_iterations: sol.simplex_iterations,
            i_size: sol.v.len(),
            j_size: sol.j.len(),
            wall_time_s: secs,
        }
    }

    pub fn from_fused(variant: &str, sol: &FusedDsSolution, secs: f64) -> Self {
        RunResult {
            variant: variant.to_string(),
            lambda: Some(sol.lambda),
            status: sol.status,
            objective: sol.objective,
            support_size: sol.knots().len(),
            max_constraint_violation: sol.max_constraint_violation,
            max_column_violation: sol.max_column_violation,
            outer_iterations: sol.outer_iterations,
            simplex_iterations: sol.simplex_iterations,
            i_size: sol.i.len(),
            j_size: sol.j.len(),
            wall_time_s: secs,
        }
    }
}

/// The JSON document written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub instance: Option<InstanceSpec>,
    pub eps: f64,
    pub lambda_grid: Vec<f64>,
    pub results: Vec<RunResult>,
}

impl Report {
    pub fn new(command: &str, instance: Option<InstanceSpec>, eps: f64, lambda_grid: Vec<f64>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            instance,
            eps,
            lambda_grid,
            results: Vec::new(),
        }
    }

    pub fn all_optimal(&self) -> bool {
        self.results.iter().all(|r| r.status == SolveStatus::Optimal)
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Random starting sets of the given size, reproducible from `seed`.
pub fn random_sets(p: usize, size: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1417);
    let size = size.clamp(1, p);
    let mut i = sample(&mut rng, p, size).into_vec();
    let mut j = sample(&mut rng, p, size).into_vec();
    i.sort_unstable();
    j.sort_unstable();
    (i, j)
}

/// Solves one `lambda` with the given variant. `random_size` and `seed`
/// only matter for `RandomInit`.
pub fn solve_variant(
    x: &SparseMatrix,
    y: &[f64],
    lambda: f64,
    variant: Variant,
    random_size: usize,
    seed: u64,
    opts: &DsOptions,
) -> Result<DantzigSolution> {
    let all: Vec<usize> = (0..x.n_cols()).collect();
    match variant {
        Variant::Full => solve_ds_full(x, y, lambda, opts),
        Variant::LassoInitCgCc => solve_ds(x, y, lambda, opts),
        Variant::RandomInit => {
            let (i, j) = random_sets(x.n_cols(), random_size, seed);
            solve_ds_from(x, y, lambda, &i, &j, opts)
        }
        _ => {
            let (i, j) = lasso_seed(x, y, lambda)?;
            let (i, j) = match variant {
                Variant::ConstraintOnly => (i, all),
                Variant::ColumnOnly => (all, j),
                _ => (i, j),
            };
            solve_ds_from(x, y, lambda, &i, &j, opts)
        }
    }
}

/// One ablation cell on a generated instance.
pub fn run_ablation(inst: &Instance, lambda: f64, variant: Variant, opts: &DsOptions) -> Result<RunResult> {
    let size = support(&inst.beta0);
    let (sol, secs) = timed(|| solve_variant(&inst.x, &inst.y, lambda, variant, size, inst.spec.seed, opts))?;
    Ok(RunResult::from_ds(variant.tag(), &sol, secs))
}

/// Every variant at every `lambda`, cells run in parallel. Results are
/// ordered by variant, then by grid position.
pub fn run_bench(inst: &Instance, grid: &[f64], variants: &[Variant], opts: &DsOptions) -> Result<Vec<RunResult>> {
    let cells: Vec<(Variant, usize)> = variants
        .iter()
        .flat_map(|&v| (0..grid.len()).map(move |k| (v, k)))
        .collect();
    let mut out: Vec<((Variant, usize), RunResult)> = cells
        .par_iter()
        .map(|&(v, k)| run_ablation(inst, grid[k], v, opts).map(|r| ((v, k), r)))
        .collect::<Result<_>>()?;
    out.sort_by_key(|a| a.0);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

/// Dantzig selector over a grid. The Lasso-seeded variant follows the path
/// with warm starts; the others solve each `lambda` independently.
pub fn run_ds_grid(
    x: &SparseMatrix,
    y: &[f64],
    grid: &[f64],
    variant: Variant,
    random: (usize, u64),
    opts: &DsOptions,
) -> Result<Vec<RunResult>> {
    if variant == Variant::LassoInitCgCc && grid.len() > 1 {
        let start = Instant::now();
        let path = solve_ds_path(x, y, grid, opts)?;
        let each = start.elapsed().as_secs_f64() / grid.len() as f64;
        return Ok(path.iter().map(|s| RunResult::from_ds(variant.tag(), s, each)).collect());
    }
    grid.iter()
        .map(|&l| {
            let (sol, secs) = timed(|| solve_variant(x, y, l, variant, random.0, random.1, opts))?;
            Ok(RunResult::from_ds(variant.tag(), &sol, secs))
        })
        .collect()
}
