//! Command-line front end. `cli_main` returns the process exit code:
//! 0 when every solve is optimal, 2 when any hits an iteration limit,
//! 1 on bad input or any other error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::basis_pursuit::{solve_bp, BpOptions};
use crate::bench::{run_bench, run_ds_grid, Report, RunResult, Variant};
use crate::dantzig::DsOptions;
use crate::error::{Error, Result};
use crate::fused_dantzig::{solve_fused_regression, solve_fused_signal, ProjectedData};
use crate::instance::{
    ds_anchors, fused_regression_anchors, fused_signal_anchors, generate, lambda_grid, Anchors, Instance,
    InstanceKind, InstanceSpec,
};
use crate::io::{read_matrix_market, read_vector, write_matrix_market, write_vector};
use crate::sparse::SparseMatrix;

pub const THREADS_ENV: &str = "DANTZIG_LP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dantzig-lp", version, about = "Dantzig selector, basis pursuit and fused Dantzig selector via column and constraint generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance and write it to a directory.
    Gen(GenArgs),
    /// Dantzig selector at one lambda or over a grid.
    Ds(SolveArgs),
    /// Basis pursuit.
    Bp(SolveArgs),
    /// Fused Dantzig selector (signal or regression).
    Fused(SolveArgs),
    /// Ablation of solver variants on a generated instance.
    Bench(SolveArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    p: usize,
    /// Equicorrelation of the design rows.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Probability of zeroing each design entry.
    #[arg(long, default_value_t = 0.0)]
    pi: f64,
    #[arg(long, default_value_t = 10.0)]
    snr: f64,
    /// Knots of the true signal (fused kinds).
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: InstanceKind,
    #[command(flatten)]
    data: DataArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Instance kind for `fused`.
    #[arg(long, value_enum)]
    kind: Option<InstanceKind>,
    /// Design matrix in Matrix Market format.
    #[arg(long, requires = "in_y")]
    in_x: Option<PathBuf>,
    /// Response, one value per line.
    #[arg(long)]
    in_y: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["lambda_grid", "tau"])]
    lambda: Option<f64>,
    /// COUNT:MIN:MAX; MIN and MAX may be `auto`.
    #[arg(long, conflicts_with = "tau")]
    lambda_grid: Option<String>,
    /// lambda = tau * noise level of a generated instance.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, default_value_t = 30)]
    col_batch: usize,
    #[arg(long, default_value_t = 50)]
    row_batch: usize,
    #[arg(long, default_value_t = 500)]
    max_outer: usize,
    /// Solver variant; `bench` runs all of them unless some are given.
    #[arg(long, value_enum)]
    variant: Vec<Variant>,
    /// Results file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Problem data for a solve, generated or read from files.
struct Data {
    x: Option<SparseMatrix>,
    y: Vec<f64>,
    instance: Option<Instance>,
}

impl DataArgs {
    fn spec(&self, kind: InstanceKind) -> InstanceSpec {
        InstanceSpec {
            kind,
            n: self.n,
            p: self.p,
            rho: self.rho,
            pi: self.pi,
            snr: self.snr,
            knots: self.knots,
            seed: self.seed,
        }
    }
}

impl SolveArgs {
    fn ds_options(&self) -> Result<DsOptions> {
        if self.eps.is_nan() || self.eps < 0.0 || self.col_batch == 0 || self.row_batch == 0 {
            return Err(Error::InvalidSpec("eps must be nonnegative and batch sizes positive".into()));
        }
        Ok(DsOptions {
            eps: self.eps,
            col_batch: self.col_batch,
            row_batch: self.row_batch,
            max_outer: self.max_outer,
            ..DsOptions::default()
        })
    }

    fn load(&self, kind: InstanceKind) -> Result<Data> {
        if let Some(path) = &self.in_x {
            let x = read_matrix_market(path)?;
            let y = read_vector(self.in_y.as_deref().expect("clap enforces --in-y"))?;
            if y.len() != x.n_rows() {
                return Err(Error::DimensionMismatch(format!("y has {} entries, X has {} rows", y.len(), x.n_rows())));
            }
            return Ok(Data { x: Some(x), y, instance: None });
        }
        if let Some(path) = &self.in_y {
            if kind != InstanceKind::FusedSignal {
                return Err(Error::InvalidSpec("--in-y without --in-x only applies to fused signals".into()));
            }
            return Ok(Data { x: None, y: read_vector(path)?, instance: None });
        }
        let inst = generate(&self.data.spec(kind))?;
        Ok(Data { x: Some(inst.x.clone()), y: inst.y.clone(), instance: Some(inst) })
    }

    fn grid(&self, anchors: &Anchors) -> Result<Vec<f64>> {
        if let Some(l) = self.lambda {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidAnchor(format!("lambda = {l}")));
            }
            return Ok(vec![l]);
        }
        if let Some(tau) = self.tau {
            return Ok(vec![anchors.scaled(tau)?]);
        }
        if let Some(spec) = &self.lambda_grid {
            let parts: Vec<&str> = spec.split(':').collect();
            let [count, min, max] = parts[..] else {
                return Err(Error::Parse(format!("--lambda-grid expects COUNT:MIN:MAX, got {spec}")));
            };
            let count: usize = count.parse().map_err(|_| Error::Parse(format!("grid count {count}")))?;
            let value = |s: &str, auto: f64| -> Result<f64> {
                if s == "auto" {
                    Ok(auto)
                } else {
                    s.parse().map_err(|_| Error::Parse(format!("grid anchor {s}")))
                }
            };
            let max = value(max, anchors.lambda_max)?;
            let min = value(min, anchors.default_min())?;
            return lambda_grid(min, max, count);
        }
        Ok(vec![anchors.scaled(1.0).map_err(|_| {
            Error::InvalidAnchor("give --lambda, --lambda-grid or --tau for data read from files".into())
        })?])
    }
}

fn write_report(report: &Report, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run_gen(args: &GenArgs) -> Result<()> {
    let inst = generate(&args.data.spec(args.kind))?;
    fs::create_dir_all(&args.out)?;
    write_matrix_market(&args.out.join("x.mtx"), &inst.x)?;
    write_vector(&args.out.join("y.csv"), &inst.y)?;
    write_vector(&args.out.join("beta0.csv"), &inst.beta0)?;
    write_vector(&args.out.join("e0.csv"), &inst.e0)?;
    fs::write(args.out.join("instance.json"), serde_json::to_string_pretty(&inst.spec)? + "\n")?;
    Ok(())
}

fn run_ds(args: &SolveArgs) -> Result<Report> {
    let data = args.load(InstanceKind::Ds)?;
    let x = data.x.as_ref().expect("ds data has a design");
    let e0 = data.instance.as_ref().map(|i| i.e0.as_slice());
    let grid = args.grid(&ds_anchors(x, &data.y, e0))?;
    let opts = args.ds_options()?;
    let variant = args.variant.first().copied().unwrap_or(Variant::LassoInitCgCc);
    let random = data
        .instance
        .as_ref()
        .map_or((x.n_rows() / 5, 0), |i| (i.beta0.iter().filter(|b| **b != 0.0).count(), i.spec.seed));
    let mut report = Report::new("ds", data.instance.as_ref().map(|i| i.spec.clone()), opts.eps, grid.clone());
    report.results = run_ds_grid(x, &data.y, &grid, variant, random, &opts)?;
    Ok(report)
}

fn run_bp(args: &SolveArgs) -> Result<Report> {
    let data = args.load(InstanceKind::Bp)?;
    let x = data.x.as_ref().expect("bp data has a design");
    let opts = BpOptions {
        eps: args.eps,
        col_batch: args.col_batch,
        max_outer: args.max_outer,
        ..BpOptions::default()
    };
    let start = std::time::Instant::now();
    let sol = solve_bp(x, &data.y, &opts)?;
    let mut report = Report::new("bp", data.instance.as_ref().map(|i| i.spec.clone()), opts.eps, Vec::new());
    report.results.push(RunResult::from_bp(&sol, start.elapsed().as_secs_f64()));
    Ok(report)
}

fn run_fused(args: &SolveArgs) -> Result<Report> {
    let kind = match (args.kind, &args.in_x) {
        (Some(k @ (InstanceKind::FusedSignal | InstanceKind::FusedRegression)), _) => k,
        (Some(k), _) => return Err(Error::InvalidSpec(format!("fused does not accept kind {k:?}"))),
        (None, Some(_)) => InstanceKind::FusedRegression,
        (None, None) => InstanceKind::FusedSignal,
    };
    let data = args.load(kind)?;
    let opts = args.ds_options()?;
    let inst = data.instance.as_ref();
    let (grid, tag) = match kind {
        InstanceKind::FusedSignal => {
            let anchors = fused_signal_anchors(&data.y, inst.map(|i| i.e0.as_slice()));
            (args.grid(&anchors)?, "fused_signal")
        }
        _ => {
            let x = data
                .x
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("fused regression needs --in-x".into()))?;
            let projected = ProjectedData::new(x, &data.y)?;
            let anchors = fused_regression_anchors(&projected, inst.map(|i| i.beta0.as_slice()));
            (args.grid(&anchors)?, "fused_regression")
        }
    };
    let mut report = Report::new("fused", inst.map(|i| i.spec.clone()), opts.eps, grid.clone());
    for &lambda in &grid {
        let start = std::time::Instant::now();
        let sol = match kind {
            InstanceKind::FusedSignal => solve_fused_signal(&data.y, lambda, &opts)?,
            _ => solve_fused_regression(data.x.as_ref().expect("checked above"), &data.y, lambda, &opts)?,
        };
        report.results.push(RunResult::from_fused(tag, &sol, start.elapsed().as_secs_f64()));
    }
    Ok(report)
}

fn run_bench_cmd(args: &SolveArgs) -> Result<Report> {
    if args.in_x.is_some() || args.in_y.is_some() {
        return Err(Error::InvalidSpec("bench runs on generated instances only".into()));
    }
    let inst = generate(&args.data.spec(InstanceKind::Ds))?;
    let grid = args.grid(&Anchors::of(&inst)?)?;
    let opts = args.ds_options()?;
    let variants = if args.variant.is_empty() { Variant::ALL.to_vec() } else { args.variant.clone() };
    let mut report = Report::new("bench", Some(inst.spec.clone()), opts.eps, grid.clone());
    report.results = run_bench(&inst, &grid, &variants, &opts)?;
    Ok(report)
}

fn configure_threads() {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    if let Some(k) = threads.filter(|&k| k > 0) {
        // A pool configured earlier in the process wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let outcome = match &cli.command {
        Command::Gen(a) => run_gen(a).map(|_| None),
        Command::Ds(a) => run_ds(a).map(|r| Some((r, a))),
        Command::Bp(a) => run_bp(a).map(|r| Some((r, a))),
        Command::Fused(a) => run_fused(a).map(|r| Some((r, a))),
        Command::Bench(a) => run_bench_cmd(a).map(|r| Some((r, a))),
    };
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let Some((report, args)) = report else {
        return 0;
    };
    if let Err(e) = write_report(&report, args.out.as_deref()) {
        eprintln!("error: {e}");
        return 1;
    }
    if report.all_optimal() {
        0
    } else {
        2
    }
}
