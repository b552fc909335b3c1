//! Synthetic instances and `lambda` grids.
//!
//! Every random quantity comes from a ChaCha8 generator keyed by the
//! instance seed, with one stream per column of `X`. Stream 0 holds the
//! shared equicorrelation factor and the last stream the signal and noise,
//! so a column's entries (and which of them are zeroed) do not depend on
//! how many other columns are drawn or in which order.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dantzig::inf_norm;
use crate::error::{Error, Result};
use crate::fused_dantzig::{suffix_sums, ProjectedData};
use crate::fused_prox::{cumulative, differences};
use crate::sparse::SparseMatrix;

/// Attempts at redrawing a column that sparsification emptied.
pub const REDRAW_BUDGET: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Ds,
    Bp,
    FusedSignal,
    FusedRegression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub n: usize,
    /// Ignored for `FusedSignal`, where `p = n`.
    pub p: usize,
    pub rho: f64,
    pub pi: f64,
    pub snr: f64,
    /// Knots of the true signal for the fused kinds; `None` means the
    /// default (20 for regression, `n / 20` for signals).
    pub knots: Option<usize>,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(kind: InstanceKind, n: usize, p: usize, seed: u64) -> Self {
        InstanceSpec { kind, n, p, rho: 0.0, pi: 0.0, snr: 10.0, knots: None, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.kind != InstanceKind::FusedSignal && self.p == 0 {
            return bad("p must be positive");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.pi) {
            return bad("pi must lie in [0, 1)");
        }
        if !self.snr.is_finite() || self.snr <= 0.0 {
            return bad("snr must be positive");
        }
        if let Some(k) = self.knots {
            let limit = if self.kind == InstanceKind::FusedSignal { self.n } else { self.p };
            if k >= limit {
                return bad("knot count must be below the signal length");
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        match self.kind {
            InstanceKind::FusedSignal => (self.n, self.n),
            _ => (self.n, self.p),
        }
    }

    fn knot_count(&self) -> usize {
        match (self.knots, self.kind) {
            (Some(k), _) => k,
            (None, InstanceKind::FusedSignal) => self.n / 20,
            (None, _) => 20.min(self.p.saturating_sub(1)),
        }
    }
}

/// A generated problem. `e0 = y - X beta0`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub x: SparseMatrix,
    pub y: Vec<f64>,
    pub beta0: Vec<f64>,
    pub e0: Vec<f64>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / v.len() as f64
}

/// Noise with `Var(signal) / sigma^2 = snr`. A constant signal gets
/// `sigma^2 = 1 / snr`.
fn add_noise(rng: &mut ChaCha8Rng, signal: &[f64], snr: f64) -> (Vec<f64>, Vec<f64>) {
    let var = variance(signal);
    let sigma = if var > 0.0 { (var / snr).sqrt() } else { (1.0 / snr).sqrt() };
    let e: Vec<f64> = (0..signal.len()).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let y = signal.iter().zip(&e).map(|(s, e)| s + e).collect();
    (y, e)
}

/// Equicorrelated, sparsified design with unit-norm columns.
pub fn gen_design(n: usize, p: usize, rho: f64, pi: f64, seed: u64) -> Result<SparseMatrix> {
    let z0 = normals(&mut stream(seed, 0), n);
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut x = SparseMatrix::with_rows(n);
    for j in 0..p {
        let mut rng = stream(seed, j as u64 + 1);
        let mut col = Vec::new();
        for _ in 0..REDRAW_BUDGET {
            col.clear();
            for (i, &shared) in z0.iter().enumerate() {
                let v = a * shared + b * rng.sample::<f64, _>(StandardNormal);
                let keep = pi == 0.0 || !rng.random_bool(pi);
                if keep && v != 0.0 {
                    col.push((i, v));
                }
            }
            if !col.is_empty() {
                break;
            }
        }
        if col.is_empty() {
            return Err(Error::DegenerateColumn(j));
        }
        let norm = col.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        x.push_column(col.into_iter().map(|(i, v)| (i, v / norm)))?;
    }
    Ok(x)
}

fn sparse_coefficients(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    let mut support = sample(rng, p, k.min(p)).into_vec();
    support.sort_unstable();
    for j in support {
        beta[j] = rng.sample(StandardNormal);
    }
    beta
}

/// Piecewise-constant vector of length `len` with `knots` random jumps.
fn piecewise_constant(rng: &mut ChaCha8Rng, len: usize, knots: usize) -> Vec<f64> {
    let mut alpha = vec![0.0; len];
    alpha[0] = rng.sample(StandardNormal);
    let mut at = sample(rng, len - 1, knots.min(len - 1)).into_vec();
    at.sort_unstable();
    for k in at {
        let mut jump: f64 = rng.sample(StandardNormal);
        while jump == 0.0 {
            jump = rng.sample(StandardNormal);
        }
        alpha[k + 1] = jump;
    }
    cumulative(&alpha)
}

/// Sparse regression instance (`Ds` adds noise, `Bp` does not).
pub fn gen_ds_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let (n, p) = spec.dims();
    let x = gen_design(n, p, spec.rho, spec.pi, spec.seed)?;
    let mut rng = stream(spec.seed, u64::MAX);
    let beta0 = sparse_coefficients(&mut rng, p, n / 5);
    let signal = x.matvec(&beta0);
    let (y, e0) = match spec.kind {
        InstanceKind::Bp => (signal, vec![0.0; n]),
        _ => add_noise(&mut rng, &signal, spec.snr),
    };
    Ok(Instance { spec: spec.clone(), x, y, beta0, e0 })
}

/// Piecewise-constant instance: `X = I` for signals, iid Gaussian otherwise.
pub fn gen_fused_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let (n, p) = spec.dims();
    let mut rng = stream(spec.seed, u64::MAX);
    let x = match spec.kind {
        InstanceKind::FusedSignal => SparseMatrix::identity(n),
        _ => {
            let cols: Vec<Vec<f64>> = (0..p).map(|j| normals(&mut stream(spec.seed, j as u64 + 1), n)).collect();
            SparseMatrix::from_dense_cols(n, &cols)?
        }
    };
    let beta0 = piecewise_constant(&mut rng, p, spec.knot_count());
    let signal = x.matvec(&beta0);
    let (y, e0) = add_noise(&mut rng, &signal, spec.snr);
    Ok(Instance { spec: spec.clone(), x, y, beta0, e0 })
}

pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    match spec.kind {
        InstanceKind::Ds | InstanceKind::Bp => gen_ds_instance(spec),
        InstanceKind::FusedSignal | InstanceKind::FusedRegression => gen_fused_instance(spec),
    }
}

/// Reference values for `lambda` grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    /// Smallest `lambda` with the all-zero (or fully fused) solution.
    pub lambda_max: f64,
    /// Constraint norm at the truth: `||X^T e0||_inf`, or its fused analogue.
    pub noise_level: Option<f64>,
}

pub fn ds_anchors(x: &SparseMatrix, y: &[f64], e0: Option<&[f64]>) -> Anchors {
    Anchors {
        lambda_max: inf_norm(&x.t_matvec(y)),
        noise_level: e0.map(|e| inf_norm(&x.t_matvec(e))),
    }
}

pub fn fused_signal_anchors(y: &[f64], e0: Option<&[f64]>) -> Anchors {
    let noise = |e: &[f64]| inf_norm(&suffix_sums(e)[1..]);
    let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    Anchors { lambda_max: noise(&centered), noise_level: e0.map(noise) }
}

pub fn fused_regression_anchors(data: &ProjectedData, beta0: Option<&[f64]>) -> Anchors {
    let lambda_max = inf_norm(&data.x_tilde.t_matvec(&data.y_tilde));
    let noise_level = beta0.map(|b| {
        let alpha_b = &differences(b)[1..];
        let fit = data.x_tilde.matvec(alpha_b);
        let r: Vec<f64> = data.y_tilde.iter().zip(&fit).map(|(a, b)| a - b).collect();
        inf_norm(&data.x_tilde.t_matvec(&r))
    });
    Anchors { lambda_max, noise_level }
}

impl Anchors {
    pub fn of(inst: &Instance) -> Result<Anchors> {
        Ok(match inst.spec.kind {
            InstanceKind::Ds | InstanceKind::Bp => ds_anchors(&inst.x, &inst.y, Some(&inst.e0)),
            InstanceKind::FusedSignal => fused_signal_anchors(&inst.y, Some(&inst.e0)),
            InstanceKind::FusedRegression => {
                let data = ProjectedData::new(&inst.x, &inst.y)?;
                fused_regression_anchors(&data, Some(&inst.beta0))
            }
        })
    }

    /// Default lower end of a grid: twice the noise level, or
    /// `1e-3 * lambda_max` without one.
    pub fn default_min(&self) -> f64 {
        match self.noise_level {
            Some(l) => 2.0 * l,
            None => 1e-3 * self.lambda_max,
        }
    }

    /// `tau * noise_level`.
    pub fn scaled(&self, tau: f64) -> Result<f64> {
        let base = self
            .noise_level
            .ok_or_else(|| Error::InvalidAnchor("tau needs the noise level of a generated instance".into()))?;
        let l = tau * base;
        if !l.is_finite() || l <= 0.0 {
            return Err(Error::InvalidAnchor(format!("tau * noise level = {l}")));
        }
        Ok(l)
    }
}

/// `count` log-spaced values from `max` down to `min`, both included.
pub fn lambda_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::EmptyGrid);
    }
    for (name, v) in [("min", min), ("max", max)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidAnchor(format!("{name} = {v}")));
        }
    }
    if count == 1 {
        return Ok(vec![max]);
    }
    if min >= max {
        return Err(Error::InvalidAnchor(format!("min {min} must be below max {max}")));
    }
    let (lo, hi) = (min.ln(), max.ln());
    let step = (hi - lo) / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|k| (hi - step * k as f64).exp()).collect();
    grid[0] = max;
    grid[count - 1] = min;
    Ok(grid)
}
