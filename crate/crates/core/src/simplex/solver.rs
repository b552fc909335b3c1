use log::{debug, trace};

use super::factor::BasisFactor;
use super::{Basis, LpModel, LpSolution, LpStatus, SimplexOptions, VarStatus};
use crate::error::{Error, Result};

/// Solves `model`, starting from `warm` when it matches the model's shape.
///
/// Returns the solution and the final basis. Feeding that basis back into
/// `solve` on the same model reproduces the solution without pivoting.
pub fn solve(
    model: &LpModel,
    warm: Option<&Basis>,
    opts: &SimplexOptions,
) -> Result<(LpSolution, Basis)> {
    let mut engine = Engine::new(model, warm, opts)?;
    let status = engine.run()?;
    Ok(engine.finish(status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Done,
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Engine<'a> {
    model: &'a LpModel,
    opts: &'a SimplexOptions,
    n: usize,
    m: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    header: Vec<usize>,
    x: Vec<f64>,
    factor: Option<BasisFactor>,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    visited: Vec<Vec<u8>>,
    phase_one_duals: Option<Vec<f64>>,
}

impl<'a> Engine<'a> {
    fn new(model: &'a LpModel, warm: Option<&Basis>, opts: &'a SimplexOptions) -> Result<Self> {
        let n = model.n_cols();
        let m = model.n_rows();
        let lo: Vec<f64> = model.col_lo.iter().chain(&model.row_lo).copied().collect();
        let hi: Vec<f64> = model.col_hi.iter().chain(&model.row_hi).copied().collect();
        let mut cost = model.c.clone();
        cost.resize(n + m, 0.0);
        let mut e = Engine {
            model,
            opts,
            n,
            m,
            lo,
            hi,
            cost,
            status: Vec::new(),
            header: Vec::new(),
            x: vec![0.0; n + m],
            factor: None,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            visited: Vec::new(),
            phase_one_duals: None,
        };
        match warm {
            Some(b) if b.is_consistent_with(model) => {
                e.status = b.col_status.iter().chain(&b.row_status).copied().collect();
            }
            Some(_) => {
                debug!("warm basis does not match the model; starting from a crash basis");
                e.crash();
            }
            None => e.crash(),
        }
        for k in 0..n + m {
            if e.status[k] != VarStatus::Basic {
                e.status[k] = e.normalized(k, e.status[k]);
                e.x[k] = e.nonbasic_value(k);
            }
        }
        e.header = (0..n + m).filter(|&k| e.status[k] == VarStatus::Basic).collect();
        debug_assert_eq!(e.header.len(), m);
        Ok(e)
    }

    /// Slack basis, then free columns swapped into equality rows.
    fn crash(&mut self) {
        let (n, m) = (self.n, self.m);
        self.status = (0..n + m)
            .map(|k| if k >= n { VarStatus::Basic } else { VarStatus::resting(self.lo[k], self.hi[k]) })
            .collect();
        let a = self.model.matrix();
        let mut claimed = vec![false; m];
        for j in 0..n {
            if self.lo[j].is_finite() || self.hi[j].is_finite() {
                continue;
            }
            let (idx, val) = a.col(j);
            let pick = idx
                .iter()
                .zip(val)
                .filter(|(&i, _)| !claimed[i] && self.lo[n + i] == self.hi[n + i])
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(&i, _)| i);
            if let Some(i) = pick {
                claimed[i] = true;
                self.status[j] = VarStatus::Basic;
                self.status[n + i] = VarStatus::AtLower;
            }
        }
    }

    fn normalized(&self, k: usize, s: VarStatus) -> VarStatus {
        let (lo, hi) = (self.lo[k], self.hi[k]);
        match s {
            VarStatus::AtLower if lo.is_finite() => s,
            VarStatus::AtUpper if hi.is_finite() => s,
            VarStatus::Free if !lo.is_finite() && !hi.is_finite() => s,
            VarStatus::Basic => s,
            _ => VarStatus::resting(lo, hi),
        }
    }

    fn nonbasic_value(&self, k: usize) -> f64 {
        match self.status[k] {
            VarStatus::AtLower => self.lo[k],
            VarStatus::AtUpper => self.hi[k],
            _ => 0.0,
        }
    }

    fn is_fixed(&self, k: usize) -> bool {
        self.lo[k] == self.hi[k]
    }

    fn column_dense(&self, k: usize) -> Vec<f64> {
        if k < self.n {
            self.model.matrix().dense_col(k)
        } else {
            let mut v = vec![0.0; self.m];
            v[k - self.n] = -1.0;
            v
        }
    }

    #[inline]
    fn dot_col(&self, k: usize, y: &[f64]) -> f64 {
        if k < self.n {
            self.model.matrix().col_dot(k, y)
        } else {
            -y[k - self.n]
        }
    }

    fn factor(&self) -> &BasisFactor {
        self.factor.as_ref().expect("basis factorized")
    }

    /// Factorizes the current header, replacing dependent structurals by
    /// slacks until the kernel is nonsingular.
    fn refactor(&mut self) -> Result<()> {
        let a = self.model.matrix();
        for _ in 0..=self.m {
            match BasisFactor::new(a, self.n, &self.header) {
                Ok(f) => {
                    self.factor = Some(f);
                    return Ok(());
                }
                Err(s) => {
                    for (&pos, &row) in s.dependent_positions.iter().zip(&s.replacement_rows) {
                        let out = self.header[pos];
                        debug!("singular basis: column {out} replaced by slack of row {row}");
                        self.status[out] = VarStatus::resting(self.lo[out], self.hi[out]);
                        self.x[out] = self.nonbasic_value(out);
                        let slack = self.n + row;
                        self.header[pos] = slack;
                        self.status[slack] = VarStatus::Basic;
                    }
                }
            }
        }
        Err(Error::NumericalFailure("basis repair did not converge".into()))
    }

    fn compute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        let a = self.model.matrix();
        for k in 0..self.n + self.m {
            if self.status[k] == VarStatus::Basic {
                continue;
            }
            let v = self.x[k];
            if v == 0.0 {
                continue;
            }
            if k < self.n {
                a.col_axpy(k, -v, &mut rhs);
            } else {
                rhs[k - self.n] += v;
            }
        }
        let xb = self.factor().ftran(a, &rhs);
        for (pos, &k) in self.header.iter().enumerate() {
            self.x[k] = xb[pos];
        }
    }

    fn refresh(&mut self) -> Result<()> {
        self.refactor()?;
        self.compute_basic_values();
        Ok(())
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let tol = self.opts.primal_tol;
        let x = self.x[k];
        if x < self.lo[k] - tol {
            self.lo[k] - x
        } else if x > self.hi[k] + tol {
            x - self.hi[k]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.header.iter().all(|&k| self.infeasibility(k) == 0.0)
    }

    fn basic_costs(&self, phase: Phase) -> Vec<f64> {
        self.header
            .iter()
            .map(|&k| match phase {
                Phase::Two => self.cost[k],
                Phase::One => {
                    let tol = self.opts.primal_tol;
                    if self.x[k] < self.lo[k] - tol {
                        -1.0
                    } else if self.x[k] > self.hi[k] + tol {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        self.factor().btran(self.model.matrix(), &self.basic_costs(phase))
    }

    fn reduced_cost(&self, k: usize, y: &[f64], phase: Phase) -> f64 {
        let c = if phase == Phase::Two { self.cost[k] } else { 0.0 };
        c - self.dot_col(k, y)
    }

    fn record_basis(&mut self) {
        if self.opts.record_bases {
            self.visited.push(self.status.iter().map(|s| *s as u8).collect());
        }
    }

    fn note_step(&mut self, step: f64) {
        self.iterations += 1;
        if step.abs() <= 1e-12 {
            self.degenerate_run += 1;
            if !self.bland && self.degenerate_run >= self.opts.bland_after {
                debug!("{} degenerate pivots, switching to Bland's rule", self.degenerate_run);
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
    }

    fn maybe_refactor(&mut self) -> Result<()> {
        if self.factor().num_updates() >= self.opts.refactor_interval {
            self.refresh()?;
        }
        Ok(())
    }

    /// Replaces header position `pos` by `q` moving by `delta` along
    /// `w = B^{-1} a_q`; the leaving variable is set to `leave_value`.
    fn pivot(&mut self, pos: usize, q: usize, delta: f64, w: &[f64], leave_status: VarStatus) {
        for (h, &k) in self.header.iter().enumerate() {
            if w[h] != 0.0 {
                self.x[k] -= w[h] * delta;
            }
        }
        self.x[q] += delta;
        let out = self.header[pos];
        self.status[out] = leave_status;
        self.x[out] = match leave_status {
            VarStatus::AtLower => self.lo[out],
            VarStatus::AtUpper => self.hi[out],
            _ => 0.0,
        };
        self.header[pos] = q;
        self.status[q] = VarStatus::Basic;
        self.factor.as_mut().unwrap().update(pos, w);
        self.record_basis();
    }

    /// Primal simplex. In phase one the objective is the sum of bound
    /// violations of basic variables; `Done` means feasible. In phase two
    /// `Done` means optimal.
    fn primal(&mut self, phase: Phase) -> Result<Outcome> {
        let ptol = self.opts.primal_tol;
        let dtol = self.opts.dual_tol;
        let pivtol = self.opts.pivot_tol;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(Outcome::IterationLimit);
            }
            self.maybe_refactor()?;
            if phase == Phase::One && self.primal_feasible() {
                return Ok(Outcome::Done);
            }
            let y = self.duals(phase);

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for k in 0..self.n + self.m {
                let st = self.status[k];
                if st == VarStatus::Basic || self.is_fixed(k) {
                    continue;
                }
                let d = self.reduced_cost(k, &y, phase);
                let score = match st {
                    VarStatus::AtLower if d < -dtol => -d,
                    VarStatus::AtUpper if d > dtol => d,
                    VarStatus::Free if d.abs() > dtol => d.abs(),
                    _ => continue,
                };
                if self.bland {
                    entering = Some((k, d));
                    break;
                }
                if score > best {
                    best = score;
                    entering = Some((k, d));
                }
            }
            let Some((q, dq)) = entering else {
                if phase == Phase::One {
                    self.phase_one_duals = Some(y);
                    return Ok(Outcome::Infeasible);
                }
                return Ok(Outcome::Done);
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let w = self.factor().ftran(self.model.matrix(), &self.column_dense(q));

            // Ratio test. Basic variable at position h moves at rate -dir*w[h].
            let limit_of = |h: usize, relax: f64| -> Option<f64> {
                let rate = -dir * w[h];
                if rate.abs() <= pivtol {
                    return None;
                }
                let k = self.header[h];
                let (x, lo, hi) = (self.x[k], self.lo[k], self.hi[k]);
                if rate < 0.0 {
                    let bound = if phase == Phase::One && x > hi + ptol {
                        hi
                    } else if phase == Phase::One && x < lo - ptol {
                        return None;
                    } else {
                        lo
                    };
                    if bound.is_finite() {
                        Some(((x - bound + relax) / -rate).max(0.0))
                    } else {
                        None
                    }
                } else {
                    let bound = if phase == Phase::One && x < lo - ptol {
                        lo
                    } else if phase == Phase::One && x > hi + ptol {
                        return None;
                    } else {
                        hi
                    };
                    if bound.is_finite() {
                        Some(((bound - x + relax) / rate).max(0.0))
                    } else {
                        None
                    }
                }
            };
            let own = if dir > 0.0 { self.hi[q] - self.x[q] } else { self.x[q] - self.lo[q] };

            let mut leave: Option<(usize, f64)> = None;
            if self.bland {
                for h in 0..self.m {
                    if let Some(t) = limit_of(h, 0.0) {
                        let better = match leave {
                            None => true,
                            Some((hb, tb)) => {
                                t < tb - 1e-12 || (t <= tb + 1e-12 && self.header[h] < self.header[hb])
                            }
                        };
                        if better {
                            leave = Some((h, t));
                        }
                    }
                }
            } else {
                let mut bound = f64::INFINITY;
                for h in 0..self.m {
                    if let Some(t) = limit_of(h, ptol) {
                        bound = bound.min(t);
                    }
                }
                if bound.is_finite() {
                    let mut best_piv = 0.0;
                    for h in 0..self.m {
                        if let Some(t) = limit_of(h, 0.0) {
                            if t <= bound && w[h].abs() > best_piv {
                                best_piv = w[h].abs();
                                leave = Some((h, t));
                            }
                        }
                    }
                }
            }

            match leave {
                Some((_, t)) if own <= t => self.bound_flip(q, dir, own, &w),
                None if own.is_finite() => self.bound_flip(q, dir, own, &w),
                None => {
                    if phase == Phase::One {
                        return Err(Error::NumericalFailure(
                            "unbounded ray while minimizing infeasibility".into(),
                        ));
                    }
                    return Ok(Outcome::Unbounded);
                }
                Some((h, t)) => {
                    let k = self.header[h];
                    let rate = -dir * w[h];
                    let leave_status = if rate < 0.0 {
                        if phase == Phase::One && self.x[k] > self.hi[k] + ptol {
                            VarStatus::AtUpper
                        } else {
                            VarStatus::AtLower
                        }
                    } else if phase == Phase::One && self.x[k] < self.lo[k] - ptol {
                        VarStatus::AtLower
                    } else {
                        VarStatus::AtUpper
                    };
                    let leave_status = self.normalized(k, leave_status);
                    trace!("primal pivot: {q} enters, {k} leaves, step {t:e}");
                    self.pivot(h, q, dir * t, &w, leave_status);
                    self.note_step(t);
                }
            }
        }
    }

    fn bound_flip(&mut self, q: usize, dir: f64, step: f64, w: &[f64]) {
        for (h, &k) in self.header.iter().enumerate() {
            if w[h] != 0.0 {
                self.x[k] -= w[h] * dir * step;
            }
        }
        self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
        self.x[q] = self.nonbasic_value(q);
        self.record_basis();
        self.note_step(step);
    }

    /// Moves boxed nonbasics to the bound matching their reduced-cost sign.
    /// Returns false if some nonbasic cannot be made dual feasible.
    fn make_dual_feasible(&mut self) -> bool {
        let y = self.duals(Phase::Two);
        let dtol = self.opts.dual_tol;
        let mut flipped = false;
        let mut feasible = true;
        for k in 0..self.n + self.m {
            let st = self.status[k];
            if st == VarStatus::Basic || self.is_fixed(k) {
                continue;
            }
            let d = self.reduced_cost(k, &y, Phase::Two);
            let target = match st {
                VarStatus::AtLower if d < -dtol => VarStatus::AtUpper,
                VarStatus::AtUpper if d > dtol => VarStatus::AtLower,
                VarStatus::Free if d.abs() > dtol => {
                    feasible = false;
                    break;
                }
                _ => continue,
            };
            let bound = if target == VarStatus::AtUpper { self.hi[k] } else { self.lo[k] };
            if !bound.is_finite() {
                feasible = false;
                break;
            }
            self.status[k] = target;
            self.x[k] = bound;
            flipped = true;
        }
        if flipped {
            self.compute_basic_values();
        }
        feasible
    }

    /// Bounded dual simplex from a dual feasible basis. `Done` means the
    /// basis became primal feasible.
    fn dual(&mut self) -> Result<Outcome> {
        let dtol = self.opts.dual_tol;
        let pivtol = self.opts.pivot_tol;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(Outcome::IterationLimit);
            }
            self.maybe_refactor()?;

            let mut leaving: Option<usize> = None;
            let mut worst = 0.0;
            for h in 0..self.m {
                let inf = self.infeasibility(self.header[h]);
                if inf > 0.0 {
                    if self.bland {
                        if leaving.is_none_or(|l| self.header[h] < self.header[l]) {
                            leaving = Some(h);
                        }
                    } else if inf > worst {
                        worst = inf;
                        leaving = Some(h);
                    }
                }
            }
            let Some(p) = leaving else {
                return Ok(Outcome::Done);
            };
            let b = self.header[p];
            let to_lower = self.x[b] < self.lo[b];
            let target = if to_lower { self.lo[b] } else { self.hi[b] };
            let sgn = if to_lower { 1.0 } else { -1.0 };

            let mut e = vec![0.0; self.m];
            e[p] = 1.0;
            let rho = self.factor().btran(self.model.matrix(), &e);
            let y = self.duals(Phase::Two);

            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for k in 0..self.n + self.m {
                let st = self.status[k];
                if st == VarStatus::Basic || self.is_fixed(k) {
                    continue;
                }
                let alpha = self.dot_col(k, &rho);
                if alpha.abs() <= pivtol {
                    continue;
                }
                let d = self.reduced_cost(k, &y, Phase::Two);
                let slack = match st {
                    VarStatus::AtLower if sgn * alpha < 0.0 => d,
                    VarStatus::AtUpper if sgn * alpha > 0.0 => -d,
                    VarStatus::Free => d.abs(),
                    _ => continue,
                };
                cands.push((k, alpha, slack));
            }
            if cands.is_empty() {
                return Ok(Outcome::Infeasible);
            }
            let chosen = if self.bland {
                let mut best: Option<(usize, f64)> = None;
                for &(k, alpha, s) in &cands {
                    let r = s.max(0.0) / alpha.abs();
                    if best.is_none_or(|(_, br)| r < br - 1e-12) {
                        best = Some((k, r));
                    }
                }
                best.unwrap().0
            } else {
                let bound = cands
                    .iter()
                    .map(|&(_, a, s)| (s.max(0.0) + dtol) / a.abs())
                    .fold(f64::INFINITY, f64::min);
                let mut best = (cands[0].0, 0.0);
                for &(k, alpha, s) in &cands {
                    if s.max(0.0) / alpha.abs() <= bound && alpha.abs() > best.1 {
                        best = (k, alpha.abs());
                    }
                }
                best.0
            };
            let q = chosen;
            let w = self.factor().ftran(self.model.matrix(), &self.column_dense(q));
            if w[p].abs() <= pivtol {
                // FTRAN and BTRAN disagree; refactorize and retry.
                self.refresh()?;
                continue;
            }
            let delta = (self.x[b] - target) / w[p];
            let leave_status = if to_lower { VarStatus::AtLower } else { VarStatus::AtUpper };
            trace!("dual pivot: {q} enters, {b} leaves");
            self.pivot(p, q, delta, &w, leave_status);
            self.note_step(delta);
        }
    }

    fn dual_infeasibility(&self, y: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n + self.m {
            let st = self.status[k];
            if st == VarStatus::Basic || self.is_fixed(k) {
                continue;
            }
            let d = self.reduced_cost(k, y, Phase::Two);
            let v = match st {
                VarStatus::AtLower => (-d).max(0.0),
                VarStatus::AtUpper => d.max(0.0),
                _ => d.abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    fn run(&mut self) -> Result<LpStatus> {
        self.record_basis();
        for round in 0..6 {
            self.refresh()?;
            if !self.primal_feasible() {
                if self.make_dual_feasible() && !self.primal_feasible() {
                    match self.dual()? {
                        Outcome::IterationLimit => return Ok(LpStatus::IterationLimit),
                        Outcome::Done | Outcome::Infeasible | Outcome::Unbounded => {}
                    }
                }
                if !self.primal_feasible() {
                    match self.primal(Phase::One)? {
                        Outcome::Done => {}
                        Outcome::Infeasible => return Ok(LpStatus::Infeasible),
                        Outcome::IterationLimit => return Ok(LpStatus::IterationLimit),
                        Outcome::Unbounded => unreachable!(),
                    }
                }
            }
            match self.primal(Phase::Two)? {
                Outcome::Done => {}
                Outcome::Unbounded => return Ok(LpStatus::Unbounded),
                Outcome::IterationLimit => return Ok(LpStatus::IterationLimit),
                Outcome::Infeasible => unreachable!(),
            }
            self.refresh()?;
            let y = self.duals(Phase::Two);
            if self.primal_feasible() && self.dual_infeasibility(&y) <= self.opts.dual_tol {
                return Ok(LpStatus::Optimal);
            }
            debug!("optimality check failed after refactorization (round {round}); continuing");
        }
        Err(Error::NumericalFailure("simplex did not stabilize".into()))
    }

    fn finish(mut self, status: LpStatus) -> (LpSolution, Basis) {
        if self.factor.is_none() || self.factor().num_updates() > 0 {
            if self.refresh().is_err() {
                debug!("final refactorization failed; reporting unrefined values");
            }
        }
        let (n, m) = (self.n, self.m);
        let a = self.model.matrix();
        let x: Vec<f64> = self.x[..n].to_vec();
        let row_activity = a.matvec(&x);
        let y = if status == LpStatus::Infeasible {
            self.phase_one_duals.clone().unwrap_or_else(|| vec![0.0; m])
        } else {
            self.duals(Phase::Two)
        };
        let reduced_costs: Vec<f64> = (0..n).map(|j| self.cost[j] - a.col_dot(j, &y)).collect();
        let objective = self.model.objective(&x);

        let tiny = 1e-12;
        let mut dual_objective = 0.0;
        let mut push = |mult: f64, lo: f64, hi: f64| {
            if mult > tiny {
                dual_objective += if lo.is_finite() { mult * lo } else { f64::NEG_INFINITY };
            } else if mult < -tiny {
                dual_objective += if hi.is_finite() { mult * hi } else { f64::NEG_INFINITY };
            }
        };
        for i in 0..m {
            push(y[i], self.lo[n + i], self.hi[n + i]);
        }
        for j in 0..n {
            push(reduced_costs[j], self.lo[j], self.hi[j]);
        }

        let primal_infeasibility = (0..n + m)
            .map(|k| {
                let v = if k < n { x[k] } else { row_activity[k - n] };
                (self.lo[k] - v).max(v - self.hi[k]).max(0.0)
            })
            .fold(0.0, f64::max);
        let dual_infeasibility = if status == LpStatus::Infeasible { f64::NAN } else { self.dual_infeasibility(&y) };

        let basis = Basis {
            col_status: self.status[..n].to_vec(),
            row_status: self.status[n..].to_vec(),
        };
        let sol = LpSolution {
            status,
            x,
            row_activity,
            duals: y,
            reduced_costs,
            objective,
            dual_objective,
            primal_infeasibility,
            dual_infeasibility,
            iterations: self.iterations,
            visited_bases: std::mem::take(&mut self.visited),
        };
        (sol, basis)
    }
}
