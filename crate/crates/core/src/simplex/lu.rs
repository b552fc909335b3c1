//! Square LU kernels for the part of the basis left after singleton
//! elimination: dense partial pivoting for dense blocks, Markowitz threshold
//! pivoting for sparse ones. Both work in local indices and report a
//! singular column together with an unpivoted row to replace it.

use std::collections::BTreeSet;

pub(crate) const SINGULAR_REL: f64 = 1e-9;
pub(crate) const SINGULAR_ABS: f64 = 1e-12;

/// Relative magnitude a sparse pivot needs within its column.
const THRESHOLD: f64 = 0.1;
/// Columns examined per Markowitz search.
const SEARCH_COLS: usize = 4;

/// A singular column and the row whose slack should replace it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LocalSingular {
    pub col: usize,
    pub row: usize,
}

#[derive(Debug)]
pub(crate) enum Lu {
    Dense(DenseLu),
    Sparse(SparseLu),
}

impl Lu {
    /// Factorizes the `n x n` matrix given by columns of `(row, value)`.
    pub(crate) fn new(n: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<Self, LocalSingular> {
        let nnz: usize = cols.iter().map(|c| c.len()).sum();
        if n > 32 && nnz * 8 < n * n {
            SparseLu::new(n, cols).map(Lu::Sparse)
        } else {
            DenseLu::new(n, &cols).map(Lu::Dense)
        }
    }

    /// Solves `M z = b`; `b` by row, result by column.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Lu::Dense(d) => d.solve(b),
            Lu::Sparse(s) => s.solve(b),
        }
    }

    /// Solves `M^T u = d`; `d` by column, result by row.
    pub(crate) fn solve_t(&self, d: &[f64]) -> Vec<f64> {
        match self {
            Lu::Dense(x) => x.solve_t(d),
            Lu::Sparse(s) => s.solve_t(d),
        }
    }
}

/// `PM = LU`, column-major, unit lower triangle implicit.
#[derive(Debug)]
pub(crate) struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    /// Row `perm[i]` sits at LU row `i`.
    perm: Vec<usize>,
}

impl DenseLu {
    fn new(n: usize, cols: &[Vec<(usize, f64)>]) -> Result<Self, LocalSingular> {
        let mut lu = vec![0.0; n * n];
        for (c, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                lu[c * n + r] = v;
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for s in 0..n {
            let col = &lu[s * n..(s + 1) * n];
            let (mut best, mut best_val) = (s, 0.0f64);
            let mut col_max = 0.0f64;
            for (i, v) in col.iter().enumerate() {
                col_max = col_max.max(v.abs());
                if i >= s && v.abs() > best_val {
                    best_val = v.abs();
                    best = i;
                }
            }
            if best_val <= SINGULAR_ABS.max(SINGULAR_REL * col_max) {
                // The unpivoted row where this column is smallest disturbs
                // the rest of the matrix least when its slack takes over.
                let row = (s..n).min_by(|&x, &y| col[x].abs().total_cmp(&col[y].abs())).unwrap_or(s);
                return Err(LocalSingular { col: s, row: perm[row] });
            }
            if best != s {
                for c in 0..n {
                    lu.swap(c * n + s, c * n + best);
                }
                perm.swap(s, best);
            }
            let piv = lu[s * n + s];
            for i in s + 1..n {
                lu[s * n + i] /= piv;
            }
            for c in s + 1..n {
                let f = lu[c * n + s];
                if f != 0.0 {
                    let (left, right) = lu.split_at_mut(c * n);
                    let lcol = &left[s * n..s * n + n];
                    let ccol = &mut right[..n];
                    for i in s + 1..n {
                        ccol[i] -= f * lcol[i];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z: Vec<f64> = self.perm.iter().map(|&r| b[r]).collect();
        for c in 0..n {
            let zc = z[c];
            if zc != 0.0 {
                let col = &self.lu[c * n..(c + 1) * n];
                for i in c + 1..n {
                    z[i] -= col[i] * zc;
                }
            }
        }
        for c in (0..n).rev() {
            let col = &self.lu[c * n..(c + 1) * n];
            z[c] /= col[c];
            let zc = z[c];
            if zc != 0.0 {
                for i in 0..c {
                    z[i] -= col[i] * zc;
                }
            }
        }
        z
    }

    fn solve_t(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = d.to_vec();
        for c in 0..n {
            let col = &self.lu[c * n..(c + 1) * n];
            let s: f64 = (0..c).map(|i| col[i] * z[i]).sum();
            z[c] = (z[c] - s) / col[c];
        }
        for c in (0..n).rev() {
            let col = &self.lu[c * n..(c + 1) * n];
            let s: f64 = (c + 1..n).map(|i| col[i] * z[i]).sum();
            z[c] -= s;
        }
        let mut out = vec![0.0; n];
        for (i, &r) in self.perm.iter().enumerate() {
            out[r] = z[i];
        }
        out
    }
}

/// Right-looking sparse LU. Step `s` pivots on `(row, col)`; `l[s]` holds
/// the multipliers below the pivot and `u[s]` the rest of the pivot row.
#[derive(Debug)]
pub(crate) struct SparseLu {
    n: usize,
    pivots: Vec<(usize, usize, f64)>,
    l: Vec<Vec<(usize, f64)>>,
    u: Vec<Vec<(usize, f64)>>,
}

impl SparseLu {
    fn new(n: usize, mut cols: Vec<Vec<(usize, f64)>>) -> Result<Self, LocalSingular> {
        let scale: Vec<f64> = cols.iter().map(|c| c.iter().fold(0.0f64, |m, e| m.max(e.1.abs()))).collect();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                rows[i].push(j);
            }
        }
        let mut row_count: Vec<usize> = rows.iter().map(|r| r.len()).collect();
        let mut row_live = vec![true; n];
        let mut col_live = vec![true; n];
        let mut by_count: BTreeSet<(usize, usize)> = (0..n).map(|j| (cols[j].len(), j)).collect();
        let mut slot = vec![usize::MAX; n];

        let mut pivots = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for _ in 0..n {
            // Markowitz search over the sparsest columns.
            let mut best: Option<(usize, usize, usize, f64)> = None;
            for &(count, j) in by_count.iter().take(SEARCH_COLS) {
                let col_max = cols[j].iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
                if col_max <= SINGULAR_ABS.max(SINGULAR_REL * scale[j]) {
                    let row = (0..n)
                        .filter(|&i| row_live[i])
                        .min_by(|&x, &y| {
                            let vx = cols[j].iter().find(|e| e.0 == x).map_or(0.0, |e| e.1.abs());
                            let vy = cols[j].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1.abs());
                            vx.total_cmp(&vy).then(x.cmp(&y))
                        })
                        .expect("a live row remains");
                    return Err(LocalSingular { col: j, row });
                }
                for &(i, v) in &cols[j] {
                    if v.abs() < THRESHOLD * col_max {
                        continue;
                    }
                    let cost = (row_count[i] - 1) * (count - 1);
                    let better = match best {
                        None => true,
                        Some((bc, _, _, bv)) => cost < bc || (cost == bc && v.abs() > bv.abs()),
                    };
                    if better {
                        best = Some((cost, i, j, v));
                    }
                }
                if best.is_some_and(|b| b.0 == 0) {
                    break;
                }
            }
            let (_, r, c, p) = best.expect("a live column remains");

            by_count.remove(&(cols[c].len(), c));
            col_live[c] = false;
            let pivot_col = std::mem::take(&mut cols[c]);
            let mut lcol = Vec::with_capacity(pivot_col.len().saturating_sub(1));
            for &(i, v) in &pivot_col {
                row_count[i] -= 1;
                if i != r {
                    lcol.push((i, v / p));
                }
            }

            row_live[r] = false;
            let mut urow = Vec::new();
            let pivot_row = std::mem::take(&mut rows[r]);
            for &j in &pivot_row {
                if !col_live[j] {
                    continue;
                }
                let Some(k) = cols[j].iter().position(|e| e.0 == r) else { continue };
                by_count.remove(&(cols[j].len(), j));
                let (_, v) = cols[j].swap_remove(k);
                urow.push((j, v));
                for (t, e) in cols[j].iter().enumerate() {
                    slot[e.0] = t;
                }
                for &(i, li) in &lcol {
                    match slot[i] {
                        usize::MAX => {
                            cols[j].push((i, -li * v));
                            rows[i].push(j);
                            row_count[i] += 1;
                        }
                        t => cols[j][t].1 -= li * v,
                    }
                }
                for e in &cols[j] {
                    slot[e.0] = usize::MAX;
                }
                by_count.insert((cols[j].len(), j));
            }
            pivots.push((r, c, p));
            l.push(lcol);
            u.push(urow);
        }
        Ok(SparseLu { n, pivots, l, u })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut b = b.to_vec();
        for (s, &(r, _, _)) in self.pivots.iter().enumerate() {
            let br = b[r];
            if br != 0.0 {
                for &(i, li) in &self.l[s] {
                    b[i] -= li * br;
                }
            }
        }
        let mut z = vec![0.0; self.n];
        for (s, &(r, c, p)) in self.pivots.iter().enumerate().rev() {
            let v = b[r] - self.u[s].iter().map(|&(j, uj)| uj * z[j]).sum::<f64>();
            z[c] = v / p;
        }
        z
    }

    fn solve_t(&self, d: &[f64]) -> Vec<f64> {
        let mut d = d.to_vec();
        let mut w = vec![0.0; self.n];
        for (s, &(r, c, p)) in self.pivots.iter().enumerate() {
            let wr = d[c] / p;
            w[r] = wr;
            if wr != 0.0 {
                for &(j, uj) in &self.u[s] {
                    d[j] -= uj * wr;
                }
            }
        }
        for (s, &(r, _, _)) in self.pivots.iter().enumerate().rev() {
            w[r] -= self.l[s].iter().map(|&(i, li)| li * w[i]).sum::<f64>();
        }
        w
    }
}
