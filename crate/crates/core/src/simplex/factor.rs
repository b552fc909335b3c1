//! Basis factorization.
//!
//! The basis matrix has columns of two kinds: structural columns of `A`, and
//! logical columns `-e_i` for rows whose slack is basic. Logical columns are
//! eliminated symbolically, which leaves a square kernel made of the rows
//! without a basic slack and the basic structural columns. Row and column
//! singletons of the kernel are peeled off first; what remains is handed to
//! an LU kernel. Pivots after the factorization are applied as product-form
//! eta updates.

use super::lu::{Lu, SINGULAR_ABS, SINGULAR_REL};
use crate::sparse::SparseMatrix;

/// What a header position holds, as seen by the base factorization.
#[derive(Debug, Clone, Copy)]
enum Slot {
    /// Structural column `col`.
    Structural { col: usize },
    /// Logical column of row `row`.
    Logical { row: usize },
}

#[derive(Debug)]
struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries of the transformed entering column.
    entries: Vec<(usize, f64)>,
}

/// Positions that made the kernel singular, reported so the caller can
/// swap in slacks and refactorize.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    /// Header positions holding structurals that must leave the basis.
    pub dependent_positions: Vec<usize>,
    /// Rows whose slack should take their place.
    pub replacement_rows: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct BasisFactor {
    m: usize,
    slots: Vec<Slot>,
    /// Kernel row index of each constraint row, `usize::MAX` when the row's
    /// slack is basic.
    kernel_row: Vec<usize>,
    kernel_rows: Vec<usize>,
    /// Header position of each kernel column.
    kernel_pos: Vec<usize>,
    /// Entries of each kernel column, indexed by kernel row.
    kcols: Vec<Vec<(usize, f64)>>,
    k: usize,
    /// Row-singleton pivots `(row, col, value)` in elimination order; they
    /// form a lower-triangular leading block.
    front: Vec<(usize, usize, f64)>,
    /// Column-singleton pivots in elimination order; they form a triangular
    /// trailing block.
    back: Vec<(usize, usize, f64)>,
    /// Kernel rows and columns left after singleton elimination.
    bump_rows: Vec<usize>,
    bump_cols: Vec<usize>,
    lu: Lu,
    etas: Vec<Eta>,
}

fn pivot_ok(v: f64, col: &[(usize, f64)]) -> bool {
    let col_max = col.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
    v.abs() > SINGULAR_ABS.max(SINGULAR_REL * col_max)
}

impl BasisFactor {
    /// Factorizes the basis whose header lists variable indices, where
    /// indices `< n_struct` are structural columns of `a` and the rest are
    /// slacks of row `idx - n_struct`.
    pub(crate) fn new(a: &SparseMatrix, n_struct: usize, header: &[usize]) -> Result<Self, Singular> {
        let m = a.n_rows();
        debug_assert_eq!(header.len(), m);
        let mut kernel_row = vec![0usize; m];
        let mut slots = Vec::with_capacity(m);
        let mut kernel_pos = Vec::new();
        for (pos, &var) in header.iter().enumerate() {
            if var >= n_struct {
                let row = var - n_struct;
                kernel_row[row] = usize::MAX;
                slots.push(Slot::Logical { row });
            } else {
                slots.push(Slot::Structural { col: var });
                kernel_pos.push(pos);
            }
        }
        let mut kernel_rows = Vec::with_capacity(kernel_pos.len());
        for (i, kr) in kernel_row.iter_mut().enumerate() {
            if *kr != usize::MAX {
                *kr = kernel_rows.len();
                kernel_rows.push(i);
            }
        }
        let k = kernel_pos.len();
        assert_eq!(k, kernel_rows.len(), "basis header must contain distinct slacks");

        let kcols: Vec<Vec<(usize, f64)>> = kernel_pos
            .iter()
            .map(|&pos| {
                let Slot::Structural { col } = slots[pos] else { unreachable!() };
                let (idx, val) = a.col(col);
                idx.iter()
                    .zip(val)
                    .filter(|&(&i, &v)| kernel_row[i] != usize::MAX && v != 0.0)
                    .map(|(&i, &v)| (kernel_row[i], v))
                    .collect()
            })
            .collect();
        let mut krows: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (c, col) in kcols.iter().enumerate() {
            for &(r, _) in col {
                krows[r].push(c);
            }
        }

        let mut row_live = vec![true; k];
        let mut col_live = vec![true; k];
        let mut front = Vec::new();
        let mut back = Vec::new();

        // Row singletons.
        let mut row_count: Vec<usize> = krows.iter().map(|r| r.len()).collect();
        let mut queue: Vec<usize> = (0..k).filter(|&r| row_count[r] == 1).collect();
        while let Some(r) = queue.pop() {
            if !row_live[r] || row_count[r] != 1 {
                continue;
            }
            let Some(&c) = krows[r].iter().find(|&&c| col_live[c]) else { continue };
            let v = kcols[c].iter().find(|e| e.0 == r).map_or(0.0, |e| e.1);
            if !pivot_ok(v, &kcols[c]) {
                continue;
            }
            row_live[r] = false;
            col_live[c] = false;
            front.push((r, c, v));
            for &(r2, _) in &kcols[c] {
                if row_live[r2] {
                    row_count[r2] -= 1;
                    if row_count[r2] == 1 {
                        queue.push(r2);
                    }
                }
            }
        }

        // Column singletons among the remaining rows.
        let mut col_count: Vec<usize> = (0..k)
            .map(|c| if col_live[c] { kcols[c].iter().filter(|e| row_live[e.0]).count() } else { 0 })
            .collect();
        let mut queue: Vec<usize> = (0..k).filter(|&c| col_live[c] && col_count[c] == 1).collect();
        while let Some(c) = queue.pop() {
            if !col_live[c] || col_count[c] != 1 {
                continue;
            }
            let Some(&(r, v)) = kcols[c].iter().find(|e| row_live[e.0]) else { continue };
            if !pivot_ok(v, &kcols[c]) {
                continue;
            }
            row_live[r] = false;
            col_live[c] = false;
            back.push((r, c, v));
            for &c2 in &krows[r] {
                if col_live[c2] {
                    col_count[c2] -= 1;
                    if col_count[c2] == 1 {
                        queue.push(c2);
                    }
                }
            }
        }

        let bump_rows: Vec<usize> = (0..k).filter(|&r| row_live[r]).collect();
        let bump_cols: Vec<usize> = (0..k).filter(|&c| col_live[c]).collect();
        let kb = bump_rows.len();
        debug_assert_eq!(kb, bump_cols.len());
        let mut local = vec![usize::MAX; k];
        for (t, &r) in bump_rows.iter().enumerate() {
            local[r] = t;
        }
        let bump: Vec<Vec<(usize, f64)>> = bump_cols
            .iter()
            .map(|&c| kcols[c].iter().filter(|e| local[e.0] != usize::MAX).map(|&(r, v)| (local[r], v)).collect())
            .collect();
        let lu = Lu::new(kb, bump).map_err(|e| Singular {
            dependent_positions: vec![kernel_pos[bump_cols[e.col]]],
            replacement_rows: vec![kernel_rows[bump_rows[e.row]]],
        })?;

        Ok(BasisFactor {
            m,
            slots,
            kernel_row,
            kernel_rows,
            kernel_pos,
            kcols,
            k,
            front,
            back,
            bump_rows,
            bump_cols,
            lu,
            etas: Vec::new(),
        })
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    fn axpy_col(&self, c: usize, z: f64, r: &mut [f64]) {
        if z != 0.0 {
            for &(i, v) in &self.kcols[c] {
                r[i] -= v * z;
            }
        }
    }

    fn dot_col(&self, c: usize, u: &[f64]) -> f64 {
        self.kcols[c].iter().map(|&(i, v)| v * u[i]).sum()
    }

    /// Solves `K z = b` in place (`b` indexed by kernel row on entry, by
    /// kernel column on exit).
    fn kernel_solve(&self, b: &mut [f64]) {
        let mut r = b.to_vec();
        let mut z = vec![0.0; self.k];
        for &(row, col, piv) in &self.front {
            z[col] = r[row] / piv;
            self.axpy_col(col, z[col], &mut r);
        }
        let rb: Vec<f64> = self.bump_rows.iter().map(|&row| r[row]).collect();
        let w = self.lu.solve(&rb);
        for (t, &col) in self.bump_cols.iter().enumerate() {
            z[col] = w[t];
            self.axpy_col(col, w[t], &mut r);
        }
        for &(row, col, piv) in self.back.iter().rev() {
            z[col] = r[row] / piv;
            self.axpy_col(col, z[col], &mut r);
        }
        b.copy_from_slice(&z);
    }

    /// Solves `K^T u = b` in place (`b` indexed by kernel column on entry, by
    /// kernel row on exit).
    fn kernel_solve_t(&self, b: &mut [f64]) {
        let mut u = vec![0.0; self.k];
        for &(row, col, piv) in &self.back {
            u[row] = (b[col] - self.dot_col(col, &u)) / piv;
        }
        let d: Vec<f64> = self.bump_cols.iter().map(|&col| b[col] - self.dot_col(col, &u)).collect();
        let w = self.lu.solve_t(&d);
        for (t, &row) in self.bump_rows.iter().enumerate() {
            u[row] = w[t];
        }
        for &(row, col, piv) in self.front.iter().rev() {
            u[row] = (b[col] - self.dot_col(col, &u)) / piv;
        }
        b.copy_from_slice(&u);
    }

    /// `B^{-1} rhs`, result indexed by header position.
    pub(crate) fn ftran(&self, a: &SparseMatrix, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        let mut zk: Vec<f64> = self.kernel_rows.iter().map(|&r| rhs[r]).collect();
        self.kernel_solve(&mut zk);
        let mut t = vec![0.0; self.m];
        for (kc, &pos) in self.kernel_pos.iter().enumerate() {
            out[pos] = zk[kc];
            if let Slot::Structural { col, .. } = self.slots[pos] {
                if zk[kc] != 0.0 {
                    a.col_axpy(col, zk[kc], &mut t);
                }
            }
        }
        for (pos, slot) in self.slots.iter().enumerate() {
            if let Slot::Logical { row } = *slot {
                out[pos] = t[row] - rhs[row];
            }
        }
        for eta in &self.etas {
            let xp = out[eta.pos] / eta.pivot;
            out[eta.pos] = xp;
            if xp != 0.0 {
                for &(i, w) in &eta.entries {
                    out[i] -= w * xp;
                }
            }
        }
        out
    }

    /// `B^{-T} c`, with `c` indexed by header position and the result by row.
    pub(crate) fn btran(&self, a: &SparseMatrix, c: &[f64]) -> Vec<f64> {
        let mut c = c.to_vec();
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.entries.iter().map(|&(i, w)| w * c[i]).sum();
            c[eta.pos] = (c[eta.pos] - s) / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        for (pos, slot) in self.slots.iter().enumerate() {
            if let Slot::Logical { row } = *slot {
                y[row] = -c[pos];
            }
        }
        let mut rhs = vec![0.0; self.k];
        for (kc, &pos) in self.kernel_pos.iter().enumerate() {
            let Slot::Structural { col, .. } = self.slots[pos] else { unreachable!() };
            let (idx, val) = a.col(col);
            let mut s = c[pos];
            for (&i, &v) in idx.iter().zip(val) {
                if self.kernel_row[i] == usize::MAX {
                    s -= v * y[i];
                }
            }
            rhs[kc] = s;
        }
        self.kernel_solve_t(&mut rhs);
        for (kr, &row) in self.kernel_rows.iter().enumerate() {
            y[row] = rhs[kr];
        }
        y
    }

    /// Records that header position `pos` was replaced by a column whose
    /// FTRAN image is `w`.
    pub(crate) fn update(&mut self, pos: usize, w: &[f64]) {
        let entries = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: w[pos],
            entries,
        });
    }
}
