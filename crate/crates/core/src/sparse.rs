//! Column-compressed sparse matrix.
//!
//! Every design matrix, difference operator and LP constraint block in the
//! crate is stored in this form. Row indices inside a column are strictly
//! increasing and explicit zeros are never stored.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// An `n_rows x 0` matrix, ready for [`push_column`](Self::push_column).
    pub fn with_rows(n_rows: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols: 0,
            col_ptr: vec![0],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            col_ptr: vec![0; n_cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from raw CSC arrays, validating every structural invariant.
    pub fn from_csc(
        n_rows: usize,
        n_cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = SparseMatrix {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_cols];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            per_col[j].push((i, v));
        }
        let mut out = SparseMatrix::with_rows(n_rows);
        for mut col in per_col {
            col.sort_by_key(|&(i, _)| i);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for (i, v) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += v,
                    _ => merged.push((i, v)),
                }
            }
            out.push_column(merged.into_iter().filter(|&(_, v)| v != 0.0))?;
        }
        Ok(out)
    }

    /// Builds from a row-major dense matrix.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged dense rows".into()));
        }
        let mut out = SparseMatrix::with_rows(n_rows);
        for j in 0..n_cols {
            out.push_column((0..n_rows).map(|i| (i, rows[i][j])).filter(|&(_, v)| v != 0.0))?;
        }
        Ok(out)
    }

    /// Builds from dense columns (each of length `n_rows`).
    pub fn from_dense_cols(n_rows: usize, cols: &[Vec<f64>]) -> Result<Self> {
        let mut out = SparseMatrix::with_rows(n_rows);
        for c in cols {
            if c.len() != n_rows {
                return Err(Error::DimensionMismatch("dense column length".into()));
            }
            out.push_column(c.iter().copied().enumerate().filter(|&(_, v)| v != 0.0))?;
        }
        Ok(out)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[a..b], &self.values[a..b])
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.col(j);
        match idx.binary_search(&i) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    /// `X[:, j] . v`
    #[inline]
    pub fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        let (idx, val) = self.col(j);
        idx.iter().zip(val).map(|(&i, &x)| x * v[i]).sum()
    }

    /// `out += a * X[:, j]`
    #[inline]
    pub fn col_axpy(&self, j: usize, a: f64, out: &mut [f64]) {
        let (idx, val) = self.col(j);
        for (&i, &x) in idx.iter().zip(val) {
            out[i] += a * x;
        }
    }

    pub fn col_norm_sq(&self, j: usize) -> f64 {
        self.col(j).1.iter().map(|x| x * x).sum()
    }

    /// `X x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut out = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.col_axpy(j, xj, &mut out);
            }
        }
        out
    }

    /// `X^T v`
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_rows);
        (0..self.n_cols).map(|j| self.col_dot(j, v)).collect()
    }

    /// Appends a column given as `(row, value)` pairs with strictly
    /// increasing rows. Zero values are skipped.
    pub fn push_column<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let start = self.row_idx.len();
        let mut prev: Option<usize> = None;
        for (i, v) in entries {
            if i >= self.n_rows || prev.is_some_and(|p| p >= i) {
                self.row_idx.truncate(start);
                self.values.truncate(start);
                return Err(Error::DimensionMismatch(format!(
                    "column entry row {i} out of order or outside {} rows",
                    self.n_rows
                )));
            }
            if !v.is_finite() {
                self.row_idx.truncate(start);
                self.values.truncate(start);
                return Err(Error::NonFinite("sparse column"));
            }
            prev = Some(i);
            if v != 0.0 {
                self.row_idx.push(i);
                self.values.push(v);
            }
        }
        self.col_ptr.push(self.row_idx.len());
        self.n_cols += 1;
        Ok(())
    }

    /// Appends rows below the existing ones. Each row is a list of
    /// `(column, value)` pairs in any order.
    pub fn append_rows(&mut self, rows: &[Vec<(usize, f64)>]) -> Result<()> {
        let mut extra: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_cols];
        for (k, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                if j >= self.n_cols {
                    return Err(Error::DimensionMismatch(format!(
                        "row entry column {j} outside {} columns",
                        self.n_cols
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite("sparse row"));
                }
                if v != 0.0 {
                    extra[j].push((self.n_rows + k, v));
                }
            }
        }
        let total: usize = extra.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(self.n_cols + 1);
        let mut row_idx = Vec::with_capacity(self.nnz() + total);
        let mut values = Vec::with_capacity(self.nnz() + total);
        col_ptr.push(0);
        for (j, ex) in extra.iter_mut().enumerate() {
            let (idx, val) = self.col(j);
            row_idx.extend_from_slice(idx);
            values.extend_from_slice(val);
            ex.sort_by_key(|&(i, _)| i);
            for w in ex.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::DimensionMismatch(format!(
                        "duplicate entry for column {j} in appended row"
                    )));
                }
            }
            for &(i, v) in ex.iter() {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.values = values;
        self.n_rows += rows.len();
        Ok(())
    }

    /// Submatrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> SparseMatrix {
        let mut out = SparseMatrix::with_rows(self.n_rows);
        for &j in cols {
            let (idx, val) = self.col(j);
            out.row_idx.extend_from_slice(idx);
            out.values.extend_from_slice(val);
            out.col_ptr.push(out.row_idx.len());
            out.n_cols += 1;
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_rows + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..self.n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for j in 0..self.n_cols {
            let (idx, val) = self.col(j);
            for (&i, &v) in idx.iter().zip(val) {
                row_idx[next[i]] = j;
                values[next[i]] = v;
                next[i] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    /// Row-major dense copy. Intended for small matrices and tests.
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for j in 0..self.n_cols {
            let (idx, val) = self.col(j);
            for (&i, &v) in idx.iter().zip(val) {
                out[i][j] = v;
            }
        }
        out
    }

    /// Dense copy of column `j`.
    pub fn dense_col(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        self.col_axpy(j, 1.0, &mut out);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.col_ptr.len() != self.n_cols + 1
            || self.col_ptr[0] != 0
            || *self.col_ptr.last().unwrap() != self.row_idx.len()
            || self.row_idx.len() != self.values.len()
        {
            return Err(Error::DimensionMismatch("inconsistent CSC arrays".into()));
        }
        for j in 0..self.n_cols {
            if self.col_ptr[j] > self.col_ptr[j + 1] {
                return Err(Error::DimensionMismatch("column pointers decrease".into()));
            }
            let (idx, val) = self.col(j);
            if idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= self.n_rows) {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} indices unsorted or out of range"
                )));
            }
            if val.iter().any(|&v| v == 0.0) {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} stores an explicit zero"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseMatrix {
        SparseMatrix::from_dense_rows(&[
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 0.0],
            vec![4.0, 0.0, 5.0],
        ])
        .unwrap()
    }

    #[test]
    fn products_match_dense() {
        let a = small();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0, 9.0]);
        assert_eq!(a.t_matvec(&[1.0, 2.0, 3.0]), vec![13.0, 6.0, 17.0]);
        assert_eq!(a.get(2, 2), 5.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, -1.0), (1, 1, 2.0), (1, 1, 1.0)])
            .unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(1, 1), 3.0);
        a.validate().unwrap();
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn append_rows_keeps_columns_sorted() {
        let mut a = small();
        a.append_rows(&[vec![(2, 7.0), (0, -1.0)], vec![(1, 0.0)]]).unwrap();
        assert_eq!(a.n_rows(), 5);
        a.validate().unwrap();
        assert_eq!(a.get(3, 2), 7.0);
        assert_eq!(a.get(3, 0), -1.0);
        assert_eq!(a.col_nnz(1), 1);
    }

    #[test]
    fn push_column_rejects_unsorted() {
        let mut a = SparseMatrix::with_rows(3);
        assert!(a.push_column([(1, 1.0), (0, 1.0)]).is_err());
        assert_eq!(a.n_cols(), 0);
        a.push_column([(0, 1.0), (2, 0.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn transpose_round_trip() {
        let a = small();
        let t = a.transpose();
        t.validate().unwrap();
        assert_eq!(t.transpose(), a);
        assert_eq!(t.get(0, 2), 4.0);
    }

    #[test]
    fn validate_catches_explicit_zero() {
        assert!(SparseMatrix::from_csc(2, 1, vec![0, 1], vec![0], vec![0.0]).is_err());
        assert!(SparseMatrix::from_csc(2, 1, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
    }
}
