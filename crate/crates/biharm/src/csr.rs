//! Compressed sparse row matrices.

use crate::scalar::Real;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsrError {
    #[error("dimension mismatch: matrix is {rows}x{cols}, vector has {len}")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
    #[error("index {0} out of range for restriction")]
    IndexOutOfRange(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sparse matrix in CSR form. Columns are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Accumulates (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Self {
        triplets.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut cur_row = 0usize;
        for (r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            while cur_row < r {
                row_ptr.push(col_idx.len());
                cur_row += 1;
            }
            if col_idx.len() > row_ptr[cur_row] && *col_idx.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
            }
        }
        while cur_row < n_rows {
            row_ptr.push(col_idx.len());
            cur_row += 1;
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// y = A x
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>, CsrError> {
        if x.len() != self.n_cols {
            return Err(CsrError::DimensionMismatch {
                rows: self.n_rows,
                cols: self.n_cols,
                len: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.n_rows];
        for r in 0..self.n_rows {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.values[k];
            }
        }
        T::zero()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// Extracts the submatrix with the given (reindexed) rows and columns.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Result<CsrMatrix<T>, CsrError> {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            if old >= self.n_cols {
                return Err(CsrError::IndexOutOfRange(old));
            }
            col_map[old] = new;
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            if r >= self.n_rows {
                return Err(CsrError::IndexOutOfRange(r));
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = col_map[self.col_idx[k]];
                if c != usize::MAX {
                    col_idx.push(c);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { n_rows: rows.len(), n_cols: cols.len(), row_ptr, col_idx, values })
    }

    /// Reorders the rows: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> CsrMatrix<T> {
        debug_assert_eq!(perm.len(), self.n_rows);
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for &src in perm {
            for k in self.row_ptr[src]..self.row_ptr[src + 1] {
                col_idx.push(self.col_idx[k]);
                values.push(self.values[k]);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows: self.n_rows, n_cols: self.n_cols, row_ptr, col_idx, values }
    }

    /// MatrixMarket coordinate export (1-based indices).
    pub fn write_matrix_market(&self, path: &Path) -> Result<(), CsrError> {
        let mut out = String::new();
        writeln!(out, "%%MatrixMarket matrix coordinate real general").unwrap();
        writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz()).unwrap();
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(out, "{} {} {:.17e}", r + 1, self.col_idx[k] + 1, self.values[k]).unwrap();
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Checks the CSR structural invariants.
    pub fn is_well_formed(&self) -> bool {
        if self.row_ptr.len() != self.n_rows + 1 || *self.row_ptr.last().unwrap() != self.nnz() {
            return false;
        }
        for r in 0..self.n_rows {
            if self.row_ptr[r] > self.row_ptr[r + 1] {
                return false;
            }
            let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return false;
                }
            }
            if row.iter().any(|&c| c >= self.n_cols) {
                return false;
            }
        }
        true
    }
}
