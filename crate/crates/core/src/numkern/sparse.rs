//! Compressed sparse column storage for real matrices.

use nalgebra::DMatrix;

/// Real sparse matrix in compressed column form.
///
/// Row indices within each column are sorted and unique. Exact zeros
/// produced while summing duplicate triplets are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            col_ptr: vec![0; n_cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(
                r < n_rows && c < n_cols,
                "triplet ({r}, {c}) out of range for {n_rows}x{n_cols}"
            );
        }
        entries.sort_by_key(|e| (e.1, e.0));

        let mut col_ptr = vec![0usize; n_cols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for c in 0..n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Converts a dense matrix, keeping entries with `|a_ij| > 0`.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                let v = a[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
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

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates `(row, value)` over the stored entries of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    /// Iterates all stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |j| self.column(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        match self.row_idx[a..b].binary_search(&i) {
            Ok(k) => self.values[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.n_cols, self.n_rows, self.triplets().map(|(i, j, v)| (j, i, v)))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        if alpha == 0.0 {
            return Self::zeros(self.n_rows, self.n_cols);
        }
        out
    }

    /// Returns `self + alpha * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, alpha: f64) -> Self {
        assert_eq!(
            (self.n_rows, self.n_cols),
            (other.n_rows, other.n_cols),
            "dimension mismatch in sparse add"
        );
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.triplets()
                .chain(other.triplets().map(|(i, j, v)| (i, j, alpha * v))),
        )
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.column(j) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `self * X` for a dense right-hand side.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_cols);
        let mut y = DMatrix::zeros(self.n_rows, x.ncols());
        for k in 0..x.ncols() {
            for j in 0..self.n_cols {
                let xj = x[(j, k)];
                if xj == 0.0 {
                    continue;
                }
                for (i, v) in self.column(j) {
                    y[(i, k)] += v * xj;
                }
            }
        }
        y
    }

    /// `selfᵀ * X` without forming the transpose.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_rows);
        let mut y = DMatrix::zeros(self.n_cols, x.ncols());
        for k in 0..x.ncols() {
            for j in 0..self.n_cols {
                y[(j, k)] = self.column(j).map(|(i, v)| v * x[(i, k)]).sum();
            }
        }
        y
    }

    /// Congruence `Vᵀ A V`.
    pub fn congruence(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        v.transpose() * self.mul_dense(v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Numerical symmetry check with absolute tolerance `tol * max_abs`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.triplets()
            .all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * scale)
    }

    /// Whether the sparsity pattern equals the pattern of the transpose.
    pub fn is_structurally_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && self.triplets().all(|(i, j, _)| self.row_idx_in_col(j, i))
    }

    fn row_idx_in_col(&self, col: usize, row: usize) -> bool {
        let (a, b) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[a..b].binary_search(&row).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (1, 0, -1.0), (1, 1, 4.0)],
        );
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(1, 1), 4.0);
    }

    #[test]
    fn products_match_dense() {
        let a = SparseMatrix::from_triplets(3, 2, vec![(0, 0, 1.0), (2, 0, -2.0), (1, 1, 3.0), (2, 1, 0.5)]);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.25]);
        let d = a.to_dense();
        assert_eq!(a.mul_dense(&x), &d * &x);
        let y = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert_eq!(a.tr_mul_dense(&y), d.transpose() * &y);
        assert_eq!(a.transpose().to_dense(), d.transpose());
        assert_eq!(a.mul_vec(&[1.0, -1.0]), vec![1.0, -3.0, -2.5]);
    }

    #[test]
    fn symmetry_flags() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0), (0, 0, 1.0)]);
        assert!(s.is_symmetric(0.0));
        assert!(s.is_structurally_symmetric());
        let n = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, -2.0)]);
        assert!(!n.is_symmetric(1e-12));
        assert!(n.is_structurally_symmetric());
    }
}
