//! Sparse LU factorization `P·A·Q = L·U` with transpose solves.
//!
//! Columns are ordered by minimum degree on the pattern of `A + Aᵀ`; rows are
//! chosen by threshold partial pivoting that prefers the diagonal of the
//! symmetric ordering. The numeric phase is a left-looking Gilbert–Peierls
//! elimination.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::sparse::SparseMatrix;
use super::stats::{Counters, Op};
use crate::error::{Error, Result};

const PIVOT_THRESHOLD: f64 = 0.1;
const NONE: usize = usize::MAX;

/// Factors of a square sparse matrix. Immutable; solves take `&self`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    // Strictly lower part of L (unit diagonal implied), rows in pivot order.
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // Strictly upper part of U, rows in pivot order.
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    /// `pinv[row] = step` at which original row was pivoted.
    pinv: Vec<usize>,
    /// Column ordering: step `k` eliminates original column `q[k]`.
    q: Vec<usize>,
    counters: Counters,
}

/// Minimum-degree ordering of the symmetrized pattern of `a`.
///
/// Ties break on the smallest index, so the result is deterministic.
pub fn min_degree_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n_cols();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("an alive vertex remains");
        alive[v] = false;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (x, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[x + 1..] {
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
    }
    order
}

/// Factors `a` with a freshly computed fill-reducing ordering.
pub fn lu_factor(a: &SparseMatrix, counters: &Counters) -> Result<LuFactors> {
    let q = min_degree_ordering(a);
    lu_factor_ordered(a, q, counters)
}

/// Factors `a` with a caller-supplied column ordering (e.g. reused across a
/// frequency sweep with a fixed pattern).
pub fn lu_factor_ordered(a: &SparseMatrix, q: Vec<usize>, counters: &Counters) -> Result<LuFactors> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::Dimension(format!(
            "LU needs a square matrix, got {}x{}",
            n,
            a.n_cols()
        )));
    }
    assert_eq!(q.len(), n, "ordering length");
    counters.bump(Op::Factorization, 1);

    let mut l_ptr = vec![0usize];
    let mut l_idx: Vec<usize> = Vec::new();
    let mut l_val: Vec<f64> = Vec::new();
    let mut u_ptr = vec![0usize];
    let mut u_idx: Vec<usize> = Vec::new();
    let mut u_val: Vec<f64> = Vec::new();
    let mut u_diag = Vec::with_capacity(n);
    let mut pinv = vec![NONE; n];

    let mut x = vec![0.0f64; n];
    let mut mark = vec![NONE; n];
    let mut pattern: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for (k, &col) in q.iter().enumerate() {
        // Reach of column `col` through the graph of L, in topological order.
        pattern.clear();
        let mut col_scale = 0.0f64;
        for (i, v) in a.column(col) {
            x[i] = v;
            col_scale = col_scale.max(v.abs());
            if mark[i] == k {
                continue;
            }
            mark[i] = k;
            stack.push((i, 0));
            while let Some(top) = stack.last_mut() {
                let node = top.0;
                let step = pinv[node];
                let (start, end) = if step == NONE {
                    (0, 0)
                } else {
                    (l_ptr[step], l_ptr[step + 1])
                };
                if start + top.1 < end {
                    let child = l_idx[start + top.1];
                    top.1 += 1;
                    if mark[child] != k {
                        mark[child] = k;
                        stack.push((child, 0));
                    }
                } else {
                    stack.pop();
                    pattern.push(node);
                }
            }
        }

        // Sparse forward substitution; pattern holds reverse topological order.
        for &i in pattern.iter().rev() {
            let step = pinv[i];
            if step == NONE {
                continue;
            }
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for p in l_ptr[step]..l_ptr[step + 1] {
                x[l_idx[p]] -= l_val[p] * xi;
            }
        }

        // Pivot selection among rows not yet pivoted.
        let mut best = NONE;
        let mut best_abs = 0.0f64;
        for &i in &pattern {
            if pinv[i] == NONE && x[i].abs() > best_abs {
                best_abs = x[i].abs();
                best = i;
            }
        }
        if pinv[col] == NONE && mark[col] == k && x[col].abs() >= PIVOT_THRESHOLD * best_abs {
            best = col;
        }
        if best == NONE || best_abs <= 64.0 * f64::EPSILON * col_scale {
            for &i in &pattern {
                x[i] = 0.0;
            }
            return Err(Error::SingularPivot {
                column: col,
                unknown: None,
            });
        }
        let pivot = x[best];
        pinv[best] = k;
        u_diag.push(pivot);

        for &i in &pattern {
            let step = pinv[i];
            if i == best {
                // diagonal already recorded
            } else if step != NONE {
                if x[i] != 0.0 {
                    u_idx.push(step);
                    u_val.push(x[i]);
                }
            } else if x[i] != 0.0 {
                l_idx.push(i);
                l_val.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());
    }

    // Renumber L rows into pivot order.
    for r in l_idx.iter_mut() {
        *r = pinv[*r];
    }

    Ok(LuFactors {
        n,
        l_ptr,
        l_idx,
        l_val,
        u_ptr,
        u_idx,
        u_val,
        u_diag,
        pinv,
        q,
        counters: counters.clone(),
    })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Column ordering used by the factorization.
    pub fn ordering(&self) -> &[usize] {
        &self.q
    }

    /// Number of stored entries in `L` and `U` including the diagonal.
    pub fn fill(&self) -> usize {
        self.l_val.len() + self.u_val.len() + self.n
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                    y[self.l_idx[p]] -= self.l_val[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            y[j] /= self.u_diag[j];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u_ptr[j]..self.u_ptr[j + 1] {
                    y[self.u_idx[p]] -= self.u_val[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        x
    }

    pub fn solve_transpose_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut w: Vec<f64> = self.q.iter().map(|&c| b[c]).collect();
        for j in 0..n {
            let mut s = w[j];
            for p in self.u_ptr[j]..self.u_ptr[j + 1] {
                s -= self.u_val[p] * w[self.u_idx[p]];
            }
            w[j] = s / self.u_diag[j];
        }
        for j in (0..n).rev() {
            let mut s = w[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                s -= self.l_val[p] * w[self.l_idx[p]];
            }
            w[j] = s;
        }
        (0..n).map(|i| w[self.pinv[i]]).collect()
    }

    /// Solves `A·X = rhs` column by column.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.counters.bump(Op::Solve, 1);
        self.map_columns(rhs, |b| self.solve_vec(b))
    }

    /// Solves `Aᵀ·X = rhs` reusing the same factors.
    pub fn solve_transpose(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.counters.bump(Op::TransposeSolve, 1);
        self.map_columns(rhs, |b| self.solve_transpose_vec(b))
    }

    fn map_columns(&self, rhs: &DMatrix<f64>, f: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.n, "rhs row count");
        let mut out = DMatrix::zeros(self.n, rhs.ncols());
        for (j, col) in rhs.column_iter().enumerate() {
            let b: Vec<f64> = col.iter().copied().collect();
            let x = f(&b);
            out.column_mut(j).copy_from_slice(&x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a * x - b).norm() / b.norm()
    }

    fn random_dominant(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < 0.15 {
                    a[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
            let off: f64 = a.row(i).iter().map(|v: &f64| v.abs()).sum();
            a[(i, i)] = off + 1.0 + rng.random::<f64>();
        }
        a
    }

    #[test]
    fn scalar_factor() {
        let c = Counters::new();
        let f = lu_factor(&SparseMatrix::from_triplets(1, 1, [(0, 0, 2.0)]), &c).unwrap();
        assert_eq!(f.u_diag, vec![2.0]);
        assert!(f.l_val.is_empty());
        let x = f.solve(&DMatrix::from_element(1, 1, 4.0));
        assert_eq!(x[(0, 0)], 2.0);
        assert_eq!(f.solve(&DMatrix::zeros(1, 1))[(0, 0)], 0.0);
        assert_eq!(c.snapshot().factorizations, 1);
    }

    #[test]
    fn floating_pair_is_singular() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        match lu_factor(&a, &Counters::new()) {
            Err(Error::SingularPivot { column, .. }) => assert!(column < 2),
            other => panic!("expected singular pivot, got {other:?}"),
        }
    }

    #[test]
    fn hand_triangular_transpose_solve() {
        // A = [[1,1],[0,1]]; Aᵀ x = e1 -> x = [1, -1]
        let a = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        let f = lu_factor(&a, &Counters::new()).unwrap();
        let x = f.solve_transpose_vec(&[1.0, 0.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_diagonal_needs_pivoting() {
        // Inductor-like saddle block.
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 2.0, -1.0, -1.0, 1.0, 0.0]);
        let f = lu_factor(&SparseMatrix::from_dense(&a), &Counters::new()).unwrap();
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, -3.0, 5.0]);
        assert!(rel_residual(&a, &f.solve(&b), &b) < 1e-14);
        assert!(rel_residual(&a.transpose(), &f.solve_transpose(&b), &b) < 1e-14);
    }

    #[test]
    fn random_dominant_50_residual() {
        let a = random_dominant(50, 3);
        let f = lu_factor(&SparseMatrix::from_dense(&a), &Counters::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = DMatrix::from_fn(50, 4, |_, _| rng.random_range(-1.0..1.0));
        assert!(rel_residual(&a, &f.solve(&b), &b) < 1e-10);
    }

    #[test]
    fn random_solves_match_dense_inverse() {
        let a = random_dominant(20, 11);
        let inv = a.clone().try_inverse().unwrap();
        let f = lu_factor(&SparseMatrix::from_dense(&a), &Counters::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = DMatrix::from_fn(20, 3, |_, _| rng.random_range(-1.0..1.0));
        let x = f.solve(&b);
        assert!((&x - &inv * &b).norm() / x.norm() < 1e-10);
        let bt = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let xt = f.solve_transpose(&bt);
        assert!((&xt - inv.transpose() * &bt).norm() / xt.norm() < 1e-10);
    }

    #[test]
    fn symmetric_transpose_solve_equals_solve() {
        let a0 = random_dominant(15, 21);
        let a = &a0 + a0.transpose();
        let f = lu_factor(&SparseMatrix::from_dense(&a), &Counters::new()).unwrap();
        let b: Vec<f64> = (0..15).map(|i| (i as f64).sin()).collect();
        let x1 = f.solve_vec(&b);
        let x2 = f.solve_transpose_vec(&b);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-12 * u.abs().max(1.0));
        }
    }

    #[test]
    fn tridiagonal_has_no_fill() {
        let n = 100;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let f = lu_factor(&SparseMatrix::from_triplets(n, n, t), &Counters::new()).unwrap();
        assert!(f.fill() <= 3 * n);
    }
}
