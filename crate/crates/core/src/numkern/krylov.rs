//! Block Krylov sequences and orthonormal basis construction with deflation.

use nalgebra::{DMatrix, DVector};

/// Default relative deflation tolerance.
pub const DEFAULT_DEFL_TOL: f64 = 1e-10;

/// Incrementally grown orthonormal basis.
///
/// Each candidate column is orthogonalized by classical Gram–Schmidt applied
/// twice (a third pass runs if the second one still removes most of the
/// vector). A candidate whose residual falls to `defl_tol` times its original
/// norm or below is deflated.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    n: usize,
    defl_tol: f64,
    cols: Vec<DVector<f64>>,
    offered: usize,
}

impl OrthoBasis {
    pub fn new(n: usize, defl_tol: f64) -> Self {
        Self {
            n,
            defl_tol,
            cols: Vec::new(),
            offered: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Total number of candidate columns offered, before deflation.
    pub fn offered(&self) -> usize {
        self.offered
    }

    fn project_out(&self, v: &mut DVector<f64>) {
        if self.cols.is_empty() {
            return;
        }
        let coeffs: Vec<f64> = self.cols.iter().map(|c| c.dot(v)).collect();
        for (c, a) in self.cols.iter().zip(coeffs) {
            v.axpy(-a, c, 1.0);
        }
    }

    /// Offers one column; returns true if it extended the basis.
    pub fn push(&mut self, col: DVector<f64>) -> bool {
        assert_eq!(col.len(), self.n, "column length");
        self.offered += 1;
        let norm0 = col.norm();
        if norm0 == 0.0 || !norm0.is_finite() {
            return false;
        }
        let mut v = col / norm0;
        let mut prev = 1.0;
        for pass in 0..3 {
            self.project_out(&mut v);
            let nv = v.norm();
            if nv <= self.defl_tol {
                return false;
            }
            // Twice is enough unless the second pass still cancelled heavily.
            if pass >= 1 && nv > 0.5 * prev {
                break;
            }
            prev = nv;
        }
        let nv = v.norm();
        if nv <= self.defl_tol {
            return false;
        }
        self.cols.push(v / nv);
        true
    }

    /// Offers every column of `block` in order; returns the columns kept
    /// as an `n×k'` matrix.
    pub fn push_block(&mut self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let start = self.cols.len();
        for c in block.column_iter() {
            self.push(c.into_owned());
        }
        if self.cols.len() == start {
            DMatrix::zeros(self.n, 0)
        } else {
            DMatrix::from_columns(&self.cols[start..])
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        if self.cols.is_empty() {
            DMatrix::zeros(self.n, 0)
        } else {
            DMatrix::from_columns(&self.cols)
        }
    }
}

/// Orthonormal basis for the span of the given blocks, processed in order.
pub fn block_orthonormalize(blocks: &[DMatrix<f64>], defl_tol: f64) -> DMatrix<f64> {
    let n = match blocks.first() {
        Some(b) => b.nrows(),
        None => return DMatrix::zeros(0, 0),
    };
    let mut basis = OrthoBasis::new(n, defl_tol);
    for b in blocks {
        assert_eq!(b.nrows(), n, "all blocks must have {n} rows");
        basis.push_block(b);
    }
    basis.to_matrix()
}

/// Raw block Krylov sequence `[R, A·R, …, A^depth·R]`.
pub fn krylov_block<F>(apply: F, seed: &DMatrix<f64>, depth: usize) -> Vec<DMatrix<f64>>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let mut out = Vec::with_capacity(depth + 1);
    out.push(seed.clone());
    for j in 0..depth {
        let next = apply(&out[j]);
        out.push(next);
    }
    out
}

/// Orthonormal basis of `span{R, A·R, …, A^depth·R}` built Arnoldi-style:
/// each new block is generated from the orthonormalized previous block and
/// deflated against the subspace built so far.
///
/// `depth < 0` yields an empty basis. The return value holds the basis and
/// the number of columns offered before deflation (`(depth+1)·cols(R)` when
/// nothing is deflated early).
pub fn krylov_basis<F>(apply: F, seed: &DMatrix<f64>, depth: isize, defl_tol: f64) -> (DMatrix<f64>, usize)
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let n = seed.nrows();
    if depth < 0 || seed.ncols() == 0 {
        return (DMatrix::zeros(n, 0), 0);
    }
    let nominal = seed.ncols() * (depth as usize + 1);
    let mut basis = OrthoBasis::new(n, defl_tol);
    let mut block = basis.push_block(seed);
    for _ in 0..depth {
        if block.ncols() == 0 {
            break;
        }
        let next = apply(&block);
        block = basis.push_block(&next);
    }
    (basis.to_matrix(), nominal)
}

/// Max-entry deviation of `VᵀV` from the identity.
pub fn orthonormality_error(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, 1);
        m[(i, 0)] = 1.0;
        m
    }

    #[test]
    fn duplicate_column_deflates() {
        let v = block_orthonormalize(&[e(3, 0), e(3, 0)], DEFAULT_DEFL_TOL);
        assert_eq!(v.ncols(), 1);
        assert_eq!(v, e(3, 0));
    }

    #[test]
    fn independent_columns_kept() {
        let v = block_orthonormalize(&[e(3, 0), e(3, 1)], DEFAULT_DEFL_TOL);
        assert_eq!(v.ncols(), 2);
        assert!(orthonormality_error(&v) < 1e-15);
    }

    #[test]
    fn zero_columns_silently_deflated() {
        let v = block_orthonormalize(&[DMatrix::zeros(4, 2), e(4, 3)], DEFAULT_DEFL_TOL);
        assert_eq!(v.ncols(), 1);
    }

    #[test]
    fn rank_seven_input_gives_seven_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = DMatrix::from_fn(30, 7, |_, _| rng.random_range(-1.0..1.0));
        let blocks: Vec<DMatrix<f64>> = (0..4)
            .map(|_| {
                let mix = DMatrix::from_fn(7, 3, |_, _| rng.random_range(-1.0..1.0));
                &f * mix
            })
            .collect();
        // Dense SVD oracle for the rank of the concatenation.
        let all = DMatrix::from_columns(
            &blocks
                .iter()
                .flat_map(|b| b.column_iter().map(|c| c.into_owned()))
                .collect::<Vec<_>>(),
        );
        let sv = all.singular_values();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv[0]).count();
        assert_eq!(rank, 7);
        let v = block_orthonormalize(&blocks, 1e-10);
        assert_eq!(v.ncols(), rank);
        assert!(orthonormality_error(&v) < 1e-10);
    }

    #[test]
    fn krylov_zero_and_identity_operators() {
        let r = e(3, 0);
        let z = krylov_block(|x| DMatrix::zeros(x.nrows(), x.ncols()), &r, 2);
        assert_eq!(z, vec![r.clone(), DMatrix::zeros(3, 1), DMatrix::zeros(3, 1)]);
        let id = krylov_block(|x| x.clone(), &r, 3);
        assert!(id.iter().all(|b| *b == r));
    }

    #[test]
    fn krylov_matches_matrix_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let r = DMatrix::from_fn(10, 2, |_, _| rng.random_range(-1.0..1.0));
        let blocks = krylov_block(|x| &a * x, &r, 3);
        let mut p = DMatrix::identity(10, 10);
        for b in &blocks {
            let expected = &p * &r;
            assert!((b - &expected).norm() <= 1e-12 * expected.norm().max(1.0));
            p = &a * p;
        }
    }

    #[test]
    fn arnoldi_basis_spans_raw_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = DMatrix::from_fn(12, 12, |_, _| rng.random_range(-1.0..1.0));
        let r = DMatrix::from_fn(12, 1, |_, _| rng.random_range(-1.0..1.0));
        let (v, nominal) = krylov_basis(|x| &a * x, &r, 4, 1e-12);
        assert_eq!(nominal, 5);
        assert_eq!(v.ncols(), 5);
        for b in krylov_block(|x| &a * x, &r, 4) {
            let resid = &b - &v * (v.transpose() * &b);
            assert!(resid.norm() <= 1e-10 * b.norm());
        }
        let (empty, c) = krylov_basis(|x| &a * x, &r, -1, 1e-12);
        assert_eq!((empty.ncols(), c), (0, 0));
    }

    #[test]
    fn reorthonormalizing_keeps_the_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(20, 6, |_, _| rng.random_range(-1.0..1.0));
        let v = block_orthonormalize(&[x], 1e-10);
        let w = block_orthonormalize(std::slice::from_ref(&v), 1e-10);
        assert_eq!(w.ncols(), v.ncols());
        // Cosines of principal angles are the singular values of VᵀW.
        let sv = (v.transpose() * &w).singular_values();
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-8));
    }
}
