//! Frequency-domain evaluation of `H(s, p) = Lᵀ·[G(p) + s·C(p)]⁻¹·B`.
//!
//! Reduced and small dense systems use a dense complex LU. Full sparse
//! systems are solved in the equivalent real form of order `2n`,
//!
//! ```text
//! [ G + σC   −ωC   ] [xr]   [B]
//! [   ωC    G + σC ] [xi] = [0]      s = σ + jω
//! ```
//!
//! so the sparse real LU can be reused; the fill-reducing ordering is
//! computed once per parameter point.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netlist::ParametricSystem;
use crate::numkern::{lu_factor_ordered, min_degree_ordering, Counters, SparseMatrix};
use crate::sysmodel::{DenseSystem, ParameterPoint, ReducedModel};

/// Anything with a parametric transfer function.
pub trait TransferModel: Sync {
    fn ports(&self) -> usize;
    fn order(&self) -> usize;
    fn transfer(&self, p: &ParameterPoint, s: Complex64) -> Result<DMatrix<Complex64>>;
    /// Dense `(G(p), C(p))` for eigen-analysis.
    fn pencil(&self, p: &ParameterPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)>;
}

pub fn eval_transfer<M: TransferModel + ?Sized>(
    model: &M,
    p: &ParameterPoint,
    s: Complex64,
) -> Result<DMatrix<Complex64>> {
    model.transfer(p, s)
}

fn complexify(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Dense `Lᵀ(G + sC)⁻¹B`.
pub fn dense_transfer(
    g: &DMatrix<f64>,
    c: &DMatrix<f64>,
    b: &DMatrix<f64>,
    l: &DMatrix<f64>,
    s: Complex64,
) -> Result<DMatrix<Complex64>> {
    let k = complexify(g) + complexify(c) * s;
    let x = k
        .lu()
        .solve(&complexify(b))
        .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or(Error::SingularPencil { re: s.re, im: s.im })?;
    Ok(complexify(l).transpose() * x)
}

impl TransferModel for DenseSystem {
    fn ports(&self) -> usize {
        self.m()
    }

    fn order(&self) -> usize {
        self.n()
    }

    fn transfer(&self, p: &ParameterPoint, s: Complex64) -> Result<DMatrix<Complex64>> {
        let (g, c) = self.assemble_at(p)?;
        dense_transfer(&g, &c, &self.b, &self.l, s)
    }

    fn pencil(&self, p: &ParameterPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.assemble_at(p)
    }
}

impl TransferModel for ReducedModel {
    fn ports(&self) -> usize {
        self.m()
    }

    fn order(&self) -> usize {
        self.q()
    }

    fn transfer(&self, p: &ParameterPoint, s: Complex64) -> Result<DMatrix<Complex64>> {
        self.system.transfer(p, s)
    }

    fn pencil(&self, p: &ParameterPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.system.pencil(p)
    }
}

/// Largest order handed to the dense eigensolver.
pub const DENSE_PENCIL_LIMIT: usize = 2000;

impl TransferModel for ParametricSystem {
    fn ports(&self) -> usize {
        self.m()
    }

    fn order(&self) -> usize {
        self.n()
    }

    fn transfer(&self, p: &ParameterPoint, s: Complex64) -> Result<DMatrix<Complex64>> {
        FullEvaluator::new(self, p)?.eval(s)
    }

    fn pencil(&self, p: &ParameterPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if self.n() > DENSE_PENCIL_LIMIT {
            return Err(Error::TooLarge {
                n: self.n(),
                limit: DENSE_PENCIL_LIMIT,
            });
        }
        let (g, c) = self.assemble_at(p)?;
        Ok((g.to_dense(), c.to_dense()))
    }
}

/// Repeated evaluation of a full sparse system at one parameter point.
pub struct FullEvaluator {
    g: SparseMatrix,
    c: SparseMatrix,
    rhs_real: DMatrix<f64>,
    rhs_complex: DMatrix<f64>,
    l: SparseMatrix,
    order_real: Vec<usize>,
    order_complex: Vec<usize>,
    counters: Counters,
}

impl FullEvaluator {
    pub fn new(sys: &ParametricSystem, p: &ParameterPoint) -> Result<Self> {
        let (g, c) = sys.assemble_at(p)?;
        let n = sys.n();
        let b = sys.b.to_dense();
        let mut rhs_complex = DMatrix::zeros(2 * n, sys.m());
        rhs_complex.rows_mut(0, n).copy_from(&b);
        let order_real = min_degree_ordering(&g.add_scaled(&c, 1.0));
        let order_complex = min_degree_ordering(&real_form(&g, &c, 1.0, 1.0));
        Ok(Self {
            g,
            c,
            rhs_real: b,
            rhs_complex,
            l: sys.l.clone(),
            order_real,
            order_complex,
            counters: Counters::new(),
        })
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let singular = |_| Error::SingularPencil { re: s.re, im: s.im };
        let n = self.g.n_rows();
        if s.im == 0.0 {
            let k = self.g.add_scaled(&self.c, s.re);
            let lu = lu_factor_ordered(&k, self.order_real.clone(), &self.counters).map_err(singular)?;
            let x = lu.solve(&self.rhs_real);
            let h = self.l.tr_mul_dense(&x);
            return Ok(complexify(&h));
        }
        let k = real_form(&self.g, &self.c, s.re, s.im);
        let lu = lu_factor_ordered(&k, self.order_complex.clone(), &self.counters).map_err(singular)?;
        let x = lu.solve(&self.rhs_complex);
        let hr = self.l.tr_mul_dense(&x.rows(0, n).into_owned());
        let hi = self.l.tr_mul_dense(&x.rows(n, n).into_owned());
        let h = DMatrix::from_fn(hr.nrows(), hr.ncols(), |i, j| Complex64::new(hr[(i, j)], hi[(i, j)]));
        if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::SingularPencil { re: s.re, im: s.im });
        }
        Ok(h)
    }
}

fn real_form(g: &SparseMatrix, c: &SparseMatrix, sigma: f64, omega: f64) -> SparseMatrix {
    let n = g.n_rows();
    let diag = g.add_scaled(c, sigma);
    let mut t = Vec::with_capacity(2 * diag.nnz() + 2 * c.nnz());
    for (i, j, v) in diag.triplets() {
        t.push((i, j, v));
        t.push((i + n, j + n, v));
    }
    for (i, j, v) in c.triplets() {
        t.push((i, j + n, -omega * v));
        t.push((i + n, j, omega * v));
    }
    SparseMatrix::from_triplets(2 * n, 2 * n, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::load;
    use crate::reducers::test_systems::random_rc;
    use crate::sysmodel::project;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_rc_at_j() {
        let sys = load("P1 1 0\nR1 1 0 1\nC1 1 0 1").unwrap();
        let h = eval_transfer(&sys, &ParameterPoint(vec![]), Complex64::new(0.0, 1.0)).unwrap();
        assert!((h[(0, 0)] - Complex64::new(0.5, -0.5)).norm() < 1e-15);
        assert!((h[(0, 0)].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn dc_gain() {
        let sys = random_rc(15, 1, 3);
        let p = ParameterPoint(vec![0.2]);
        let h = eval_transfer(&sys, &p, Complex64::new(0.0, 0.0)).unwrap();
        let (g, _) = sys.assemble_at(&p).unwrap();
        let b = sys.b.to_dense();
        let dc = b.transpose() * g.to_dense().lu().solve(&b).unwrap();
        assert!((h[(0, 0)].re - dc[(0, 0)]).abs() < 1e-12 * dc[(0, 0)].abs());
        assert_eq!(h[(0, 0)].im, 0.0);
    }

    #[test]
    fn full_equals_identity_projection() {
        let sys = random_rc(20, 2, 4);
        let model = project(&sys, &DMatrix::identity(20, 20)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let p = ParameterPoint(vec![rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)]);
            let s = Complex64::new(rng.random_range(0.0..0.5), rng.random_range(-3.0..3.0));
            let a = eval_transfer(&sys, &p, s).unwrap();
            let b = eval_transfer(&model, &p, s).unwrap();
            assert!((a - &b).norm() <= 1e-10 * b.norm());
        }
    }

    #[test]
    fn singular_pencil_reported() {
        let sys = load("P1 1 0\nR1 1 0 1\nC1 1 0 1").unwrap();
        let err = eval_transfer(&sys, &ParameterPoint(vec![]), Complex64::new(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularPencil { .. }));
        let d = sys.to_dense(10).unwrap();
        assert!(eval_transfer(&d, &ParameterPoint(vec![]), Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn rlc_full_matches_dense() {
        let sys = load(
            ".param w\nP1 1 0\nP2 3 0\nR1 1 2 5 SENSG w=0.02\nL1 2 3 1n SENSL w=-0.1n\nC1 2 0 1p\nC2 3 0 2p SENSC w=0.5p\nR2 3 0 50\nR3 1 0 50\nK1 L1 L1B 0.1n\nL1B 3 4 2n\nR4 4 0 10",
        )
        .unwrap();
        let d = sys.to_dense(100).unwrap();
        let p = ParameterPoint(vec![0.3]);
        for f in [1e6, 1e9, 5e9] {
            let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
            let a = eval_transfer(&sys, &p, s).unwrap();
            let b = eval_transfer(&d, &p, s).unwrap();
            assert!((&a - &b).norm() <= 1e-10 * b.norm());
        }
    }
}
