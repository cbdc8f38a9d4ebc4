//! Multi-point expansion: one nominal-style Krylov basis per sample point.

use nalgebra::DMatrix;

use super::{factor, finish, Factored, Reduction, ReductionSpec};
use crate::error::{Error, Result};
use crate::netlist::ParametricSystem;
use crate::numkern::{block_orthonormalize, krylov_basis, Counters};
use crate::sysmodel::ParameterPoint;

/// Full-factorial grid over the range endpoints plus the range center.
pub fn grid_samples(ranges: &[(f64, f64)]) -> Vec<ParameterPoint> {
    let n_p = ranges.len();
    let mut out = Vec::with_capacity((1 << n_p) + 1);
    for mask in 0..(1usize << n_p) {
        out.push(ParameterPoint(
            ranges
                .iter()
                .enumerate()
                .map(|(i, &(lo, hi))| if mask >> i & 1 == 1 { hi } else { lo })
                .collect(),
        ));
    }
    out.push(ParameterPoint(ranges.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()));
    out
}

/// `n_s·(k+1)·m`.
pub fn multi_point_column_count(m: usize, k: usize, n_samples: usize) -> usize {
    n_samples * (k + 1) * m
}

pub fn reduce_multi_point(sys: &ParametricSystem, spec: &ReductionSpec) -> Result<Reduction> {
    spec.validate(sys.n_p())?;
    let counters = Counters::new();
    let b = sys.b.to_dense();
    let mut bases: Vec<DMatrix<f64>> = Vec::with_capacity(spec.samples.len());
    let mut offered = 0;
    for (index, p) in spec.samples.iter().enumerate() {
        let (g, c) = sys.assemble_at(p)?;
        let lu = factor(sys, &g, &counters).map_err(|e| Error::SingularSample {
            index,
            source: Box::new(e),
        })?;
        let f = Factored {
            lu,
            c: &c,
            b: b.clone(),
            counters: counters.clone(),
        };
        let (v, cols) = krylov_basis(|x| f.a(x), &f.r0(), spec.k as isize, spec.defl_tol);
        bases.push(v);
        offered += cols;
    }
    let v = if bases.len() == 1 {
        bases.pop().expect("one basis")
    } else {
        block_orthonormalize(&bases, spec.defl_tol)
    };
    finish(sys, spec, v, offered, &counters, Vec::new())
}
