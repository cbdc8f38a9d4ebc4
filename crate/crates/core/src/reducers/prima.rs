//! Nominal block-Krylov projection.

use super::{factor_nominal, finish, Reduction, ReductionSpec};
use crate::error::Result;
use crate::netlist::ParametricSystem;
use crate::numkern::{krylov_basis, Counters};

/// Basis for `span{R0, A0·R0, …, A0^k·R0}` with `R0 = G0⁻¹B`, `A0 = −G0⁻¹C0`.
/// Sensitivities are projected onto the same basis.
pub fn reduce_prima(sys: &ParametricSystem, spec: &ReductionSpec) -> Result<Reduction> {
    spec.validate(sys.n_p())?;
    let counters = Counters::new();
    let nom = factor_nominal(sys, &counters)?;
    let (v, offered) = krylov_basis(|x| nom.a(x), &nom.r0(), spec.k as isize, spec.defl_tol);
    finish(sys, spec, v, offered, &counters, Vec::new())
}
