//! Moment-preservation check for the low-rank engine.
//!
//! The nearby system replaces each sensitivity by `G̃ᵢ = −G0·Û·V̂ᵀ` (so that
//! `−G0⁻¹G̃ᵢ = Û·V̂ᵀ` exactly). Projecting it onto the engine's basis must
//! reproduce its moments up to the engine's order.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::moments::{max_relative_deviation, oracle_moments, ORACLE_LIMIT};
use crate::error::{Error, Result};
use crate::netlist::ParametricSystem;
use crate::numkern::SensitivityKind;
use crate::sysmodel::{project_dense, DenseSystem, ReducedModel};

/// Bound on the nearby-versus-reduced deviation.
pub const PRESERVATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct PreservationReport {
    pub order: usize,
    /// Nearby low-rank system against its projection.
    pub nearby_vs_reduced: f64,
    /// Original system against the stored reduced model.
    pub original_vs_reduced: f64,
    /// Original system against the nearby system (truncation error).
    pub original_vs_nearby: f64,
    pub holds: bool,
}

/// The dense system whose sensitivities are exactly the stored factors.
pub fn nearby_system(full: &DenseSystem, model: &ReducedModel) -> DenseSystem {
    let n = full.n();
    let mut out = full.clone();
    for g in out.g.iter_mut().chain(out.c.iter_mut()) {
        *g = DMatrix::zeros(n, n);
    }
    for f in &model.factors {
        let m = -&full.g0 * f.to_dense();
        match f.target.kind {
            SensitivityKind::G => out.g[f.target.param] = m,
            SensitivityKind::C => out.c[f.target.param] = m,
        }
    }
    out
}

pub fn verify_moment_preservation(
    sys: &ParametricSystem,
    model: &ReducedModel,
    k: usize,
) -> Result<PreservationReport> {
    if sys.n() > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            n: sys.n(),
            limit: ORACLE_LIMIT,
        });
    }
    if model.basis.nrows() != sys.n() || model.n_p() != sys.n_p() {
        return Err(Error::Dimension("model does not belong to this system".into()));
    }
    let full = sys.to_dense(ORACLE_LIMIT)?;
    let nearby = if sys.n_p() == 0 {
        full.clone()
    } else {
        nearby_system(&full, model)
    };
    let nearby_red = project_dense(&nearby, &model.basis);

    let out = |s: &DenseSystem| oracle_moments(s, k).map(|t| t.output(&s.l));
    let a = out(&full)?;
    let b = out(&nearby)?;
    let c = out(&nearby_red)?;
    let stored = out(&model.system)?;
    let nearby_vs_reduced = max_relative_deviation(&b, &c);
    Ok(PreservationReport {
        order: k,
        nearby_vs_reduced,
        original_vs_reduced: max_relative_deviation(&a, &stored),
        original_vs_nearby: max_relative_deviation(&a, &b),
        holds: nearby_vs_reduced <= PRESERVATION_TOL,
    })
}
