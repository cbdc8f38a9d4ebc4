//! Dominant poles of the pencil `(−G(p), C(p))`.
//!
//! Poles are `λ = −1/μ` for the eigenvalues `μ` of `G⁻¹C`; `μ ≈ 0` maps to
//! infinite poles, which are dropped. Symmetric pencils with positive
//! definite `G` go through a Cholesky reduction to a symmetric eigenproblem.
//! "Dominant" means smallest `|λ|`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::transfer::TransferModel;
use crate::error::{Error, Result};
use crate::sysmodel::ParameterPoint;

/// Poles beyond this magnitude (rad/s) are treated as infinite.
pub const INFINITE_POLE: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSet {
    pub poles: Vec<Complex64>,
    pub requested: usize,
    /// False when fewer finite poles exist than were requested.
    pub complete: bool,
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    let scale = a.amax();
    (a - a.transpose()).amax() <= 1e-12 * scale
}

fn sort_poles(mut poles: Vec<Complex64>) -> Vec<Complex64> {
    poles.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    poles
}

/// All finite poles of `(−G, C)`, smallest magnitude first.
pub fn pencil_poles(g: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = g.nrows();
    let mu: Vec<Complex64> = if is_symmetric(g) && is_symmetric(c) {
        match g.clone().cholesky() {
            Some(ch) => {
                // L⁻¹·C·L⁻ᵀ
                let l = ch.l();
                let x = l.solve_lower_triangular(c).ok_or(Error::SingularPivot {
                    column: 0,
                    unknown: None,
                })?;
                let y = l.solve_lower_triangular(&x.transpose()).ok_or(Error::SingularPivot {
                    column: 0,
                    unknown: None,
                })?;
                let sym = (&y + y.transpose()) * 0.5;
                sym.symmetric_eigenvalues()
                    .iter()
                    .map(|&v| Complex64::new(v, 0.0))
                    .collect()
            }
            None => general_mu(g, c)?,
        }
    } else {
        general_mu(g, c)?
    };
    debug_assert_eq!(mu.len(), n);
    let poles = mu
        .into_iter()
        .filter(|m| m.norm() > 0.0)
        .map(|m| -m.inv())
        .filter(|l| l.norm() <= INFINITE_POLE && l.re.is_finite() && l.im.is_finite())
        .collect();
    Ok(sort_poles(poles))
}

fn general_mu(g: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let m = g.clone().lu().solve(c).ok_or(Error::SingularPivot {
        column: 0,
        unknown: None,
    })?;
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

pub fn dominant_poles<M: TransferModel + ?Sized>(model: &M, p: &ParameterPoint, count: usize) -> Result<PoleSet> {
    let (g, c) = model.pencil(p)?;
    let mut poles = pencil_poles(&g, &c)?;
    let complete = poles.len() >= count;
    poles.truncate(count);
    Ok(PoleSet {
        poles,
        requested: count,
        complete,
    })
}

/// Greedy nearest-neighbour pairing; returns `|λr − λf| / |λf|` per
/// reference pole, in reference order.
pub fn paired_relative_errors(reference: &[Complex64], other: &[Complex64]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(reference.len() * other.len());
    for (i, a) in reference.iter().enumerate() {
        for (j, b) in other.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![f64::INFINITY; reference.len()];
    let mut used_ref = vec![false; reference.len()];
    let mut used_other = vec![false; other.len()];
    for (d, i, j) in pairs {
        if used_ref[i] || used_other[j] {
            continue;
        }
        used_ref[i] = true;
        used_other[j] = true;
        out[i] = d / reference[i].norm();
    }
    out
}
