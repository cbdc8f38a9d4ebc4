//! Semi-definiteness check of a reduced RC model at parameter corners.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::sysmodel::{DenseSystem, ParameterPoint};

/// Relative eigenvalue tolerance.
pub const PASSIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct PointMargin {
    pub p: ParameterPoint,
    pub g_min_eig: f64,
    pub g_norm: f64,
    pub c_min_eig: f64,
    pub c_norm: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PassivityReport {
    pub points: Vec<PointMargin>,
    pub b_equals_l: bool,
    /// Smallest raw eigenvalue seen across all points and both matrices.
    pub worst_margin: f64,
    pub pass: bool,
}

/// All `2^n_p` sign combinations of `max`.
pub fn corners(max: &[f64]) -> Vec<ParameterPoint> {
    (0..1usize << max.len())
        .map(|mask| {
            ParameterPoint(
                max.iter()
                    .enumerate()
                    .map(|(i, &v)| if mask >> i & 1 == 1 { v } else { -v })
                    .collect(),
            )
        })
        .collect()
}

fn min_eig(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let e = sym.symmetric_eigenvalues();
    let norm = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (e.min(), norm)
}

/// Checks the nominal point plus `extra` points.
pub fn passivity_check(model: &DenseSystem, extra: &[ParameterPoint]) -> Result<PassivityReport> {
    let mut pts = vec![ParameterPoint::nominal(model.n_p())];
    pts.extend(extra.iter().cloned());
    let mut points = Vec::with_capacity(pts.len());
    for p in pts {
        let (g, c) = model.assemble_at(&p)?;
        let (g_min_eig, g_norm) = min_eig(&g);
        let (c_min_eig, c_norm) = min_eig(&c);
        let pass = g_min_eig >= -PASSIVITY_TOL * g_norm && c_min_eig >= -PASSIVITY_TOL * c_norm;
        points.push(PointMargin {
            p,
            g_min_eig,
            g_norm,
            c_min_eig,
            c_norm,
            pass,
        });
    }
    let worst_margin = points
        .iter()
        .flat_map(|p| [p.g_min_eig, p.c_min_eig])
        .fold(f64::INFINITY, f64::min);
    let b_equals_l = model.b == model.l;
    Ok(PassivityReport {
        pass: points.iter().all(|p| p.pass) && b_equals_l,
        points,
        b_equals_l,
        worst_margin,
    })
}
