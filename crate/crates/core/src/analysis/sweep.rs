//! Frequency sweeps comparing reduced models against the full system.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::transfer::{FullEvaluator, TransferModel};
use crate::error::{Error, Result};
use crate::netlist::ParametricSystem;
use crate::sysmodel::{ParameterPoint, ReducedModel};

pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// `n` log-spaced frequencies from `10^a` to `10^b` Hz.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(a)],
        _ => (0..n)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Which frequency response is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    /// `H = Lᵀ(G+sC)⁻¹B` (port impedance for current-injection ports).
    Transfer,
    /// `Y = H⁻¹`.
    Admittance,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCurve {
    pub name: String,
    pub q: usize,
    #[serde(skip)]
    pub values: Vec<DMatrix<Complex64>>,
    /// Per-frequency relative magnitude error.
    pub errors: Vec<f64>,
    pub max_rel_error: f64,
    pub worst_freq_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub p: ParameterPoint,
    pub response: Response,
    /// Compared entry `(row, col)`; `None` compares the whole matrix.
    pub entry: Option<(usize, usize)>,
    pub freqs_hz: Vec<f64>,
    #[serde(skip)]
    pub full: Vec<DMatrix<Complex64>>,
    pub models: Vec<ModelCurve>,
}

/// Relative magnitude error. For a single entry this is
/// `||Hr| − |Hf|| / |Hf|`; for the whole matrix the largest entrywise
/// magnitude difference is divided by the largest full-system magnitude.
pub fn rel_mag_error(full: &DMatrix<Complex64>, red: &DMatrix<Complex64>, entry: Option<(usize, usize)>) -> f64 {
    match entry {
        Some((i, j)) => {
            let f = full[(i, j)].norm();
            (red[(i, j)].norm() - f).abs() / f
        }
        None => {
            let scale = full.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let diff = full
                .iter()
                .zip(red.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a.norm() - b.norm()).abs()));
            diff / scale
        }
    }
}

fn respond(h: DMatrix<Complex64>, response: Response, s: Complex64) -> Result<DMatrix<Complex64>> {
    match response {
        Response::Transfer => Ok(h),
        Response::Admittance => h.try_inverse().ok_or(Error::SingularPencil { re: s.re, im: s.im }),
    }
}

fn omega(f: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * std::f64::consts::PI * f)
}

/// Evaluates any model over a grid, in parallel.
pub fn sweep<M: TransferModel + ?Sized>(
    model: &M,
    p: &ParameterPoint,
    freqs_hz: &[f64],
    response: Response,
) -> Result<Vec<DMatrix<Complex64>>> {
    freqs_hz
        .par_iter()
        .map(|&f| respond(model.transfer(p, omega(f))?, response, omega(f)))
        .collect()
}

/// Evaluates the full sparse system over a grid, reusing its ordering.
pub fn sweep_full(
    sys: &ParametricSystem,
    p: &ParameterPoint,
    freqs_hz: &[f64],
    response: Response,
) -> Result<Vec<DMatrix<Complex64>>> {
    let ev = FullEvaluator::new(sys, p)?;
    freqs_hz
        .par_iter()
        .map(|&f| respond(ev.eval(omega(f))?, response, omega(f)))
        .collect()
}

pub fn sweep_compare(
    full: &ParametricSystem,
    models: &[(&str, &ReducedModel)],
    p: &ParameterPoint,
    freqs_hz: &[f64],
    response: Response,
    entry: Option<(usize, usize)>,
) -> Result<SweepResult> {
    for (name, m) in models {
        if m.m() != full.m() || m.n_p() != full.n_p() {
            return Err(Error::Dimension(format!(
                "model `{name}` has {} ports / {} parameters, system has {} / {}",
                m.m(),
                m.n_p(),
                full.m(),
                full.n_p()
            )));
        }
    }
    if let Some((i, j)) = entry {
        if i >= full.m() || j >= full.m() {
            return Err(Error::Dimension(format!("entry ({i},{j}) outside {0}x{0}", full.m())));
        }
    }
    let mut freqs = freqs_hz.to_vec();
    freqs.sort_by(f64::total_cmp);
    let reference = sweep_full(full, p, &freqs, response)?;
    let mut curves = Vec::with_capacity(models.len());
    for (name, m) in models {
        let values = sweep(*m, p, &freqs, response)?;
        let errors: Vec<f64> = reference
            .iter()
            .zip(&values)
            .map(|(a, b)| rel_mag_error(a, b, entry))
            .collect();
        let (worst, max) = errors
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(wi, wm), (i, &e)| if e > wm { (i, e) } else { (wi, wm) });
        curves.push(ModelCurve {
            name: name.to_string(),
            q: m.q(),
            values,
            errors,
            max_rel_error: max,
            worst_freq_hz: freqs.get(worst).copied().unwrap_or(0.0),
        });
    }
    Ok(SweepResult {
        schema_version: SWEEP_SCHEMA_VERSION,
        p: p.clone(),
        response,
        entry,
        freqs_hz: freqs,
        full: reference,
        models: curves,
    })
}

impl SweepResult {
    /// One row per frequency: the full response per port pair, then each
    /// model's response and its relative error.
    pub fn to_csv(&self) -> String {
        let m = self.full.first().map_or(0, |h| h.nrows());
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
        let mut out = String::from("freq_hz");
        for &(i, j) in &pairs {
            let _ = write!(out, ",full_re_{}{},full_im_{}{}", i + 1, j + 1, i + 1, j + 1);
        }
        for c in &self.models {
            for &(i, j) in &pairs {
                let _ = write!(out, ",{0}_re_{1}{2},{0}_im_{1}{2}", c.name, i + 1, j + 1);
            }
            let _ = write!(out, ",{}_rel_err", c.name);
        }
        out.push('\n');
        for (k, f) in self.freqs_hz.iter().enumerate() {
            let _ = write!(out, "{f:e}");
            for &(i, j) in &pairs {
                let z = self.full[k][(i, j)];
                let _ = write!(out, ",{:e},{:e}", z.re, z.im);
            }
            for c in &self.models {
                for &(i, j) in &pairs {
                    let z = c.values[k][(i, j)];
                    let _ = write!(out, ",{:e},{:e}", z.re, z.im);
                }
                let _ = write!(out, ",{:e}", c.errors[k]);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reducers::test_systems::random_rc;
    use crate::reducers::{reduce, Engine, ReductionSpec};
    use crate::sysmodel::project;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(0.0, 2.0, 3);
        assert_eq!(g, vec![1.0, 10.0, 100.0]);
        assert_eq!(log_grid(1.0, 2.0, 1), vec![10.0]);
    }

    #[test]
    fn identity_projection_has_zero_error() {
        let sys = random_rc(25, 1, 2);
        let ident = project(&sys, &DMatrix::identity(25, 25)).unwrap();
        let r = sweep_compare(
            &sys,
            &[("ident", &ident)],
            &ParameterPoint(vec![0.3]),
            &log_grid(-3.0, 1.0, 30),
            Response::Transfer,
            None,
        )
        .unwrap();
        assert!(r.models[0].max_rel_error < 1e-10);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.starts_with("freq_hz,full_re_11,full_im_11,ident_re_11"));
    }

    #[test]
    fn moment_matched_models_agree_near_dc() {
        let sys = random_rc(60, 2, 5);
        let p = ParameterPoint(vec![0.0, 0.0]);
        for engine in [Engine::Prima, Engine::LowRank, Engine::SinglePoint] {
            let red = reduce(&sys, &ReductionSpec::new(engine, 3)).unwrap();
            let r = sweep_compare(
                &sys,
                &[("m", &red.model)],
                &p,
                &log_grid(-6.0, -5.0, 5),
                Response::Transfer,
                None,
            )
            .unwrap();
            assert!(r.models[0].max_rel_error < 1e-6, "{engine:?}");
        }
    }

    #[test]
    fn admittance_is_inverse() {
        let sys = random_rc(10, 0, 1);
        let f = [0.1];
        let h = sweep_full(&sys, &ParameterPoint(vec![]), &f, Response::Transfer).unwrap();
        let y = sweep_full(&sys, &ParameterPoint(vec![]), &f, Response::Admittance).unwrap();
        assert!((h[0][(0, 0)] * y[0][(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
