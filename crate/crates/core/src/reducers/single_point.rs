//! Single-point multi-parameter moment matching.
//!
//! Every moment `M(ks, κ)` is a sum of operator words applied to `R0`, where
//! the letters are `A0` (degree `s`), `Ĝᵢ = −G0⁻¹Gᵢ` (degree `pᵢ`) and
//! `Ĉᵢ = −G0⁻¹Cᵢ` (degree `s·pᵢ`). The engine spans the individual words,
//! which contains every moment up to the requested order.

use nalgebra::DMatrix;

use super::{factor_nominal, finish, prima, Reduction, ReductionSpec};
use crate::error::Result;
use crate::netlist::ParametricSystem;
use crate::numkern::{block_orthonormalize, Counters};

#[derive(Clone, Copy)]
enum Letter {
    A,
    G(usize),
    C(usize),
}

struct Caps {
    k_s: usize,
    k_param: usize,
    total: usize,
}

impl Caps {
    fn of(spec: &ReductionSpec) -> Self {
        Self {
            k_s: spec.k,
            k_param: spec.k_param.unwrap_or(spec.k),
            total: spec.total_order.unwrap_or(spec.k),
        }
    }

    fn step(&self, idx: &[usize], letter: Letter) -> Option<Vec<usize>> {
        let mut next = idx.to_vec();
        match letter {
            Letter::A => next[0] += 1,
            Letter::G(i) => next[i + 1] += 1,
            Letter::C(i) => {
                next[0] += 1;
                next[i + 1] += 1;
            }
        }
        let ok = next[0] <= self.k_s
            && next[1..].iter().all(|&d| d <= self.k_param)
            && next.iter().sum::<usize>() <= self.total;
        ok.then_some(next)
    }
}

fn letters(n_p: usize) -> Vec<Letter> {
    let mut out = vec![Letter::A];
    for i in 0..n_p {
        out.push(Letter::G(i));
        out.push(Letter::C(i));
    }
    out
}

/// Multi-degrees of all words within the caps, in generation order.
fn words(n_p: usize, caps: &Caps) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; n_p + 1]];
    let mut i = 0;
    while i < out.len() {
        for &l in &letters(n_p) {
            if let Some(next) = caps.step(&out[i], l) {
                out.push(next);
            }
        }
        i += 1;
    }
    out
}

/// Columns offered before deflation: one block of `m` per word.
pub fn single_point_column_count(m: usize, n_p: usize, spec: &ReductionSpec) -> usize {
    words(n_p, &Caps::of(spec)).len() * m
}

fn normalize_columns(mut x: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in x.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 && n.is_finite() {
            c /= n;
        }
    }
    x
}

pub fn reduce_single_point(sys: &ParametricSystem, spec: &ReductionSpec) -> Result<Reduction> {
    spec.validate(sys.n_p())?;
    if sys.n_p() == 0 {
        return prima::reduce_prima(sys, spec);
    }
    let n_p = sys.n_p();
    let caps = Caps::of(spec);
    let counters = Counters::new();
    let nom = factor_nominal(sys, &counters)?;

    // Breadth-first over words; each column is rescaled, which keeps its span.
    let mut blocks: Vec<(Vec<usize>, usize, DMatrix<f64>)> = vec![(vec![0; n_p + 1], 0, normalize_columns(nom.r0()))];
    let mut i = 0;
    while i < blocks.len() {
        for &l in &letters(n_p) {
            let Some(idx) = caps.step(&blocks[i].0, l) else {
                continue;
            };
            let parent = &blocks[i].2;
            let child = match l {
                Letter::A => nom.a(parent),
                Letter::G(j) => nom.sens(&sys.sens[j].g, parent),
                Letter::C(j) => nom.sens(&sys.sens[j].c, parent),
            };
            let order = blocks.len();
            blocks.push((idx, order, normalize_columns(child)));
        }
        i += 1;
    }
    let offered = blocks.len() * sys.m();
    // Graded order over multi-indices, generation order within one index.
    blocks.sort_by(|a, b| {
        let (da, db) = (a.0.iter().sum::<usize>(), b.0.iter().sum::<usize>());
        da.cmp(&db).then_with(|| a.0.cmp(&b.0)).then(a.1.cmp(&b.1))
    });
    let mats: Vec<DMatrix<f64>> = blocks.into_iter().map(|b| b.2).collect();
    let v = block_orthonormalize(&mats, spec.defl_tol);
    finish(sys, spec, v, offered, &counters, Vec::new())
}
