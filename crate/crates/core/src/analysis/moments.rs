//! Brute-force multi-parameter moment oracle.
//!
//! Moments are the coefficients of `s^ks·p₁^k₁⋯` in the expansion of
//! `X = [G(p) + s·C(p)]⁻¹·B` about the origin. With `A = −G0⁻¹C0`,
//! `Ĝᵢ = −G0⁻¹Gᵢ`, `Ĉᵢ = −G0⁻¹Cᵢ` they obey
//!
//! ```text
//! M(0)   = G0⁻¹B
//! M(ks,κ) = A·M(ks−1,κ) + Σᵢ Ĝᵢ·M(ks,κ−eᵢ) + Σᵢ Ĉᵢ·M(ks−1,κ−eᵢ)
//! ```
//!
//! The total order of a multi-index is `ks + Σ kᵢ`. Everything here is dense
//! and independent of the sparse kernels used by the reducers.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sysmodel::DenseSystem;

/// Largest state dimension the oracle accepts.
pub const ORACLE_LIMIT: usize = 500;

/// `(k_s, k_1, …, k_np)`.
pub type MultiIndex = Vec<usize>;

/// Blocks that lose more than this fraction of their term magnitude to
/// cancellation are compared against the term magnitude instead.
pub const CANCELLATION_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub max_total_order: usize,
    pub entries: BTreeMap<MultiIndex, DMatrix<f64>>,
    /// Same recurrence on entrywise absolute values: the size of the terms
    /// summed into each block. Empty when unknown.
    pub magnitudes: BTreeMap<MultiIndex, DMatrix<f64>>,
}

/// All multi-indices of length `n_p + 1` with total order at most
/// `max_order`, graded (by total order) then lexicographic.
pub fn multi_indices(n_p: usize, max_order: usize) -> Vec<MultiIndex> {
    fn rec(prefix: &mut Vec<usize>, slots: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in (0..=remaining).rev() {
            prefix.push(v);
            rec(prefix, slots - 1, remaining - v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for order in 0..=max_order {
        let mut level = Vec::new();
        rec(&mut Vec::new(), n_p + 1, order, &mut level);
        level.sort();
        out.extend(level);
    }
    out
}

pub fn total_order(idx: &[usize]) -> usize {
    idx.iter().sum()
}

/// State moments of `sys` up to `max_total_order`.
pub fn oracle_moments(sys: &DenseSystem, max_total_order: usize) -> Result<MomentTable> {
    let n = sys.n();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { n, limit: ORACLE_LIMIT });
    }
    let lu = sys.g0.clone().lu();
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        lu.solve(rhs).ok_or(Error::SingularPivot {
            column: 0,
            unknown: None,
        })
    };
    let r0 = solve(&sys.b)?;
    let a = -solve(&sys.c0)?;
    let gh: Vec<DMatrix<f64>> = sys.g.iter().map(|g| solve(g).map(|x| -x)).collect::<Result<_>>()?;
    let ch: Vec<DMatrix<f64>> = sys.c.iter().map(|c| solve(c).map(|x| -x)).collect::<Result<_>>()?;

    let abs = |m: &DMatrix<f64>| m.abs();
    let entries = recurrence(sys.n_p(), max_total_order, &r0, &a, &gh, &ch);
    let magnitudes = recurrence(
        sys.n_p(),
        max_total_order,
        &abs(&r0),
        &abs(&a),
        &gh.iter().map(abs).collect::<Vec<_>>(),
        &ch.iter().map(abs).collect::<Vec<_>>(),
    );
    Ok(MomentTable {
        max_total_order,
        entries,
        magnitudes,
    })
}

fn recurrence(
    n_p: usize,
    max_total_order: usize,
    r0: &DMatrix<f64>,
    a: &DMatrix<f64>,
    gh: &[DMatrix<f64>],
    ch: &[DMatrix<f64>],
) -> BTreeMap<MultiIndex, DMatrix<f64>> {
    let mut entries: BTreeMap<MultiIndex, DMatrix<f64>> = BTreeMap::new();
    for idx in multi_indices(n_p, max_total_order) {
        if total_order(&idx) == 0 {
            entries.insert(idx, r0.clone());
            continue;
        }
        let mut m = DMatrix::zeros(r0.nrows(), r0.ncols());
        if idx[0] >= 1 {
            let mut prev = idx.clone();
            prev[0] -= 1;
            m += a * &entries[&prev];
        }
        for i in 0..n_p {
            if idx[i + 1] == 0 {
                continue;
            }
            let mut prev = idx.clone();
            prev[i + 1] -= 1;
            m += &gh[i] * &entries[&prev];
            if idx[0] >= 1 {
                prev[0] -= 1;
                m += &ch[i] * &entries[&prev];
            }
        }
        entries.insert(idx, m);
    }
    entries
}

impl MomentTable {
    pub fn get(&self, idx: &[usize]) -> Option<&DMatrix<f64>> {
        self.entries.get(idx)
    }

    /// Output moments `Lᵀ·M` (the moments of the transfer function).
    pub fn output(&self, l: &DMatrix<f64>) -> MomentTable {
        let lt = l.transpose();
        MomentTable {
            max_total_order: self.max_total_order,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), &lt * v)).collect(),
            magnitudes: self.magnitudes.iter().map(|(k, v)| (k.clone(), lt.abs() * v)).collect(),
        }
    }

    /// Keeps only multi-indices satisfying `keep`.
    pub fn filtered(&self, keep: impl Fn(&[usize]) -> bool) -> MomentTable {
        MomentTable {
            max_total_order: self.max_total_order,
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            magnitudes: self
                .magnitudes
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Per-index relative deviation `‖a − b‖_F / ‖a‖_F`, with `a` as reference.
///
/// The denominator is floored at [`CANCELLATION_FLOOR`] times the block's
/// term magnitude, so blocks that are cancellation noise do not demand
/// relative accuracy. Without magnitudes, a reference block that is zero
/// relative to the largest block of the same total order is normalized by
/// that largest block instead.
pub fn relative_deviations(reference: &MomentTable, other: &MomentTable) -> Vec<(MultiIndex, f64)> {
    let mut order_scale: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, v) in &reference.entries {
        let e = order_scale.entry(total_order(k)).or_insert(0.0);
        *e = e.max(v.norm());
    }
    reference
        .entries
        .iter()
        .filter_map(|(k, a)| {
            let b = other.entries.get(k)?;
            let denom = match reference.magnitudes.get(k) {
                Some(t) => a.norm().max(CANCELLATION_FLOOR * t.norm()),
                None => {
                    let scale = order_scale[&total_order(k)];
                    if a.norm() > 1e-14 * scale {
                        a.norm()
                    } else {
                        scale
                    }
                }
            };
            let diff = (a - b).norm();
            let dev = if denom > 0.0 { diff / denom } else { diff };
            Some((k.clone(), dev))
        })
        .collect()
}

pub fn max_relative_deviation(reference: &MomentTable, other: &MomentTable) -> f64 {
    relative_deviations(reference, other)
        .into_iter()
        .fold(0.0, |m, (_, d)| m.max(d))
}

/// Serializable view: `(multi-index, row-major block)`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEntry {
    pub index: MultiIndex,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MomentTable {
    pub fn to_entries(&self) -> Vec<MomentEntry> {
        self.entries
            .iter()
            .map(|(k, v)| {
                let rm = crate::dense_io::RowMajor::from(v);
                MomentEntry {
                    index: k.clone(),
                    rows: rm.rows,
                    cols: rm.cols,
                    data: rm.data,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(g: f64, c: f64, g1: Option<f64>) -> DenseSystem {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        DenseSystem {
            g0: one(g),
            c0: one(c),
            g: g1.iter().map(|&v| one(v)).collect(),
            c: g1.iter().map(|_| one(0.0)).collect(),
            b: one(1.0),
            l: one(1.0),
        }
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn graded_index_order() {
        let idx = multi_indices(1, 2);
        assert_eq!(
            idx,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
        // Count is C(order + n_p + 1, n_p + 1).
        assert_eq!(multi_indices(2, 4).len(), 35);
    }

    #[test]
    fn geometric_series_in_s() {
        // 1/(1+s) = Σ (−1)^a s^a
        let t = oracle_moments(&scalar(1.0, 1.0, None), 6).unwrap();
        for a in 0..=6 {
            let expected = if a % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(t.get(&[a]).unwrap()[(0, 0)], expected);
        }
    }

    #[test]
    fn two_variable_binomial_series() {
        // 1/(1+s+p): coefficient of s^a p^b is (−1)^(a+b)·C(a+b, a).
        let t = oracle_moments(&scalar(1.0, 1.0, Some(1.0)), 5).unwrap();
        for idx in multi_indices(1, 5) {
            let (a, b) = (idx[0], idx[1]);
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            let expected = sign * binom(a + b, a);
            assert_eq!(t.get(&idx).unwrap()[(0, 0)], expected, "{idx:?}");
        }
        assert_eq!(t.get(&[1, 1]).unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn order_zero_is_dc_solution() {
        let sys = DenseSystem {
            g0: DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 3.0]),
            c0: DMatrix::identity(2, 2),
            g: vec![],
            c: vec![],
            b: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            l: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        };
        let t = oracle_moments(&sys, 0).unwrap();
        let expected = sys.g0.clone().try_inverse().unwrap() * &sys.b;
        assert!((t.get(&[0]).unwrap() - expected).amax() < 1e-15);
    }

    #[test]
    fn size_guard() {
        let n = ORACLE_LIMIT + 1;
        let sys = DenseSystem {
            g0: DMatrix::identity(n, n),
            c0: DMatrix::identity(n, n),
            g: vec![],
            c: vec![],
            b: DMatrix::zeros(n, 1),
            l: DMatrix::zeros(n, 1),
        };
        assert!(matches!(oracle_moments(&sys, 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn deviation_uses_order_scale_for_zero_blocks() {
        let mut a = MomentTable {
            max_total_order: 1,
            entries: BTreeMap::new(),
            magnitudes: BTreeMap::new(),
        };
        a.entries.insert(vec![1, 0], DMatrix::from_element(1, 1, 2.0));
        a.entries.insert(vec![0, 1], DMatrix::from_element(1, 1, 0.0));
        let mut b = a.clone();
        b.entries.insert(vec![0, 1], DMatrix::from_element(1, 1, 2e-9));
        assert!((max_relative_deviation(&a, &b) - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn cancelled_blocks_use_term_magnitude() {
        // M(p) = Ĝ·R0 with terms +1 and −1 cancelling exactly.
        let sys = DenseSystem {
            g0: DMatrix::identity(2, 2),
            c0: DMatrix::identity(2, 2),
            g: vec![DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0])],
            c: vec![DMatrix::zeros(2, 2)],
            b: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            l: DMatrix::identity(2, 1),
        };
        let a = oracle_moments(&sys, 1).unwrap();
        assert_eq!(a.get(&[0, 1]).unwrap().norm(), 0.0);
        assert_eq!(a.magnitudes[&vec![0, 1]].norm(), 2.0);
        let mut b = a.clone();
        b.entries
            .insert(vec![0, 1], DMatrix::from_row_slice(2, 1, &[2e-16, 0.0]));
        let d = max_relative_deviation(&a, &b);
        assert!((d - 1e-12).abs() < 1e-24, "{d}");
        // Output moments carry magnitudes through |L|ᵀ.
        assert_eq!(a.output(&sys.l).magnitudes[&vec![0, 1]][(0, 0)], 2.0);
    }
}
