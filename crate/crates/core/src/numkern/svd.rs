//! Matrix-implicit truncated SVD by randomized block subspace iteration.
//!
//! The matrix is only touched through products with it and its transpose,
//! so generalized sensitivities `-G0⁻¹·Gi` never need to be formed.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const DEFAULT_OVERSAMPLE: usize = 4;
pub const DEFAULT_POWER_ITERS: usize = 6;

/// Singular values below this fraction of the largest are treated as zero.
const RELATIVE_CUTOFF: f64 = 1e-13;

/// Which generalized sensitivity a factor approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensitivityKind {
    G,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorTarget {
    pub kind: SensitivityKind,
    /// Zero-based parameter index.
    pub param: usize,
}

/// Rank-`r` factorization `M ≈ Û·V̂ᵀ` with `Û = [σ₁u₁, …, σᵣuᵣ]` and
/// orthonormal `V̂ = [v₁, …, vᵣ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankFactor {
    #[serde(with = "crate::dense_io")]
    pub u_hat: DMatrix<f64>,
    #[serde(with = "crate::dense_io")]
    pub v_hat: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub target: FactorTarget,
}

impl LowRankFactor {
    pub fn empty(n: usize, target: FactorTarget) -> Self {
        Self {
            u_hat: DMatrix::zeros(n, 0),
            v_hat: DMatrix::zeros(n, 0),
            sigma: Vec::new(),
            target,
        }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Dense `Û·V̂ᵀ`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.u_hat * self.v_hat.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            oversample: DEFAULT_OVERSAMPLE,
            power_iters: DEFAULT_POWER_ITERS,
            seed: 0,
        }
    }
}

fn orthonormal_range(y: &DMatrix<f64>) -> DMatrix<f64> {
    y.clone().qr().q()
}

/// Rank-`rank` approximation of an `n×n` operator given by `apply_m`
/// (`X ↦ M·X`) and `apply_mt` (`X ↦ Mᵀ·X`).
///
/// Returns fewer than `rank` columns when `M` has numerically smaller rank,
/// and an empty factor when `M` is numerically zero. Singular vectors are
/// sign-normalized so the largest-magnitude entry of each `vᵢ` is positive.
pub fn implicit_truncated_svd<F, Ft>(
    n: usize,
    apply_m: F,
    apply_mt: Ft,
    rank: usize,
    opts: SvdOptions,
    target: FactorTarget,
) -> LowRankFactor
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
    Ft: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    assert!(rank >= 1, "rank must be at least 1");
    let width = (rank + opts.oversample).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));

    let y = apply_m(&omega);
    if y.iter().all(|v| *v == 0.0) {
        return LowRankFactor::empty(n, target);
    }
    let mut q = orthonormal_range(&y);
    for _ in 0..opts.power_iters {
        let z = orthonormal_range(&apply_mt(&q));
        q = orthonormal_range(&apply_m(&z));
    }

    // B = Qᵀ·M, formed as (Mᵀ·Q)ᵀ.
    let b = apply_mt(&q).transpose();
    let svd = b.svd(true, true);
    let ub = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let top = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    if !(top > 0.0) {
        return LowRankFactor::empty(n, target);
    }
    let keep: Vec<usize> = order
        .into_iter()
        .take(rank)
        .filter(|&i| svd.singular_values[i] > RELATIVE_CUTOFF * top)
        .collect();

    let left = &q * &ub;
    let r = keep.len();
    let mut u_hat = DMatrix::zeros(n, r);
    let mut v_hat = DMatrix::zeros(n, r);
    let mut sigma = Vec::with_capacity(r);
    for (j, &i) in keep.iter().enumerate() {
        let s = svd.singular_values[i];
        let mut u = left.column(i).into_owned();
        let mut v = vt.row(i).transpose();
        let imax = v.iamax();
        if v[imax] < 0.0 {
            u.neg_mut();
            v.neg_mut();
        }
        u_hat.set_column(j, &(u * s));
        v_hat.set_column(j, &v);
        sigma.push(s);
    }
    LowRankFactor {
        u_hat,
        v_hat,
        sigma,
        target,
    }
}
