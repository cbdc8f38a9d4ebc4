//! Low-rank single-point multi-parameter moment matching.
//!
//! Each generalized sensitivity `−G0⁻¹Gᵢ` (and `−G0⁻¹Cᵢ`) is replaced by a
//! rank-`r` factor `Û·V̂ᵀ`. Moments of the resulting nearby system only ever
//! leave the nominal Krylov space through `Û`, so a few extra Krylov blocks
//! seeded with `Û` (and adjoint blocks seeded with `−G0⁻ᵀV̂`) cover them.
//! Only `G0` is factored.

use nalgebra::DMatrix;

use super::{factor_nominal, finish, prima, Factored, Reduction, ReductionSpec};
use crate::error::Result;
use crate::netlist::ParametricSystem;
use crate::numkern::{
    block_orthonormalize, implicit_truncated_svd, krylov_basis, Counters, FactorTarget, LowRankFactor, SensitivityKind,
    SparseMatrix, SvdOptions,
};

fn cols(depth: isize, width: usize) -> usize {
    if depth < 0 {
        0
    } else {
        (depth as usize + 1) * width
    }
}

/// Columns offered before deflation. `ranks` holds the retained `(r_G, r_C)`
/// per parameter.
pub fn low_rank_column_count(k: usize, m: usize, ranks: &[(usize, usize)], simplified: bool) -> usize {
    let k = k as isize;
    let mut total = cols(k, m);
    for &(rg, rc) in ranks {
        total += cols(k, rg) + cols(k - 1, rc);
        total += if simplified {
            rg + rc
        } else {
            cols(k - 1, rg) + cols(k - 2, rc)
        };
    }
    total
}

fn factor_sensitivity(
    nom: &Factored<'_>,
    s: &SparseMatrix,
    n: usize,
    spec: &ReductionSpec,
    target: FactorTarget,
) -> LowRankFactor {
    if s.is_zero() {
        return LowRankFactor::empty(n, target);
    }
    let tag = match target.kind {
        SensitivityKind::G => 0,
        SensitivityKind::C => 1,
    };
    let opts = SvdOptions {
        oversample: spec.svd_oversample,
        power_iters: spec.svd_power_iters,
        seed: spec.seed.wrapping_add((2 * target.param + tag) as u64),
    };
    implicit_truncated_svd(n, |x| nom.sens(s, x), |x| nom.sens_t(s, x), spec.svd_rank, opts, target)
}

pub fn reduce_low_rank(sys: &ParametricSystem, spec: &ReductionSpec) -> Result<Reduction> {
    spec.validate(sys.n_p())?;
    if sys.n_p() == 0 {
        return prima::reduce_prima(sys, spec);
    }
    let n = sys.n();
    let k = spec.k as isize;
    let tol = spec.defl_tol;
    let counters = Counters::new();
    let nom = factor_nominal(sys, &counters)?;

    // Step 1: truncated SVD of every generalized sensitivity.
    let mut factors = Vec::with_capacity(2 * sys.n_p());
    for (i, s) in sys.sens.iter().enumerate() {
        for (kind, mat) in [(SensitivityKind::G, &s.g), (SensitivityKind::C, &s.c)] {
            factors.push(factor_sensitivity(&nom, mat, n, spec, FactorTarget { kind, param: i }));
        }
    }

    // Step 2: Krylov blocks.
    let a = |x: &DMatrix<f64>| nom.a(x);
    let a_t = |x: &DMatrix<f64>| nom.a_t(x);
    let mut blocks = Vec::new();
    let mut offered = 0;
    let mut push = |(v, c): (DMatrix<f64>, usize)| {
        offered += c;
        blocks.push(v);
    };
    push(krylov_basis(a, &nom.r0(), k, tol));
    for pair in factors.chunks(2) {
        let (fg, fc) = (&pair[0], &pair[1]);
        for (f, depth1) in [(fg, k), (fc, k - 1)] {
            if f.rank() == 0 {
                continue;
            }
            push(krylov_basis(a, &f.u_hat, depth1, tol));
            if spec.simplified {
                push((f.v_hat.clone(), f.rank()));
            } else {
                let v_tilde = -nom.lu.solve_transpose(&f.v_hat);
                push(krylov_basis(a_t, &v_tilde, depth1 - 1, tol));
            }
        }
    }

    // Step 3: one orthonormal basis, blocks in order.
    let v = block_orthonormalize(&blocks, tol);
    let ranks: Vec<usize> = factors.iter().map(LowRankFactor::rank).collect();
    factors.retain(|f| f.rank() > 0);

    // Step 4: congruence with the full sensitivities.
    let mut red = finish(sys, spec, v, offered, &counters, Vec::new())?;
    red.model.provenance.svd_ranks = ranks;
    red.model.factors = factors;
    Ok(red)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::moments::{max_relative_deviation, oracle_moments};
    use crate::netlist::load;
    use crate::reducers::test_systems::random_rc;
    use crate::reducers::{reduce_prima, Engine};

    fn spec(k: usize, r: usize) -> ReductionSpec {
        let mut s = ReductionSpec::new(Engine::LowRank, k);
        s.svd_rank = r;
        s
    }

    fn moment_error(sys: &ParametricSystem, red: &Reduction, order: usize) -> f64 {
        let full = oracle_moments(&sys.to_dense(500).unwrap(), order)
            .unwrap()
            .output(&sys.l.to_dense());
        let r = &red.model.system;
        max_relative_deviation(&full, &oracle_moments(r, order).unwrap().output(&r.l))
    }

    #[test]
    fn closed_form_counts() {
        // (k+1)m + n_p·r·4k for the full variant.
        assert_eq!(low_rank_column_count(3, 1, &[(1, 1), (1, 1)], false), 4 + 2 * 12);
        assert_eq!(low_rank_column_count(4, 1, &[(1, 1), (1, 1)], false), 37);
        // Simplified: (k+1)m + n_p·r·(2k+3).
        assert_eq!(low_rank_column_count(3, 1, &[(1, 1), (1, 1)], true), 4 + 2 * 9);
        // k = 1 drops the depth −1 block.
        assert_eq!(low_rank_column_count(1, 1, &[(1, 1)], false), 2 + 2 + 1 + 1);
        assert_eq!(low_rank_column_count(0, 2, &[(1, 1)], false), 2 + 1);
    }

    #[test]
    fn reported_count_matches_closed_form() {
        let sys = random_rc(60, 2, 5);
        for simplified in [false, true] {
            let mut s = spec(3, 1);
            s.simplified = simplified;
            let red = reduce_low_rank(&sys, &s).unwrap();
            let r = &red.model.provenance.svd_ranks;
            let pairs: Vec<(usize, usize)> = r.chunks(2).map(|c| (c[0], c[1])).collect();
            assert_eq!(
                red.pre_deflation_columns,
                low_rank_column_count(3, 1, &pairs, simplified)
            );
            assert_eq!(red.stats.factorizations, 1);
        }
    }

    #[test]
    fn no_parameters_equals_prima() {
        let sys = random_rc(20, 0, 1);
        let a = reduce_low_rank(&sys, &spec(3, 1)).unwrap();
        let b = reduce_prima(&sys, &ReductionSpec::new(Engine::Prima, 3)).unwrap();
        assert_eq!(a.model.basis, b.model.basis);
    }

    #[test]
    fn exact_rank_one_sensitivity_matches_original_moments() {
        // One resistor to ground carries the parameter: G1 has rank one, C1 = 0.
        let mut s = String::from(".param w\nP1 1 0\n");
        let n = 30;
        for i in 1..=n {
            let next = if i == n { 0 } else { i + 1 };
            s += &format!(
                "R{i} {i} {next} {}\nC{i} {i} 0 {}\n",
                1.0 + 0.1 * (i % 3) as f64,
                0.5 + 0.02 * i as f64
            );
        }
        s += "RW 12 0 4 SENSG w=0.3\n";
        let sys = load(&s).unwrap();
        let red = reduce_low_rank(&sys, &spec(3, 1)).unwrap();
        assert_eq!(red.model.provenance.svd_ranks, vec![1, 0]);
        assert!(moment_error(&sys, &red, 3) < 1e-8);
    }

    #[test]
    fn full_rank_factors_are_exact() {
        let sys = random_rc(40, 2, 11);
        let red = reduce_low_rank(&sys, &spec(2, 40)).unwrap();
        assert!(moment_error(&sys, &red, 2) < 1e-8);
    }

    #[test]
    fn contains_nominal_krylov_space() {
        let sys = random_rc(60, 2, 6);
        let red = reduce_low_rank(&sys, &spec(3, 1)).unwrap();
        let prima = reduce_prima(&sys, &ReductionSpec::new(Engine::Prima, 3)).unwrap();
        let v = &red.model.basis;
        let w = &prima.model.basis;
        let resid = w - v * (v.transpose() * w);
        assert!(resid.amax() < 1e-10);
    }

    #[test]
    fn zero_c_sensitivity_skipped() {
        let sys = random_rc(30, 1, 2);
        let mut src = sys.clone();
        src.sens[0].c = SparseMatrix::zeros(30, 30);
        let red = reduce_low_rank(&src, &spec(2, 1)).unwrap();
        assert_eq!(red.model.provenance.svd_ranks, vec![1, 0]);
        assert_eq!(red.model.factors.len(), 1);
        assert_eq!(red.pre_deflation_columns, 3 + 3 + 2);
    }
}
