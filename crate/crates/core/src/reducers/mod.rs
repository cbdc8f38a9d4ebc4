//! Reduction engines. Each one builds an orthonormal basis `V` and returns
//! the congruence projection of the full parametric system onto it.

mod low_rank;
mod multi_point;
mod preservation;
mod prima;
mod single_point;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::ParametricSystem;
use crate::numkern::stats::Op;
use crate::numkern::{lu_factor, Counters, LuFactors, OpStats, SparseMatrix, DEFAULT_DEFL_TOL};
use crate::sysmodel::{project, ParameterPoint, ReducedModel};

pub use low_rank::{low_rank_column_count, reduce_low_rank};
pub use multi_point::{grid_samples, multi_point_column_count, reduce_multi_point};
pub use preservation::{nearby_system, verify_moment_preservation, PreservationReport, PRESERVATION_TOL};
pub use prima::reduce_prima;
pub use single_point::{reduce_single_point, single_point_column_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Prima,
    SinglePoint,
    MultiPoint,
    LowRank,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Prima => "prima",
            Engine::SinglePoint => "single_point",
            Engine::MultiPoint => "multi_point",
            Engine::LowRank => "low_rank",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prima" => Ok(Engine::Prima),
            "single_point" => Ok(Engine::SinglePoint),
            "multi_point" => Ok(Engine::MultiPoint),
            "low_rank" => Ok(Engine::LowRank),
            other => Err(Error::InvalidSpec(format!("unknown engine `{other}`"))),
        }
    }
}

/// Everything needed to rerun a reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionSpec {
    pub engine: Engine,
    /// Highest s-moment order matched.
    pub k: usize,
    /// Per-parameter order cap for the single-point engine (defaults to `k`).
    pub k_param: Option<usize>,
    /// Total-degree truncation for the single-point engine (defaults to `k`).
    pub total_order: Option<usize>,
    /// Expansion points for the multi-point engine.
    pub samples: Vec<ParameterPoint>,
    /// Rank kept per sensitivity matrix by the low-rank engine.
    pub svd_rank: usize,
    /// Replace the transposed Krylov blocks by the right singular vectors.
    pub simplified: bool,
    pub defl_tol: f64,
    pub seed: u64,
    pub svd_oversample: usize,
    pub svd_power_iters: usize,
}

impl Default for ReductionSpec {
    fn default() -> Self {
        Self {
            engine: Engine::LowRank,
            k: 4,
            k_param: None,
            total_order: None,
            samples: Vec::new(),
            svd_rank: 1,
            simplified: false,
            defl_tol: DEFAULT_DEFL_TOL,
            seed: 0,
            svd_oversample: crate::numkern::svd::DEFAULT_OVERSAMPLE,
            svd_power_iters: crate::numkern::svd::DEFAULT_POWER_ITERS,
        }
    }
}

impl ReductionSpec {
    pub fn new(engine: Engine, k: usize) -> Self {
        Self {
            engine,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self, n_p: usize) -> Result<()> {
        if self.svd_rank == 0 {
            return Err(Error::InvalidSpec("svd_rank must be at least 1".into()));
        }
        if !(self.defl_tol > 0.0 && self.defl_tol < 1.0) {
            return Err(Error::InvalidSpec("defl_tol must lie in (0, 1)".into()));
        }
        if self.engine == Engine::MultiPoint {
            if self.samples.is_empty() {
                return Err(Error::InvalidSpec("multi_point needs at least one sample".into()));
            }
            if let Some(bad) = self.samples.iter().position(|s| s.len() != n_p) {
                return Err(Error::InvalidSpec(format!(
                    "sample {bad} has {} values, system has {n_p} parameters",
                    self.samples[bad].len()
                )));
            }
        }
        Ok(())
    }
}

/// Result of one reduction run.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub model: ReducedModel,
    /// Operations performed by this run only.
    pub stats: OpStats,
    pub pre_deflation_columns: usize,
    pub warnings: Vec<String>,
}

/// Runs the engine selected by `spec`.
pub fn reduce(sys: &ParametricSystem, spec: &ReductionSpec) -> Result<Reduction> {
    match spec.engine {
        Engine::Prima => reduce_prima(sys, spec),
        Engine::SinglePoint => reduce_single_point(sys, spec),
        Engine::MultiPoint => reduce_multi_point(sys, spec),
        Engine::LowRank => reduce_low_rank(sys, spec),
    }
}

/// Factors `g`, translating a zero pivot into the unknown name or the
/// floating subnetwork responsible.
pub(crate) fn factor(sys: &ParametricSystem, g: &SparseMatrix, counters: &Counters) -> Result<LuFactors> {
    lu_factor(g, counters).map_err(|e| match e {
        Error::SingularPivot { column, .. } => {
            let nodes = sys.floating_nodes();
            if nodes.is_empty() {
                Error::SingularPivot {
                    column,
                    unknown: sys.unknown_name(column).map(str::to_owned),
                }
            } else {
                Error::FloatingSubnetwork { nodes }
            }
        }
        other => other,
    })
}

/// Operators built on one factorization of a conductance matrix.
pub(crate) struct Factored<'a> {
    pub lu: LuFactors,
    pub c: &'a SparseMatrix,
    pub b: DMatrix<f64>,
    pub counters: Counters,
}

impl Factored<'_> {
    /// `G⁻¹B`.
    pub fn r0(&self) -> DMatrix<f64> {
        self.lu.solve(&self.b)
    }

    /// `X ↦ −G⁻¹C·X`.
    pub fn a(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.counters.bump(Op::OperatorApplication, 1);
        -self.lu.solve(&self.c.mul_dense(x))
    }

    /// `X ↦ −G⁻ᵀCᵀ·X`.
    pub fn a_t(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.counters.bump(Op::OperatorApplication, 1);
        -self.lu.solve_transpose(&self.c.tr_mul_dense(x))
    }

    /// `X ↦ −G⁻¹S·X`.
    pub fn sens(&self, s: &SparseMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.counters.bump(Op::OperatorApplication, 1);
        -self.lu.solve(&s.mul_dense(x))
    }

    /// `X ↦ (−G⁻¹S)ᵀ·X = −Sᵀ·G⁻ᵀX`.
    pub fn sens_t(&self, s: &SparseMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.counters.bump(Op::OperatorApplication, 1);
        -s.tr_mul_dense(&self.lu.solve_transpose(x))
    }
}

pub(crate) fn factor_nominal<'a>(sys: &'a ParametricSystem, counters: &Counters) -> Result<Factored<'a>> {
    Ok(Factored {
        lu: factor(sys, &sys.g0, counters)?,
        c: &sys.c0,
        b: sys.b.to_dense(),
        counters: counters.clone(),
    })
}

/// Projects and fills in provenance.
pub(crate) fn finish(
    sys: &ParametricSystem,
    spec: &ReductionSpec,
    basis: DMatrix<f64>,
    pre_deflation_columns: usize,
    counters: &Counters,
    mut warnings: Vec<String>,
) -> Result<Reduction> {
    if pre_deflation_columns > sys.n() / 2 && sys.n() > 0 {
        warnings.push(format!(
            "basis generation offered {pre_deflation_columns} columns for a system of order {}; \
             the reduced model may not be much smaller than the original",
            sys.n()
        ));
    }
    let mut model = project(sys, &basis)?;
    model.provenance.engine = spec.engine.name().into();
    model.provenance.spec = Some(spec.clone());
    model.provenance.pre_deflation_columns = pre_deflation_columns;
    Ok(Reduction {
        model,
        stats: counters.snapshot(),
        pre_deflation_columns,
        warnings,
    })
}
