//! Numerical kernels shared by the reduction engines: sparse LU with
//! transpose solves, block Krylov basis construction, and the
//! matrix-implicit truncated SVD.

pub mod krylov;
pub mod lu;
pub mod sparse;
pub mod stats;
pub mod svd;

pub use krylov::{
    block_orthonormalize, krylov_basis, krylov_block, orthonormality_error, OrthoBasis, DEFAULT_DEFL_TOL,
};
pub use lu::{lu_factor, lu_factor_ordered, min_degree_ordering, LuFactors};
pub use sparse::SparseMatrix;
pub use stats::{Counters, OpStats};
pub use svd::{implicit_truncated_svd, FactorTarget, LowRankFactor, SensitivityKind, SvdOptions};
