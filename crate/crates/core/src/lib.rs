//! Parametric model order reduction for affine RC/RLC interconnect models.

pub mod analysis;
pub mod dense_io;
pub mod error;
pub mod netlist;
pub mod numkern;
pub mod reducers;
pub mod sysmodel;

pub use error::{Error, Result};
pub use netlist::{load, ParametricSystem};
pub use numkern::{LowRankFactor, OpStats};
pub use reducers::{reduce, Engine, Reduction, ReductionSpec};
pub use sysmodel::{project, DenseSystem, ParameterPoint, ReducedModel};
