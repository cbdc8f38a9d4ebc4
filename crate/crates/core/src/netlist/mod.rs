//! Netlist front-end: parsing and MNA stamping.

mod mna;
mod parse;

pub use mna::{stamp_mna, ParametricSystem, Sensitivity};
pub use parse::{parse_netlist, parse_value, Coupling, Element, ElementKind, NetlistAst, Port, GROUND};

/// Parses and stamps in one step.
pub fn load(text: &str) -> crate::Result<ParametricSystem> {
    Ok(stamp_mna(&parse_netlist(text)?))
}
