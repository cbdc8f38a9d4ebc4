//! Fixtures shared by the criterion benchmarks.

use parmor_core::analysis::{gen_bench, BenchSpec};
use parmor_core::{load, ParametricSystem};

/// The named synthetic circuits the benchmarks run on.
pub fn fixtures() -> Vec<(&'static str, ParametricSystem)> {
    let specs = [
        (
            "ladder_767",
            BenchSpec::RcLadder {
                n: 767,
                ports: 1,
                params: 2,
                seed: 7,
            },
        ),
        (
            "mesh_30x30",
            BenchSpec::RcMesh {
                rows: 30,
                cols: 30,
                ports: 2,
                params: 2,
                seed: 2,
            },
        ),
        (
            "bus_2x180",
            BenchSpec::CoupledRlcBus {
                lines: 2,
                segs: 180,
                params: 2,
                seed: 3,
            },
        ),
    ];
    specs
        .into_iter()
        .map(|(name, spec)| (name, load(&gen_bench(&spec)).expect("generated decks load")))
        .collect()
}
