//! Operation counters for the cost model.
//!
//! Every [`Counters`] handle also feeds a process-wide tally, so both a
//! per-run view (used by the reducers and their tests) and a global view
//! (used by long-running tools) are available.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Snapshot of instrumentation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub factorizations: u64,
    pub solves: u64,
    pub transpose_solves: u64,
    pub operator_applications: u64,
}

impl std::ops::Add for OpStats {
    type Output = OpStats;

    fn add(self, o: OpStats) -> OpStats {
        OpStats {
            factorizations: self.factorizations + o.factorizations,
            solves: self.solves + o.solves,
            transpose_solves: self.transpose_solves + o.transpose_solves,
            operator_applications: self.operator_applications + o.operator_applications,
        }
    }
}

#[derive(Debug, Default)]
struct Cells {
    factorizations: AtomicU64,
    solves: AtomicU64,
    transpose_solves: AtomicU64,
    operator_applications: AtomicU64,
}

impl Cells {
    const fn new() -> Self {
        Self {
            factorizations: AtomicU64::new(0),
            solves: AtomicU64::new(0),
            transpose_solves: AtomicU64::new(0),
            operator_applications: AtomicU64::new(0),
        }
    }

    fn snapshot(&self) -> OpStats {
        OpStats {
            factorizations: self.factorizations.load(Ordering::Relaxed),
            solves: self.solves.load(Ordering::Relaxed),
            transpose_solves: self.transpose_solves.load(Ordering::Relaxed),
            operator_applications: self.operator_applications.load(Ordering::Relaxed),
        }
    }
}

static GLOBAL: Cells = Cells::new();

/// Process-wide totals since startup.
pub fn global() -> OpStats {
    GLOBAL.snapshot()
}

/// Shared counter handle. Clones observe and update the same counts.
#[derive(Debug, Clone, Default)]
pub struct Counters(Arc<Cells>);

#[derive(Clone, Copy)]
pub(crate) enum Op {
    Factorization,
    Solve,
    TransposeSolve,
    OperatorApplication,
}

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OpStats {
        self.0.snapshot()
    }

    pub(crate) fn bump(&self, op: Op, by: u64) {
        fn cell(c: &Cells, op: Op) -> &AtomicU64 {
            match op {
                Op::Factorization => &c.factorizations,
                Op::Solve => &c.solves,
                Op::TransposeSolve => &c.transpose_solves,
                Op::OperatorApplication => &c.operator_applications,
            }
        }
        cell(&self.0, op).fetch_add(by, Ordering::Relaxed);
        cell(&GLOBAL, op).fetch_add(by, Ordering::Relaxed);
    }
}
