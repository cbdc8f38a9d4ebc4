//! Synthetic benchmark netlists.
//!
//! Parameters are fractional variations: an element with nominal value `x`
//! and weight `w` for parameter `pᵢ` has value `x·(1 + w·pᵢ)`, so `pᵢ = 0.3`
//! is a 30% change on fully weighted elements. Resistors vary through their
//! conductance, so wider wires (`pᵢ > 0`) conduct more and carry more
//! capacitance.
//!
//! Unknown counts (node voltages plus inductor branch currents):
//!
//! | kind              | unknowns                                   |
//! |-------------------|--------------------------------------------|
//! | `rc_ladder`       | `n`                                        |
//! | `rc_mesh`         | `rows·cols`                                |
//! | `coupled_rlc_bus` | `lines·(3·segs + 1)`                       |
//! | `rc_tree`         | `1 + segs_per_edge·Σ_{ℓ=1..depth} fanout^ℓ` |

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchSpec {
    /// `n` nodes in series, one capacitor per node, terminated to ground at
    /// the far end. Parameter `i` covers the `i`-th of `params` equal
    /// stretches of the line.
    RcLadder {
        n: usize,
        ports: usize,
        params: usize,
        seed: u64,
    },
    /// Resistive grid with a capacitor per node, grounded at the far
    /// corner. Parameter `i` covers the `i`-th band of columns.
    RcMesh {
        rows: usize,
        cols: usize,
        ports: usize,
        params: usize,
        seed: u64,
    },
    /// Parallel RLC lines with capacitive and inductive coupling between
    /// neighbours; ports at the near end of every line, then the far ends.
    /// Parameter `i` covers the `i`-th band of segments.
    CoupledRlcBus {
        lines: usize,
        segs: usize,
        params: usize,
        seed: u64,
    },
    /// Clock-tree-like RC tree driven at the root. Edges at tree level `ℓ`
    /// (1-based) are routed on layer `(ℓ−1) mod params`, and each parameter
    /// is the width of one layer.
    RcTree {
        depth: usize,
        fanout: usize,
        segs_per_edge: usize,
        params: usize,
        seed: u64,
    },
}

impl BenchSpec {
    pub fn unknown_count(&self) -> usize {
        match *self {
            BenchSpec::RcLadder { n, .. } => n,
            BenchSpec::RcMesh { rows, cols, .. } => rows * cols,
            BenchSpec::CoupledRlcBus { lines, segs, .. } => lines * (3 * segs + 1),
            BenchSpec::RcTree {
                depth,
                fanout,
                segs_per_edge,
                ..
            } => 1 + segs_per_edge * (1..=depth).map(|l| fanout.pow(l as u32)).sum::<usize>(),
        }
    }
}

struct Deck {
    params: usize,
    body: String,
    ports: String,
    count: usize,
}

impl Deck {
    fn new(params: usize) -> Self {
        Self {
            params,
            body: String::new(),
            ports: String::new(),
            count: 0,
        }
    }

    fn port(&mut self, a: &str) {
        let k = self.ports.lines().count() + 1;
        let _ = writeln!(self.ports, "P{k} {a} 0");
    }

    /// `sens` holds `(parameter, weight)`; the coefficient written is
    /// `weight × nominal` in the element's natural unit.
    fn element(&mut self, kind: char, a: &str, b: &str, value: f64, sens: &[(usize, f64)]) -> String {
        self.count += 1;
        let name = format!("{kind}{}", self.count);
        let _ = write!(self.body, "{name} {a} {b} {value:e}");
        let natural = if kind == 'R' { 1.0 / value } else { value };
        let sens: Vec<_> = sens.iter().filter(|s| s.1 != 0.0).collect();
        if !sens.is_empty() {
            let kw = match kind {
                'R' => "SENSG",
                'C' => "SENSC",
                _ => "SENSL",
            };
            let _ = write!(self.body, " {kw}");
            for &&(i, w) in &sens {
                let _ = write!(self.body, " p{}={:e}", i + 1, w * natural);
            }
        }
        self.body.push('\n');
        name
    }

    fn coupling(&mut self, la: &str, lb: &str, m: f64) {
        self.count += 1;
        let _ = writeln!(self.body, "K{} {la} {lb} {m:e}", self.count);
    }

    fn finish(self) -> String {
        let mut out = String::new();
        if self.params > 0 {
            let names: Vec<String> = (1..=self.params).map(|i| format!("p{i}")).collect();
            let _ = writeln!(out, ".param {}", names.join(" "));
        }
        out + &self.ports + &self.body
    }
}

/// Index of the band that position `i` of `len` falls in.
fn band(i: usize, len: usize, bands: usize) -> usize {
    (i * bands / len.max(1)).min(bands.saturating_sub(1))
}

fn jitter(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.8..1.2)
}

pub fn gen_bench(spec: &BenchSpec) -> String {
    match *spec {
        BenchSpec::RcLadder { n, ports, params, seed } => rc_ladder(n, ports, params, seed),
        BenchSpec::RcMesh {
            rows,
            cols,
            ports,
            params,
            seed,
        } => rc_mesh(rows, cols, ports, params, seed),
        BenchSpec::CoupledRlcBus {
            lines,
            segs,
            params,
            seed,
        } => coupled_rlc_bus(lines, segs, params, seed),
        BenchSpec::RcTree {
            depth,
            fanout,
            segs_per_edge,
            params,
            seed,
        } => rc_tree(depth, fanout, segs_per_edge, params, seed),
    }
}

/// Width sensitivity: conductance follows width, capacitance partly does.
const CAP_WIDTH_FRACTION: f64 = 0.6;

fn rc_ladder(n: usize, ports: usize, params: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Deck::new(params);
    let n = n.max(1);
    for j in 0..ports.clamp(1, n) {
        d.port(&(1 + j * n / ports.clamp(1, n)).to_string());
    }
    for i in 1..=n {
        let w: Vec<(usize, f64)> = if params > 0 {
            vec![(band(i - 1, n, params), jitter(&mut rng))]
        } else {
            Vec::new()
        };
        let wc: Vec<(usize, f64)> = w.iter().map(|&(p, x)| (p, CAP_WIDTH_FRACTION * x)).collect();
        let next = if i == n { "0".to_string() } else { (i + 1).to_string() };
        let r = if i == n { 1e3 } else { 10.0 * jitter(&mut rng) };
        let rw: &[(usize, f64)] = if i == n { &[] } else { &w };
        d.element('R', &i.to_string(), &next, r, rw);
        d.element('C', &i.to_string(), "0", 1e-15 * jitter(&mut rng), &wc);
    }
    d.finish()
}

fn rc_mesh(rows: usize, cols: usize, ports: usize, params: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Deck::new(params);
    let (rows, cols) = (rows.max(1), cols.max(1));
    let node = |r: usize, c: usize| format!("m{r}_{c}");
    for j in 0..ports.clamp(1, cols) {
        d.port(&node(0, j * cols / ports.clamp(1, cols)));
    }
    for r in 0..rows {
        for c in 0..cols {
            let w: Vec<(usize, f64)> = if params > 0 {
                vec![(band(c, cols, params), jitter(&mut rng))]
            } else {
                Vec::new()
            };
            let wc: Vec<(usize, f64)> = w.iter().map(|&(p, x)| (p, CAP_WIDTH_FRACTION * x)).collect();
            if c + 1 < cols {
                d.element('R', &node(r, c), &node(r, c + 1), 10.0 * jitter(&mut rng), &w);
            }
            if r + 1 < rows {
                d.element('R', &node(r, c), &node(r + 1, c), 10.0 * jitter(&mut rng), &w);
            }
            d.element('C', &node(r, c), "0", 1e-15 * jitter(&mut rng), &wc);
        }
    }
    d.element('R', &node(rows - 1, cols - 1), "0", 1e3, &[]);
    d.finish()
}

/// Per-segment line values.
const BUS_R: f64 = 0.5;
const BUS_L: f64 = 50e-12;
const BUS_CG: f64 = 4e-15;
const BUS_CC: f64 = 2e-15;
const BUS_K: f64 = 0.3;
const BUS_DRIVER: f64 = 50.0;
const BUS_LOAD: f64 = 1e3;

fn coupled_rlc_bus(lines: usize, segs: usize, params: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Deck::new(params);
    let (lines, segs) = (lines.max(1), segs.max(1));
    let main = |l: usize, k: usize| format!("b{l}_{k}");
    let mid = |l: usize, k: usize| format!("b{l}_{k}m");
    for l in 0..lines {
        d.port(&main(l, 0));
    }
    for l in 0..lines {
        d.port(&main(l, segs));
    }
    let mut inductors: Vec<Vec<String>> = vec![Vec::new(); lines];
    for l in 0..lines {
        d.element('R', &main(l, 0), "0", BUS_DRIVER, &[]);
        d.element('R', &main(l, segs), "0", BUS_LOAD, &[]);
        for k in 0..=segs {
            let b = band(k.min(segs - 1), segs, params.max(1));
            let w = if params > 0 { jitter(&mut rng) } else { 0.0 };
            let end = if k == 0 || k == segs { 0.5 } else { 1.0 };
            d.element(
                'C',
                &main(l, k),
                "0",
                end * BUS_CG * jitter(&mut rng),
                &[(b, CAP_WIDTH_FRACTION * w)],
            );
            if k == segs {
                break;
            }
            d.element('R', &main(l, k), &mid(l, k + 1), BUS_R * jitter(&mut rng), &[(b, w)]);
            // Wider lines have slightly lower inductance.
            let ind = d.element(
                'L',
                &mid(l, k + 1),
                &main(l, k + 1),
                BUS_L * jitter(&mut rng),
                &[(b, -0.2 * w)],
            );
            inductors[l].push(ind);
        }
    }
    for l in 0..lines.saturating_sub(1) {
        for k in 0..=segs {
            let b = band(k.min(segs - 1), segs, params.max(1));
            let w = if params > 0 { jitter(&mut rng) } else { 0.0 };
            let end = if k == 0 || k == segs { 0.5 } else { 1.0 };
            // Wider lines sit closer together.
            d.element(
                'C',
                &main(l, k),
                &main(l + 1, k),
                end * BUS_CC * jitter(&mut rng),
                &[(b, w)],
            );
        }
        for k in 0..segs {
            d.coupling(&inductors[l][k], &inductors[l + 1][k], BUS_K * BUS_L);
        }
    }
    d.finish()
}

fn rc_tree(depth: usize, fanout: usize, segs_per_edge: usize, params: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Deck::new(params);
    let segs = segs_per_edge.max(1);
    let fanout = fanout.max(1);
    d.port("t0");
    d.element('R', "t0", "0", 100.0, &[]);
    let mut frontier = vec!["t0".to_string()];
    let mut next_id = 1;
    for level in 1..=depth {
        let layer = if params > 0 { Some((level - 1) % params) } else { None };
        let mut children = Vec::new();
        for parent in &frontier {
            for _ in 0..fanout {
                let mut prev = parent.clone();
                for _ in 0..segs {
                    let node = format!("t{next_id}");
                    next_id += 1;
                    // Deeper levels use narrower wires.
                    let scale = 1.0 / (1.0 + level as f64 * 0.5);
                    let w: Vec<(usize, f64)> = layer.map(|p| (p, 1.0)).into_iter().collect();
                    let wc: Vec<(usize, f64)> = layer.map(|p| (p, CAP_WIDTH_FRACTION)).into_iter().collect();
                    d.element('R', &prev, &node, 20.0 * jitter(&mut rng) / scale, &w);
                    d.element('C', &node, "0", 2e-15 * jitter(&mut rng) * scale, &wc);
                    prev = node;
                }
                if level == depth {
                    d.element('C', &prev, "0", 5e-15 * jitter(&mut rng), &[]);
                }
                children.push(prev);
            }
        }
        frontier = children;
    }
    d.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{load, parse_netlist, ElementKind};

    fn all_specs() -> Vec<BenchSpec> {
        vec![
            BenchSpec::RcLadder {
                n: 40,
                ports: 2,
                params: 2,
                seed: 1,
            },
            BenchSpec::RcMesh {
                rows: 5,
                cols: 7,
                ports: 2,
                params: 3,
                seed: 2,
            },
            BenchSpec::CoupledRlcBus {
                lines: 2,
                segs: 10,
                params: 2,
                seed: 3,
            },
            BenchSpec::RcTree {
                depth: 3,
                fanout: 2,
                segs_per_edge: 2,
                params: 3,
                seed: 4,
            },
        ]
    }

    #[test]
    fn unknown_counts_match_stamped_systems() {
        for spec in all_specs() {
            let sys = load(&gen_bench(&spec)).unwrap();
            assert_eq!(sys.n(), spec.unknown_count(), "{spec:?}");
            assert!(sys.floating_nodes().is_empty());
        }
        let bus = BenchSpec::CoupledRlcBus {
            lines: 2,
            segs: 180,
            params: 2,
            seed: 0,
        };
        let sys = load(&gen_bench(&bus)).unwrap();
        assert_eq!(sys.n(), 2 * (3 * 180 + 1));
        assert_eq!(sys.m(), 4);
    }

    #[test]
    fn tiny_ladder() {
        let ast = parse_netlist(&gen_bench(&BenchSpec::RcLadder {
            n: 3,
            ports: 1,
            params: 0,
            seed: 0,
        }))
        .unwrap();
        assert_eq!(ast.count(ElementKind::R), 3);
        assert_eq!(ast.count(ElementKind::C), 3);
        assert_eq!(
            load(&gen_bench(&BenchSpec::RcLadder {
                n: 1,
                ports: 1,
                params: 0,
                seed: 0
            }))
            .unwrap()
            .n(),
            1
        );
    }

    #[test]
    fn deterministic() {
        for spec in all_specs() {
            assert_eq!(gen_bench(&spec), gen_bench(&spec));
        }
    }

    #[test]
    fn tree_layers_are_disjoint() {
        let spec = BenchSpec::RcTree {
            depth: 5,
            fanout: 2,
            segs_per_edge: 1,
            params: 3,
            seed: 0,
        };
        let sys = load(&gen_bench(&spec)).unwrap();
        assert_eq!(sys.n_p(), 3);
        let support =
            |i: usize| -> std::collections::BTreeSet<usize> { sys.sens[i].g.triplets().map(|(r, _, _)| r).collect() };
        for i in 0..3 {
            assert!(!sys.sens[i].g.is_zero());
            assert!(!sys.sens[i].c.is_zero());
        }
        // Conductance stencils share junction nodes between levels, but the
        // element sets are disjoint, so no entry is shared by all three.
        let ast = parse_netlist(&gen_bench(&spec)).unwrap();
        for e in &ast.elements {
            assert!(e.sens.len() <= 1);
        }
        let s0 = support(0);
        let s1 = support(1);
        assert!(s0.len() < sys.n() && s1.len() < sys.n());
    }
}
