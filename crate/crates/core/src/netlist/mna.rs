//! Modified nodal analysis stamping into an affine-parametric system
//! `G(p) = G0 + Σ pᵢ·Gᵢ`, `C(p) = C0 + Σ pᵢ·Cᵢ`.
//!
//! Unknowns are node voltages in node-table order followed by inductor branch
//! currents in declaration order. Ports inject current and observe voltage,
//! so `B = L`.

use std::collections::HashMap;

use super::parse::{ElementKind, NetlistAst, GROUND};
use crate::numkern::SparseMatrix;

/// First-order sensitivity matrices for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub g: SparseMatrix,
    pub c: SparseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSystem {
    pub g0: SparseMatrix,
    pub c0: SparseMatrix,
    pub sens: Vec<Sensitivity>,
    pub b: SparseMatrix,
    pub l: SparseMatrix,
    /// Name of each unknown: node names, then `I(<inductor>)`.
    pub unknowns: Vec<String>,
    pub params: Vec<String>,
    pub ports: Vec<String>,
}

impl ParametricSystem {
    pub fn n(&self) -> usize {
        self.g0.n_rows()
    }

    pub fn m(&self) -> usize {
        self.b.n_cols()
    }

    pub fn n_p(&self) -> usize {
        self.sens.len()
    }

    pub fn unknown_name(&self, i: usize) -> Option<&str> {
        self.unknowns.get(i).map(String::as_str)
    }

    /// True when the system has no inductor branch unknowns.
    pub fn is_rc(&self) -> bool {
        !self.unknowns.iter().any(|u| u.starts_with("I("))
    }

    /// Groups of unknowns that have no DC connection to ground.
    ///
    /// Connectivity follows the pattern of `G0`; a connected component is
    /// grounded when some row in it has a non-zero row sum (a path to the
    /// reference node).
    pub fn floating_nodes(&self) -> Vec<String> {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut row_sum = vec![0.0f64; n];
        let mut row_scale = vec![0.0f64; n];
        for (i, j, v) in self.g0.triplets() {
            row_sum[i] += v;
            row_scale[i] = row_scale[i].max(v.abs());
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
            }
        }
        let mut grounded: HashMap<usize, bool> = HashMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            let g = row_sum[i].abs() > 1e-12 * row_scale[i];
            *grounded.entry(root).or_insert(false) |= g;
        }
        (0..n)
            .filter(|&i| {
                let root = find(&mut parent, i);
                !grounded[&root]
            })
            .map(|i| self.unknowns[i].clone())
            .collect()
    }
}

struct Stamper {
    n: usize,
    g0: Vec<(usize, usize, f64)>,
    c0: Vec<(usize, usize, f64)>,
    gi: Vec<Vec<(usize, usize, f64)>>,
    ci: Vec<Vec<(usize, usize, f64)>>,
}

/// Two-terminal conductance-like stencil; `None` is ground.
fn two_terminal(t: &mut Vec<(usize, usize, f64)>, a: Option<usize>, b: Option<usize>, v: f64) {
    if let Some(a) = a {
        t.push((a, a, v));
    }
    if let Some(b) = b {
        t.push((b, b, v));
    }
    if let (Some(a), Some(b)) = (a, b) {
        t.push((a, b, -v));
        t.push((b, a, -v));
    }
}

/// Branch-current incidence for an inductor with current unknown `k`.
fn incidence(t: &mut Vec<(usize, usize, f64)>, a: Option<usize>, b: Option<usize>, k: usize) {
    if let Some(a) = a {
        t.push((a, k, 1.0));
        t.push((k, a, -1.0));
    }
    if let Some(b) = b {
        t.push((b, k, -1.0));
        t.push((k, b, 1.0));
    }
}

impl Stamper {
    fn finish(self) -> (SparseMatrix, SparseMatrix, Vec<Sensitivity>) {
        let n = self.n;
        let sens = self
            .gi
            .into_iter()
            .zip(self.ci)
            .map(|(g, c)| Sensitivity {
                g: SparseMatrix::from_triplets(n, n, g),
                c: SparseMatrix::from_triplets(n, n, c),
            })
            .collect();
        (
            SparseMatrix::from_triplets(n, n, self.g0),
            SparseMatrix::from_triplets(n, n, self.c0),
            sens,
        )
    }
}

/// Stamps a parsed netlist into its parametric MNA system.
pub fn stamp_mna(ast: &NetlistAst) -> ParametricSystem {
    let node_index: HashMap<&str, usize> = ast.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let idx = |name: &str| -> Option<usize> {
        if name == GROUND {
            None
        } else {
            Some(node_index[name])
        }
    };

    let mut unknowns = ast.nodes.clone();
    let mut branch: HashMap<String, usize> = HashMap::new();
    for e in ast.elements.iter().filter(|e| e.kind == ElementKind::L) {
        branch.insert(e.name.to_ascii_uppercase(), unknowns.len());
        unknowns.push(format!("I({})", e.name));
    }
    let n = unknowns.len();
    let n_p = ast.params.len();
    let mut st = Stamper {
        n,
        g0: Vec::new(),
        c0: Vec::new(),
        gi: vec![Vec::new(); n_p],
        ci: vec![Vec::new(); n_p],
    };

    for e in &ast.elements {
        let (a, b) = (idx(&e.nodes.0), idx(&e.nodes.1));
        match e.kind {
            ElementKind::R => {
                two_terminal(&mut st.g0, a, b, 1.0 / e.nominal);
                for &(i, coef) in &e.sens {
                    two_terminal(&mut st.gi[i], a, b, coef);
                }
            }
            ElementKind::C => {
                two_terminal(&mut st.c0, a, b, e.nominal);
                for &(i, coef) in &e.sens {
                    two_terminal(&mut st.ci[i], a, b, coef);
                }
            }
            ElementKind::L => {
                let k = branch[&e.name.to_ascii_uppercase()];
                incidence(&mut st.g0, a, b, k);
                st.c0.push((k, k, e.nominal));
                for &(i, coef) in &e.sens {
                    st.ci[i].push((k, k, coef));
                }
            }
        }
    }
    for k in &ast.couplings {
        let ka = branch[&k.inductors.0.to_ascii_uppercase()];
        let kb = branch[&k.inductors.1.to_ascii_uppercase()];
        st.c0.push((ka, kb, k.mutual));
        st.c0.push((kb, ka, k.mutual));
    }

    let m = ast.ports.len();
    let mut bt = Vec::new();
    for (j, p) in ast.ports.iter().enumerate() {
        if let Some(a) = idx(&p.nodes.0) {
            bt.push((a, j, 1.0));
        }
        if let Some(b) = idx(&p.nodes.1) {
            bt.push((b, j, -1.0));
        }
    }
    let b = SparseMatrix::from_triplets(n, m, bt);
    let (g0, c0, sens) = st.finish();
    ParametricSystem {
        g0,
        c0,
        sens,
        l: b.clone(),
        b,
        unknowns,
        params: ast.params.clone(),
        ports: ast.ports.iter().map(|p| p.name.clone()).collect(),
    }
}
