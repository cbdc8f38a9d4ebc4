//! Parametric system assembly, reduced models, and congruence projection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::ParametricSystem;
use crate::numkern::{orthonormality_error, LowRankFactor, SparseMatrix};
use crate::reducers::ReductionSpec;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Tolerance on `‖VᵀV − I‖_max` accepted by [`project`].
pub const PROJECT_ORTHO_TOL: f64 = 1e-8;

/// A point `(p₁, …, p_np)` in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn nominal(n_p: usize) -> Self {
        Self(vec![0.0; n_p])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(self.0.iter().map(|v| v * a).collect())
    }

    /// Parses `name=value[,name=value...]`. Unlisted parameters default to 0.
    pub fn parse(text: &str, names: &[String]) -> Result<Self> {
        let mut values = vec![0.0; names.len()];
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, val) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected name=value, got `{item}`")))?;
            let idx = names
                .iter()
                .position(|n| n == name.trim())
                .ok_or_else(|| Error::InvalidSpec(format!("unknown parameter `{name}`")))?;
            values[idx] = val
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad value in `{item}`")))?;
        }
        Ok(Self(values))
    }

    fn check(&self, n_p: usize) -> Result<()> {
        if self.0.len() != n_p {
            return Err(Error::Dimension(format!(
                "parameter point has {} entries, system has {n_p} parameters",
                self.0.len()
            )));
        }
        Ok(())
    }
}

/// Dense affine-parametric system. Used for reduced models and for the
/// brute-force oracles on small full systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSystem {
    #[serde(with = "crate::dense_io")]
    pub g0: DMatrix<f64>,
    #[serde(with = "crate::dense_io")]
    pub c0: DMatrix<f64>,
    #[serde(with = "crate::dense_io::vec")]
    pub g: Vec<DMatrix<f64>>,
    #[serde(with = "crate::dense_io::vec")]
    pub c: Vec<DMatrix<f64>>,
    #[serde(with = "crate::dense_io")]
    pub b: DMatrix<f64>,
    #[serde(with = "crate::dense_io")]
    pub l: DMatrix<f64>,
}

impl DenseSystem {
    pub fn n(&self) -> usize {
        self.g0.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_p(&self) -> usize {
        self.g.len()
    }

    /// `(G(p), C(p))`.
    pub fn assemble_at(&self, p: &ParameterPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        p.check(self.n_p())?;
        let mut g = self.g0.clone();
        let mut c = self.c0.clone();
        for (i, &pi) in p.values().iter().enumerate() {
            if pi != 0.0 {
                g += &self.g[i] * pi;
                c += &self.c[i] * pi;
            }
        }
        Ok((g, c))
    }
}

impl ParametricSystem {
    /// `(G(p), C(p))` as sparse matrices; `B` and `L` do not depend on `p`.
    pub fn assemble_at(&self, p: &ParameterPoint) -> Result<(SparseMatrix, SparseMatrix)> {
        p.check(self.n_p())?;
        let mut g = self.g0.clone();
        let mut c = self.c0.clone();
        for (s, &pi) in self.sens.iter().zip(p.values()) {
            if pi != 0.0 {
                g = g.add_scaled(&s.g, pi);
                c = c.add_scaled(&s.c, pi);
            }
        }
        Ok((g, c))
    }

    /// Dense copy of the whole system, refusing sizes above `limit`.
    pub fn to_dense(&self, limit: usize) -> Result<DenseSystem> {
        if self.n() > limit {
            return Err(Error::TooLarge { n: self.n(), limit });
        }
        Ok(DenseSystem {
            g0: self.g0.to_dense(),
            c0: self.c0.to_dense(),
            g: self.sens.iter().map(|s| s.g.to_dense()).collect(),
            c: self.sens.iter().map(|s| s.c.to_dense()).collect(),
            b: self.b.to_dense(),
            l: self.l.to_dense(),
        })
    }

    /// Stable 64-bit FNV-1a digest of dimensions and matrix entries, used to
    /// tie model files to the netlist they were reduced from.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        let mat = |a: &SparseMatrix, eat: &mut dyn FnMut(u64)| {
            eat(a.n_rows() as u64);
            eat(a.n_cols() as u64);
            for (i, j, v) in a.triplets() {
                eat(i as u64);
                eat(j as u64);
                eat(v.to_bits());
            }
        };
        mat(&self.g0, &mut eat);
        mat(&self.c0, &mut eat);
        for s in &self.sens {
            mat(&s.g, &mut eat);
            mat(&s.c, &mut eat);
        }
        mat(&self.b, &mut eat);
        format!("{h:016x}")
    }
}

/// Where a reduced model came from; enough to regenerate it from the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine: String,
    pub spec: Option<ReductionSpec>,
    /// Ranks actually retained per factor, in factor order.
    pub svd_ranks: Vec<usize>,
    pub pre_deflation_columns: usize,
    pub full_n: usize,
    pub params: Vec<String>,
    pub ports: Vec<String>,
    pub system_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub system: DenseSystem,
    /// Orthonormal `n×q` projection basis.
    #[serde(with = "crate::dense_io")]
    pub basis: DMatrix<f64>,
    pub provenance: Provenance,
    /// Low-rank factors of the generalized sensitivities (low-rank engine only).
    #[serde(default)]
    pub factors: Vec<LowRankFactor>,
}

impl ReducedModel {
    pub fn q(&self) -> usize {
        self.basis.ncols()
    }

    pub fn m(&self) -> usize {
        self.system.m()
    }

    pub fn n_p(&self) -> usize {
        self.system.n_p()
    }

    pub fn assemble_at(&self, p: &ParameterPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.system.assemble_at(p)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            schema_version: u32,
            n: usize,
            q: usize,
            m: usize,
            n_p: usize,
            #[serde(flatten)]
            model: &'a ReducedModel,
        }
        Ok(serde_json::to_string_pretty(&Out {
            schema_version: MODEL_SCHEMA_VERSION,
            n: self.basis.nrows(),
            q: self.q(),
            m: self.m(),
            n_p: self.n_p(),
            model: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct In {
            schema_version: u32,
            q: usize,
            #[serde(flatten)]
            model: ReducedModel,
        }
        let parsed: In = serde_json::from_str(text)?;
        if parsed.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported schema version {}",
                parsed.schema_version
            )));
        }
        let m = parsed.model;
        let q = m.q();
        let s = &m.system;
        let square = |a: &DMatrix<f64>| a.nrows() == q && a.ncols() == q;
        let ok = parsed.q == q
            && square(&s.g0)
            && square(&s.c0)
            && s.g.len() == s.c.len()
            && s.g.iter().chain(&s.c).all(square)
            && s.b.nrows() == q
            && s.l.shape() == s.b.shape();
        if !ok {
            return Err(Error::Format("inconsistent matrix dimensions".into()));
        }
        Ok(m)
    }
}

/// Congruence projection of the full system onto `span(V)`: every matrix,
/// including the full sensitivities, is reduced as `Vᵀ·X·V` (`Vᵀ·B`, `Vᵀ·L`).
pub fn project(sys: &ParametricSystem, v: &DMatrix<f64>) -> Result<ReducedModel> {
    if v.nrows() != sys.n() {
        return Err(Error::Dimension(format!(
            "basis has {} rows, system has {} unknowns",
            v.nrows(),
            sys.n()
        )));
    }
    let err = orthonormality_error(v);
    if err > PROJECT_ORTHO_TOL {
        return Err(Error::NotOrthonormal(err));
    }
    let system = DenseSystem {
        g0: sys.g0.congruence(v),
        c0: sys.c0.congruence(v),
        g: sys.sens.iter().map(|s| s.g.congruence(v)).collect(),
        c: sys.sens.iter().map(|s| s.c.congruence(v)).collect(),
        b: sys.b.tr_mul_dense(v).transpose(),
        l: sys.l.tr_mul_dense(v).transpose(),
    };
    Ok(ReducedModel {
        system,
        basis: v.clone(),
        provenance: Provenance {
            engine: "projection".into(),
            spec: None,
            svd_ranks: Vec::new(),
            pre_deflation_columns: v.ncols(),
            full_n: sys.n(),
            params: sys.params.clone(),
            ports: sys.ports.clone(),
            system_fingerprint: sys.fingerprint(),
        },
        factors: Vec::new(),
    })
}

/// Projects a dense system (used to reduce oracle-side nearby systems).
pub fn project_dense(sys: &DenseSystem, v: &DMatrix<f64>) -> DenseSystem {
    let vt = v.transpose();
    let cong = |a: &DMatrix<f64>| &vt * a * v;
    DenseSystem {
        g0: cong(&sys.g0),
        c0: cong(&sys.c0),
        g: sys.g.iter().map(cong).collect(),
        c: sys.c.iter().map(cong).collect(),
        b: &vt * &sys.b,
        l: &vt * &sys.l,
    }
}
