//! Row-major JSON encoding for dense matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Upper bound on the number of entries accepted when reading a matrix.
pub const MAX_ENTRIES: usize = 1_000_000;

#[derive(Serialize, Deserialize)]
pub struct RowMajor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for RowMajor {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        RowMajor {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl RowMajor {
    pub fn into_matrix(self) -> Result<DMatrix<f64>, String> {
        let count = self.rows.checked_mul(self.cols).ok_or("matrix size overflow")?;
        if count > MAX_ENTRIES {
            return Err(format!(
                "matrix {}x{} exceeds the {MAX_ENTRIES}-entry limit",
                self.rows, self.cols
            ));
        }
        if self.data.len() != count {
            return Err(format!(
                "matrix {}x{} has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            ));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    RowMajor::from(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    RowMajor::deserialize(d)?
        .into_matrix()
        .map_err(serde::de::Error::custom)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<RowMajor> = ms.iter().map(RowMajor::from).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        Vec::<RowMajor>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_matrix().map_err(serde::de::Error::custom))
            .collect()
    }
}
