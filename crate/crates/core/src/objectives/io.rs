//! JSON documents for instances: matrices as row-major arrays, the observed
//! index set as a list of `[row, col]` pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ObjectiveInstance, ProblemData};
use crate::error::{Error, Result};
use crate::manifolds::Manifold;

#[derive(Debug, Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixDoc {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl TryFrom<MatrixDoc> for DMatrix<f64> {
    type Error = Error;

    fn try_from(doc: MatrixDoc) -> Result<Self> {
        if doc.data.len() != doc.rows * doc.cols {
            return Err(Error::Instance(format!(
                "{}x{} matrix with {} entries",
                doc.rows,
                doc.cols,
                doc.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(doc.rows, doc.cols, &doc.data))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DataDoc {
    Rayleigh {
        a: MatrixDoc,
    },
    Brockett {
        a: MatrixDoc,
        weights: Vec<f64>,
    },
    Completion {
        a: MatrixDoc,
        omega: Vec<[usize; 2]>,
    },
    OffDiag {
        c: Vec<MatrixDoc>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    id: String,
    seed: u64,
    manifold: Manifold,
    data: DataDoc,
}

impl ObjectiveInstance {
    pub fn to_json(&self) -> Result<String> {
        let data = match &self.data {
            ProblemData::Rayleigh { a } => DataDoc::Rayleigh { a: a.into() },
            ProblemData::Brockett { a, weights } => DataDoc::Brockett {
                a: a.into(),
                weights: weights.iter().copied().collect(),
            },
            ProblemData::Completion { a, omega } => DataDoc::Completion {
                a: a.into(),
                omega: omega.iter().map(|&(i, j)| [i, j]).collect(),
            },
            ProblemData::OffDiag { c } => DataDoc::OffDiag {
                c: c.iter().map(MatrixDoc::from).collect(),
            },
        };
        let doc = InstanceDoc {
            id: self.id.clone(),
            seed: self.seed,
            manifold: self.manifold,
            data,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Parses and validates an instance document.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(s)?;
        let data = match doc.data {
            DataDoc::Rayleigh { a } => ProblemData::Rayleigh { a: a.try_into()? },
            DataDoc::Brockett { a, weights } => ProblemData::Brockett {
                a: a.try_into()?,
                weights: DVector::from_vec(weights),
            },
            DataDoc::Completion { a, omega } => ProblemData::Completion {
                a: a.try_into()?,
                omega: omega.into_iter().map(|[i, j]| (i, j)).collect(),
            },
            DataDoc::OffDiag { c } => ProblemData::OffDiag {
                c: c.into_iter()
                    .map(DMatrix::try_from)
                    .collect::<Result<_>>()?,
            },
        };
        ObjectiveInstance::new(doc.id, doc.seed, doc.manifold, data)
    }
}
