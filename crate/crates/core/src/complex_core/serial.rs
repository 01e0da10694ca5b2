use faer::Mat;
use serde::{Deserialize, Serialize};

use super::FiniteComplex;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::vn_core::{Block, HilbertianModule, VNAlgebra};

/// Row-major complex matrix as `[re, im]` pairs.
type Entries = Vec<[f64; 2]>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleDescriptor {
    pub multiplicity: usize,
    /// One projection per algebra block; omitted for free modules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<Entries>>,
}

/// JSON form of a complex: algebra blocks, modules, and differentials in
/// free coordinates (one row-major matrix per algebra block).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexDescriptor {
    pub blocks: Vec<Block>,
    pub modules: Vec<ModuleDescriptor>,
    pub differentials: Vec<Vec<Entries>>,
}

fn flatten(m: &CMat) -> Entries {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn unflatten(e: &Entries, rows: usize, cols: usize) -> Result<CMat> {
    if e.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} entries, expected {rows}x{cols}",
            e.len()
        )));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| {
        let [re, im] = e[i * cols + j];
        C64::new(re, im)
    }))
}

impl ComplexDescriptor {
    pub fn from_complex(c: &FiniteComplex) -> Self {
        let modules = c
            .modules()
            .iter()
            .map(|m| ModuleDescriptor {
                multiplicity: m.multiplicity(),
                projection: Some(m.projection().iter().map(flatten).collect()),
            })
            .collect();
        let differentials = c
            .differentials()
            .iter()
            .enumerate()
            .map(|(j, d)| d.to_free(&c.modules()[j], &c.modules()[j + 1]).iter().map(flatten).collect())
            .collect();
        Self { blocks: c.algebra().blocks().to_vec(), modules, differentials }
    }

    pub fn to_complex(&self) -> Result<FiniteComplex> {
        let algebra = VNAlgebra::new(self.blocks.clone())?;
        let modules = self
            .modules
            .iter()
            .map(|m| match &m.projection {
                None => Ok(HilbertianModule::free(&algebra, m.multiplicity)),
                Some(p) => {
                    if p.len() != algebra.blocks().len() {
                        return Err(Error::DimensionMismatch("one projection per algebra block".into()));
                    }
                    let proj = algebra
                        .blocks()
                        .iter()
                        .zip(p)
                        .map(|(b, e)| unflatten(e, m.multiplicity * b.dim, m.multiplicity * b.dim))
                        .collect::<Result<Vec<_>>>()?;
                    HilbertianModule::with_projection(&algebra, m.multiplicity, proj)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if self.differentials.len() + 1 != modules.len() {
            return Err(Error::DimensionMismatch("one differential between consecutive modules".into()));
        }
        let mut free = Vec::new();
        for (j, d) in self.differentials.iter().enumerate() {
            if d.len() != algebra.blocks().len() {
                return Err(Error::DimensionMismatch(format!("d_{j} needs one matrix per algebra block")));
            }
            let (ks, kt) = (modules[j].multiplicity(), modules[j + 1].multiplicity());
            free.push(
                algebra
                    .blocks()
                    .iter()
                    .zip(d)
                    .map(|(b, e)| unflatten(e, kt * b.dim, ks * b.dim))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        FiniteComplex::from_free(modules, free)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
