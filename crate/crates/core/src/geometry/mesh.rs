use serde::{Deserialize, Serialize};

use super::torus::triangle_complex_with_lengths;
use super::CellComplex;
use crate::error::{Error, Result};

/// Serializable closed oriented triangle mesh given by edge lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub num_vertices: usize,
    pub edges: Vec<[usize; 2]>,
    /// Each face lists three edge indices ...
    pub faces: Vec<[usize; 3]>,
    /// ... and their orientation signs in the face boundary.
    pub orientation: Vec<[i8; 3]>,
    pub lengths: Vec<f64>,
}

impl MeshDescriptor {
    pub fn from_complex(cx: &CellComplex) -> Result<Self> {
        if cx.n != 2 || cx.is_dual || cx.cells[2].iter().any(|c| c.faces.len() != 3) {
            return Err(Error::Unsupported("only primal triangle complexes serialize as meshes".into()));
        }
        Ok(Self {
            num_vertices: cx.num_vertices,
            edges: cx.edges.clone(),
            faces: cx.cells[2].iter().map(|c| [c.faces[0].0, c.faces[1].0, c.faces[2].0]).collect(),
            orientation: cx.cells[2]
                .iter()
                .map(|c| [c.faces[0].1 as i8, c.faces[1].1 as i8, c.faces[2].1 as i8])
                .collect(),
            lengths: cx.primal_vol[1].clone(),
        })
    }

    /// Checks that faces are closed triangles, that every edge bounds
    /// exactly two faces with opposite signs, and the triangle inequality.
    pub fn to_complex(&self) -> Result<CellComplex> {
        let ne = self.edges.len();
        if self.lengths.len() != ne || self.orientation.len() != self.faces.len() {
            return Err(Error::DimensionMismatch("mesh arrays have inconsistent lengths".into()));
        }
        if self.edges.iter().flatten().any(|&v| v >= self.num_vertices) {
            return Err(Error::InvalidInput("edge endpoint out of range".into()));
        }
        if self.lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("edge lengths must be positive".into()));
        }
        let mut incidence = vec![0i32; ne];
        let mut uses = vec![0usize; ne];
        let mut tris = Vec::with_capacity(self.faces.len());
        for (f, (face, orient)) in self.faces.iter().zip(&self.orientation).enumerate() {
            let bad = |msg: &str| Error::InvalidInput(format!("face {f}: {msg}"));
            if face.iter().any(|&e| e >= ne) || orient.iter().any(|&o| o != 1 && o != -1) {
                return Err(bad("bad edge index or sign"));
            }
            // vertex boundary of the oriented edge cycle must vanish
            let mut boundary = std::collections::HashMap::<usize, i32>::new();
            for (&e, &o) in face.iter().zip(orient) {
                let [u, v] = self.edges[e];
                *boundary.entry(v).or_default() += o as i32;
                *boundary.entry(u).or_default() -= o as i32;
                incidence[e] += o as i32;
                uses[e] += 1;
            }
            if boundary.values().any(|&c| c != 0) || boundary.len() != 3 {
                return Err(bad("edges do not form an oriented triangle"));
            }
            let l: Vec<f64> = face.iter().map(|&e| self.lengths[e]).collect();
            if l[0] >= l[1] + l[2] || l[1] >= l[0] + l[2] || l[2] >= l[0] + l[1] {
                return Err(bad("violates the triangle inequality"));
            }
            // support in boundary order: tail of the first edge, then onward
            let [a, b] = self.edges[face[0]];
            let (p, q) = if orient[0] > 0 { (a, b) } else { (b, a) };
            let r = boundary.keys().copied().find(|&v| v != p && v != q).unwrap();
            let faces = face.iter().zip(orient).map(|(&e, &o)| (e, o as f64)).collect();
            tris.push((vec![p, q, r], faces));
        }
        if uses.iter().any(|&u| u != 2) || incidence.iter().any(|&c| c != 0) {
            return Err(Error::InvalidInput("mesh is not a closed oriented surface".into()));
        }
        let coords = vec![[0.0; 2]; self.num_vertices];
        let displacement = vec![[0.0; 2]; ne];
        Ok(triangle_complex_with_lengths(self.num_vertices, self.edges.clone(), tris, coords, displacement, &self.lengths))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
