use serde::{Deserialize, Serialize};

use super::{Cell, CellComplex, HomologyBasis, OneCocycle, RESOLUTION_FLOOR};
use crate::error::{Error, Result};

/// Cubical grid on `Tⁿ = ∏ [0, L_i)`, n = 1 or 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatTorusGrid {
    pub resolution: Vec<usize>,
    /// Side lengths (the constant diagonal metric).
    pub lengths: Vec<f64>,
}

impl FlatTorusGrid {
    pub fn new(resolution: Vec<usize>) -> Self {
        let lengths = vec![1.0; resolution.len()];
        Self { resolution, lengths }
    }

    pub fn circle(n: usize) -> Self {
        Self::new(vec![n])
    }

    pub fn square(n: usize) -> Self {
        Self::new(vec![n, n])
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lengths.iter().zip(&self.resolution).map(|(l, &n)| l / n as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(1..=2).contains(&n) || self.lengths.len() != n {
            return Err(Error::Unsupported(format!("torus grids of dimension {n}")));
        }
        if let Some(&r) = self.resolution.iter().find(|&&r| r < RESOLUTION_FLOOR) {
            return Err(Error::ResolutionTooLow { got: r, floor: RESOLUTION_FLOOR });
        }
        if self.lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidInput("side lengths must be positive".into()));
        }
        Ok(())
    }

    /// Vertex index of `(i, j)` (j ignored for n = 1).
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        let nx = self.resolution[0];
        if self.dim() == 1 {
            i % nx
        } else {
            (j % self.resolution[1]) * nx + i % nx
        }
    }

    /// Edge index of the x-edge starting at `(i, j)`.
    pub fn x_edge(&self, i: usize, j: usize) -> usize {
        self.vertex(i, j)
    }

    /// Edge index of the y-edge starting at `(i, j)` (n = 2).
    pub fn y_edge(&self, i: usize, j: usize) -> usize {
        self.resolution[0] * self.resolution[1] + self.vertex(i, j)
    }

    pub fn build(&self) -> Result<CellComplex> {
        self.validate()?;
        let h = self.spacing();
        if self.dim() == 1 {
            let nx = self.resolution[0];
            let verts = (0..nx).map(|v| Cell { faces: vec![], support: vec![v], closure: vec![] }).collect();
            let edges: Vec<[usize; 2]> = (0..nx).map(|i| [i, (i + 1) % nx]).collect();
            let ecells = edges
                .iter()
                .enumerate()
                .map(|(e, &[u, v])| Cell { faces: vec![(u, -1.0), (v, 1.0)], support: vec![u, v], closure: vec![e] })
                .collect();
            return Ok(CellComplex {
                n: 1,
                cells: vec![verts, ecells],
                edges,
                num_vertices: nx,
                primal_vol: vec![vec![1.0; nx], vec![h[0]; nx]],
                dual_vol: vec![vec![h[0]; nx], vec![1.0; nx]],
                coords: (0..nx).map(|i| [i as f64 * h[0], 0.0]).collect(),
                displacement: vec![[h[0], 0.0]; nx],
                is_dual: false,
            });
        }
        let (nx, ny) = (self.resolution[0], self.resolution[1]);
        let nv = nx * ny;
        let mut verts = Vec::with_capacity(nv);
        let mut coords = Vec::with_capacity(nv);
        for j in 0..ny {
            for i in 0..nx {
                verts.push(Cell { faces: vec![], support: vec![self.vertex(i, j)], closure: vec![] });
                coords.push([i as f64 * h[0], j as f64 * h[1]]);
            }
        }
        let mut edges = vec![[0usize; 2]; 2 * nv];
        let mut displacement = vec![[0.0; 2]; 2 * nv];
        for j in 0..ny {
            for i in 0..nx {
                let v = self.vertex(i, j);
                edges[self.x_edge(i, j)] = [v, self.vertex(i + 1, j)];
                displacement[self.x_edge(i, j)] = [h[0], 0.0];
                edges[self.y_edge(i, j)] = [v, self.vertex(i, j + 1)];
                displacement[self.y_edge(i, j)] = [0.0, h[1]];
            }
        }
        let ecells = edges
            .iter()
            .enumerate()
            .map(|(e, &[u, v])| Cell { faces: vec![(u, -1.0), (v, 1.0)], support: vec![u, v], closure: vec![e] })
            .collect();
        let mut faces = Vec::with_capacity(nv);
        for j in 0..ny {
            for i in 0..nx {
                let bottom = self.x_edge(i, j);
                let right = self.y_edge(i + 1, j);
                let top = self.x_edge(i, j + 1);
                let left = self.y_edge(i, j);
                faces.push(Cell {
                    faces: vec![(bottom, 1.0), (right, 1.0), (top, -1.0), (left, -1.0)],
                    support: vec![
                        self.vertex(i, j),
                        self.vertex(i + 1, j),
                        self.vertex(i + 1, j + 1),
                        self.vertex(i, j + 1),
                    ],
                    closure: vec![bottom, right, top, left],
                });
            }
        }
        let area = h[0] * h[1];
        let mut evol = vec![h[0]; nv];
        evol.extend(vec![h[1]; nv]);
        let mut edual = vec![h[1]; nv];
        edual.extend(vec![h[0]; nv]);
        Ok(CellComplex {
            n: 2,
            cells: vec![verts, ecells, faces],
            edges,
            num_vertices: nv,
            primal_vol: vec![vec![1.0; nv], evol, vec![area; nv]],
            dual_vol: vec![vec![area; nv], edual, vec![1.0; nv]],
            coords,
            displacement,
            is_dual: false,
        })
    }

    /// Straight coordinate loops (x-loop, then y-loop) through the origin.
    pub fn axis_loops(&self) -> Vec<Vec<(usize, f64)>> {
        let mut loops = vec![(0..self.resolution[0]).map(|i| (self.x_edge(i, 0), 1.0)).collect()];
        if self.dim() == 2 {
            loops.push((0..self.resolution[1]).map(|j| (self.y_edge(0, j), 1.0)).collect());
        }
        loops
    }

    pub fn homology_basis(&self, cx: &CellComplex) -> Result<HomologyBasis> {
        HomologyBasis::with_loops(cx, self.axis_loops())
    }

    /// Constant cocycle of the form `Σ a_i dx_i`: period `a_i L_i` along axis `i`.
    /// This is the harmonic representative of its class.
    pub fn constant_twist(&self, covector: &[f64]) -> Result<OneCocycle> {
        if covector.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}-component twist on a {}-torus",
                covector.len(),
                self.dim()
            )));
        }
        let h = self.spacing();
        let nv: usize = self.resolution.iter().product();
        let mut values = vec![covector[0] * h[0]; nv];
        if self.dim() == 2 {
            values.extend(vec![covector[1] * h[1]; nv]);
        }
        Ok(OneCocycle { values })
    }
}

/// Triangulated square torus: an `n × n` grid with one diagonal per square.
/// Lower triangles `(i,j),(i+1,j),(i+1,j+1)`, upper `(i,j),(i+1,j+1),(i,j+1)`.
pub fn torus_triangulation(n: usize) -> Result<CellComplex> {
    if n < 4 {
        return Err(Error::ResolutionTooLow { got: n, floor: 4 });
    }
    let h = 1.0 / n as f64;
    let vid = |i: usize, j: usize| (j % n) * n + i % n;
    let nv = n * n;
    let xe = |i: usize, j: usize| vid(i, j);
    let ye = |i: usize, j: usize| nv + vid(i, j);
    let de = |i: usize, j: usize| 2 * nv + vid(i, j);
    let mut edges = vec![[0usize; 2]; 3 * nv];
    let mut displacement = vec![[0.0; 2]; 3 * nv];
    let mut coords = vec![[0.0; 2]; nv];
    for j in 0..n {
        for i in 0..n {
            coords[vid(i, j)] = [i as f64 * h, j as f64 * h];
            edges[xe(i, j)] = [vid(i, j), vid(i + 1, j)];
            displacement[xe(i, j)] = [h, 0.0];
            edges[ye(i, j)] = [vid(i, j), vid(i, j + 1)];
            displacement[ye(i, j)] = [0.0, h];
            edges[de(i, j)] = [vid(i, j), vid(i + 1, j + 1)];
            displacement[de(i, j)] = [h, h];
        }
    }
    let mut tris = Vec::with_capacity(2 * nv);
    for j in 0..n {
        for i in 0..n {
            tris.push((
                vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)],
                vec![(xe(i, j), 1.0), (ye(i + 1, j), 1.0), (de(i, j), -1.0)],
            ));
            tris.push((
                vec![vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)],
                vec![(de(i, j), 1.0), (xe(i, j + 1), -1.0), (ye(i, j), -1.0)],
            ));
        }
    }
    Ok(triangle_complex(nv, edges, tris, coords, displacement))
}

/// Assemble a triangle complex and its barycentric lumped volumes from
/// edge displacements (edge lengths are their norms).
pub(crate) fn triangle_complex(
    nv: usize,
    edges: Vec<[usize; 2]>,
    tris: Vec<(Vec<usize>, Vec<(usize, f64)>)>,
    coords: Vec<[f64; 2]>,
    displacement: Vec<[f64; 2]>,
) -> CellComplex {
    let lengths: Vec<f64> = displacement.iter().map(|d| (d[0] * d[0] + d[1] * d[1]).sqrt()).collect();
    triangle_complex_with_lengths(nv, edges, tris, coords, displacement, &lengths)
}

pub(crate) fn triangle_complex_with_lengths(
    nv: usize,
    edges: Vec<[usize; 2]>,
    tris: Vec<(Vec<usize>, Vec<(usize, f64)>)>,
    coords: Vec<[f64; 2]>,
    displacement: Vec<[f64; 2]>,
    lengths: &[f64],
) -> CellComplex {
    let ne = edges.len();
    let verts = (0..nv).map(|v| Cell { faces: vec![], support: vec![v], closure: vec![] }).collect();
    let ecells = edges
        .iter()
        .enumerate()
        .map(|(e, &[u, v])| Cell { faces: vec![(u, -1.0), (v, 1.0)], support: vec![u, v], closure: vec![e] })
        .collect();
    let mut vdual = vec![0.0; nv];
    let mut edual = vec![0.0; ne];
    let mut areas = Vec::with_capacity(tris.len());
    let mut fcells = Vec::with_capacity(tris.len());
    for (support, faces) in tris {
        let l: Vec<f64> = faces.iter().map(|&(e, _)| lengths[e]).collect();
        let s = 0.5 * (l[0] + l[1] + l[2]);
        let area = (s * (s - l[0]) * (s - l[1]) * (s - l[2])).max(0.0).sqrt();
        for &v in &support {
            vdual[v] += area / 3.0;
        }
        for (k, &(e, _)) in faces.iter().enumerate() {
            let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
            // midpoint of side a to the centroid: a third of its median
            let median = 0.5 * (2.0 * b * b + 2.0 * c * c - a * a).max(0.0).sqrt();
            edual[e] += median / 3.0;
        }
        areas.push(area);
        let closure = faces.iter().map(|f| f.0).collect();
        fcells.push(Cell { faces, support, closure });
    }
    let nf = areas.len();
    CellComplex {
        n: 2,
        cells: vec![verts, ecells, fcells],
        edges,
        num_vertices: nv,
        primal_vol: vec![vec![1.0; nv], lengths.to_vec(), areas],
        dual_vol: vec![vdual, edual, vec![1.0; nf]],
        coords,
        displacement,
        is_dual: false,
    }
}
