//! Discretized manifolds and their twisted cochain complexes.
//!
//! A [`CellComplex`] stores incidences, lumped Hodge volumes and, for every
//! cell, a reference point given as the average of some *support* vertices.
//! A closed 1-cocycle `z` on the support edges has a primitive `H` on the
//! closure of each cell; the twisted coboundary weighs the incidence
//! `τ ⊂ σ` by `exp(H(p_τ) − H(p_σ))`. Weights multiply along chains, so
//! `d² = 0` holds exactly, and on an edge `u → v` this reads
//! `d f = e^{θ/2} f(v) − e^{−θ/2} f(u)`.
//!
//! Dual complexes reuse the primal support vertices, which keeps the discrete
//! Hodge star a literal transpose.

mod cocycle;
mod cover;
mod mesh;
mod surface;
mod torus;

pub use cocycle::{harmonic_twist, HomologyBasis, OneCocycle, CLOSED_TOL};
pub use cover::{build_cover, CoverInfo};
pub use mesh::MeshDescriptor;
pub use surface::{branch_locations, build_surface, BranchedSurface};
pub use torus::{torus_triangulation, FlatTorusGrid};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::complex_core::FiniteComplex;
use crate::error::{Error, Result};
use crate::linalg::{sparse_add, sparse_from_triplets, sparse_mul, sparse_scale, sparse_transpose, SparseMat, C64};
use crate::vn_core::{AEndomorphism, HilbertianModule};

/// Smallest grid resolution accepted per axis.
pub const RESOLUTION_FLOOR: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cell {
    /// Boundary cells of one degree lower with incidence signs.
    pub faces: Vec<(usize, f64)>,
    /// Support vertices; the reference point is their average.
    pub support: Vec<usize>,
    /// Support edges spanning the closure (for local primitives).
    pub closure: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellComplex {
    pub n: usize,
    /// `cells[k]` lists the `k`-cells.
    pub cells: Vec<Vec<Cell>>,
    /// Oriented support edges; cocycles are indexed by these.
    pub edges: Vec<[usize; 2]>,
    pub num_vertices: usize,
    pub primal_vol: Vec<Vec<f64>>,
    pub dual_vol: Vec<Vec<f64>>,
    /// Chart coordinates of support vertices (second entry 0 when n = 1).
    pub coords: Vec<[f64; 2]>,
    /// Unwrapped chart displacement of every support edge.
    pub displacement: Vec<[f64; 2]>,
    pub is_dual: bool,
}

impl CellComplex {
    pub fn counts(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.len()).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts()
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    /// Lumped Hodge star `⋆_k = |dual cell| / |cell|`.
    pub fn star(&self, k: usize) -> Vec<f64> {
        self.dual_vol[k].iter().zip(&self.primal_vol[k]).map(|(d, p)| d / p).collect()
    }

    /// Scale all lengths by `c` (volumes of k-cells by `c^k`, duals by `c^{n−k}`).
    pub fn rescaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for k in 0..=self.n {
            for v in out.primal_vol[k].iter_mut() {
                *v *= c.powi(k as i32);
            }
            for v in out.dual_vol[k].iter_mut() {
                *v *= c.powi((self.n - k) as i32);
            }
        }
        out
    }

    /// Combinatorial dual: dual `k`-cells are primal `(n−k)`-cells, faces are
    /// cofaces with the same signs, volumes swap. Support data is shared, so
    /// a cocycle on the primal edges twists the dual as well.
    pub fn dual(&self) -> Self {
        let n = self.n;
        let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let src = &self.cells[n - k];
            let mut layer: Vec<Cell> = src
                .iter()
                .map(|c| Cell { faces: Vec::new(), support: c.support.clone(), closure: c.closure.clone() })
                .collect();
            if k > 0 {
                // dual faces of c* are the cofaces of c
                for (big, cell) in self.cells[n - k + 1].iter().enumerate() {
                    for &(small, s) in &cell.faces {
                        layer[small].faces.push((big, s));
                    }
                }
            }
            cells.push(layer);
        }
        let primal_vol = (0..=n).map(|k| self.dual_vol[n - k].clone()).collect();
        let dual_vol = (0..=n).map(|k| self.primal_vol[n - k].clone()).collect();
        Self {
            n,
            cells,
            edges: self.edges.clone(),
            num_vertices: self.num_vertices,
            primal_vol,
            dual_vol,
            coords: self.coords.clone(),
            displacement: self.displacement.clone(),
            is_dual: !self.is_dual,
        }
    }

    fn check_cocycle_len(&self, len: usize) -> Result<()> {
        if len != self.edges.len() {
            return Err(Error::DimensionMismatch(format!(
                "cocycle has {len} values for {} edges",
                self.edges.len()
            )));
        }
        Ok(())
    }

    /// Primitive of `z` on `vertices`, walking `edges`; root gets 0.
    fn local_primitive(&self, z: &[C64], vertices: &[usize], edges: &[usize]) -> Vec<(usize, C64)> {
        let mut pot: Vec<(usize, C64)> = vec![(vertices[0], C64::new(0.0, 0.0))];
        let mut queue = VecDeque::from([vertices[0]]);
        while let Some(a) = queue.pop_front() {
            let ha = pot.iter().find(|p| p.0 == a).unwrap().1;
            for &e in edges {
                let [u, v] = self.edges[e];
                let (next, val) = if u == a {
                    (v, ha + z[e])
                } else if v == a {
                    (u, ha - z[e])
                } else {
                    continue;
                };
                if !pot.iter().any(|p| p.0 == next) {
                    pot.push((next, val));
                    queue.push_back(next);
                }
            }
        }
        pot
    }

    /// Twist weight `exp(H(p_τ) − H(p_σ))` for face `tau` of `sigma` in degree `k+1`.
    fn weight(&self, z: &[C64], k: usize, sigma: usize, tau: usize) -> C64 {
        let s = &self.cells[k + 1][sigma];
        let t = &self.cells[k][tau];
        let mut verts = s.support.clone();
        verts.extend(t.support.iter().copied().filter(|v| !s.support.contains(v)));
        let mut edges = s.closure.clone();
        edges.extend(t.closure.iter().copied().filter(|e| !s.closure.contains(e)));
        let pot = self.local_primitive(z, &verts, &edges);
        let avg = |sup: &[usize]| -> C64 {
            let total: C64 = sup.iter().map(|v| pot.iter().find(|p| p.0 == *v).map(|p| p.1).unwrap_or_default()).sum();
            total / sup.len() as f64
        };
        (avg(&t.support) - avg(&s.support)).exp()
    }

    /// Raw twisted coboundary `d_k` (no metric) as (re, im) parts.
    pub fn raw_coboundary(&self, z: &[C64], k: usize) -> Result<CDiff> {
        self.check_cocycle_len(z.len())?;
        if k >= self.n {
            return Err(Error::DegreeOutOfRange { degree: k, top: self.n });
        }
        let rows = self.cells[k + 1].len();
        let cols = self.cells[k].len();
        let mut re = Vec::new();
        let mut im = Vec::new();
        for (sigma, cell) in self.cells[k + 1].iter().enumerate() {
            for &(tau, sign) in &cell.faces {
                let w = self.weight(z, k, sigma, tau) * sign;
                re.push((sigma, tau, w.re));
                if w.im != 0.0 {
                    im.push((sigma, tau, w.im));
                }
            }
        }
        let im = if im.is_empty() { None } else { Some(sparse_from_triplets(rows, cols, &im)) };
        Ok(CDiff { re: sparse_from_triplets(rows, cols, &re), im })
    }

    /// Coboundary in orthonormal coordinates `⋆_{k+1}^{1/2} d_k ⋆_k^{−1/2}`,
    /// so adjoints are conjugate transposes.
    pub fn coboundary(&self, z: &[C64], k: usize) -> Result<CDiff> {
        let raw = self.raw_coboundary(z, k)?;
        let left: Vec<f64> = self.star(k + 1).iter().map(|s| s.sqrt()).collect();
        let right: Vec<f64> = self.star(k).iter().map(|s| 1.0 / s.sqrt()).collect();
        Ok(raw.scale_rows_cols(&left, &right))
    }

    pub fn coboundaries(&self, z: &[C64]) -> Result<Vec<CDiff>> {
        (0..self.n).map(|k| self.coboundary(z, k)).collect()
    }
}

/// Complex sparse matrix kept as real and (optional) imaginary parts.
#[derive(Clone, Debug)]
pub struct CDiff {
    pub re: SparseMat,
    pub im: Option<SparseMat>,
}

fn scale_sparse(a: &SparseMat, left: &[f64], right: &[f64]) -> SparseMat {
    let mut t = Vec::with_capacity(a.nnz());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            t.push((i, j, left[i] * v * right[j]));
        }
    }
    sparse_from_triplets(a.rows(), a.cols(), &t)
}

impl CDiff {
    pub fn rows(&self) -> usize {
        self.re.rows()
    }

    pub fn cols(&self) -> usize {
        self.re.cols()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Self {
        Self { re: scale_sparse(&self.re, left, right), im: self.im.as_ref().map(|m| scale_sparse(m, left, right)) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { re: sparse_scale(&self.re, s), im: self.im.as_ref().map(|m| sparse_scale(m, s)) }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            re: sparse_transpose(&self.re),
            im: self.im.as_ref().map(|m| sparse_scale(&sparse_transpose(m), -1.0)),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let re = sparse_mul(&self.re, &other.re);
        let (re, im) = match (&self.im, &other.im) {
            (None, None) => (re, None),
            (Some(a), None) => (re, Some(sparse_mul(a, &other.re))),
            (None, Some(b)) => (re, Some(sparse_mul(&self.re, b))),
            (Some(a), Some(b)) => (
                sparse_add(&re, &sparse_scale(&sparse_mul(a, b), -1.0)),
                Some(sparse_add(&sparse_mul(a, &other.re), &sparse_mul(&self.re, b))),
            ),
        };
        Self { re, im }
    }

    pub fn add(&self, other: &Self) -> Self {
        let im = match (&self.im, &other.im) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => Some(sparse_add(a, b)),
        };
        Self { re: sparse_add(&self.re, &other.re), im }
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.to_dense();
        crate::linalg::max_abs(&d)
    }

    pub fn to_dense(&self) -> crate::linalg::CMat {
        let re = crate::linalg::sparse_to_dense(&self.re);
        let im = self.im.as_ref().map(crate::linalg::sparse_to_dense);
        faer::Mat::from_fn(re.nrows(), re.ncols(), |i, j| {
            C64::new(re[(i, j)], im.as_ref().map(|m| m[(i, j)]).unwrap_or(0.0))
        })
    }

    /// Real symmetric form of a Hermitian matrix: itself when real, the
    /// realification (every eigenvalue doubled) otherwise.
    pub fn real_form(&self) -> SparseMat {
        match &self.im {
            None => self.re.clone(),
            Some(im) => crate::linalg::realify(&self.re, im),
        }
    }
}

/// `Δ_k = D_{k−1} D_{k−1}* + D_k* D_k` for orthonormal coboundaries.
pub fn hodge_laplacian(diffs: &[CDiff], counts: &[usize], k: usize) -> Result<CDiff> {
    let n = counts.len() - 1;
    if k > n {
        return Err(Error::DegreeOutOfRange { degree: k, top: n });
    }
    let mut lap = CDiff { re: crate::linalg::sparse_zeros(counts[k], counts[k]), im: None };
    if k > 0 {
        let d = &diffs[k - 1];
        lap = lap.add(&d.mul(&d.adjoint()));
    }
    if k < n {
        let d = &diffs[k];
        lap = lap.add(&d.adjoint().mul(d));
    }
    Ok(lap)
}

/// A flat fiber: a Hilbertian module `E`, a real twist shared by all
/// blocks, and optional U(1) phase cocycles per algebra block.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub fiber: HilbertianModule,
    pub twist: OneCocycle,
    /// `phases[b]`: angles per edge for algebra block `b` (None = trivial).
    pub phases: Vec<Option<Vec<f64>>>,
}

/// One scalar piece of a local system: the complex cocycle `θ + iφ_b` and
/// the trace weight `w_b r_b / d_b` it carries.
#[derive(Clone, Debug)]
pub struct Sector {
    pub block: usize,
    pub cocycle: Vec<C64>,
    pub weight: f64,
}

impl LocalSystem {
    pub fn trivial(fiber: HilbertianModule, edges: usize) -> Self {
        let nb = fiber.algebra().blocks().len();
        Self { fiber, twist: OneCocycle::zero(edges), phases: vec![None; nb] }
    }

    pub fn real(fiber: HilbertianModule, twist: OneCocycle) -> Self {
        let nb = fiber.algebra().blocks().len();
        Self { fiber, twist, phases: vec![None; nb] }
    }

    pub fn sectors(&self) -> Vec<Sector> {
        let ranks = self.fiber.block_ranks();
        self.fiber
            .algebra()
            .blocks()
            .iter()
            .enumerate()
            .filter(|(b, _)| ranks[*b] > 0)
            .map(|(b, blk)| {
                let cocycle = self
                    .twist
                    .values
                    .iter()
                    .enumerate()
                    .map(|(e, &t)| C64::new(t, self.phases[b].as_ref().map(|p| p[e]).unwrap_or(0.0)))
                    .collect();
                Sector { block: b, cocycle, weight: blk.weight * ranks[b] as f64 / blk.dim as f64 }
            })
            .collect()
    }

    /// Holonomy defect around every top cell: `max |Σ ±z|` over cell boundaries.
    pub fn flatness_defect(&self, cx: &CellComplex) -> f64 {
        let mut worst = self.twist.closedness_defect(cx);
        for p in self.phases.iter().flatten() {
            worst = worst.max(OneCocycle { values: p.clone() }.closedness_defect(cx));
        }
        worst
    }
}

/// Cochain complex of a cell complex with coefficients in a local system.
#[derive(Clone, Debug)]
pub struct TwistedComplex {
    pub cells: CellComplex,
    pub system: LocalSystem,
}

impl TwistedComplex {
    pub fn new(cells: CellComplex, system: LocalSystem) -> Result<Self> {
        cells.check_cocycle_len(system.twist.values.len())?;
        for p in system.phases.iter().flatten() {
            cells.check_cocycle_len(p.len())?;
        }
        let defect = system.flatness_defect(&cells);
        if defect > CLOSED_TOL {
            return Err(Error::NotClosed(defect));
        }
        Ok(Self { cells, system })
    }

    pub fn fiber_dim(&self) -> f64 {
        self.system.fiber.dim_tau()
    }

    pub fn sectors(&self) -> Vec<Sector> {
        self.system.sectors()
    }

    /// Same complex with the real twist replaced.
    pub fn with_twist(&self, twist: OneCocycle) -> Result<Self> {
        Self::new(self.cells.clone(), LocalSystem { twist, ..self.system.clone() })
    }

    /// Dense [`FiniteComplex`] over the fiber algebra. Intended for small
    /// complexes; every cochain module is `E^{⊕ cells}`.
    pub fn to_finite(&self) -> Result<FiniteComplex> {
        let counts = self.cells.counts();
        let modules: Vec<HilbertianModule> = counts.iter().map(|&c| self.system.fiber.amplify(c)).collect();
        let ranks = self.system.fiber.block_ranks();
        let weights = self.system.fiber.identity().weights;
        let sectors = self.sectors();
        let mut diffs = Vec::with_capacity(self.cells.n);
        for k in 0..self.cells.n {
            let mut blocks = Vec::with_capacity(ranks.len());
            for (b, &r) in ranks.iter().enumerate() {
                let (rows, cols) = (counts[k + 1] * r, counts[k] * r);
                match sectors.iter().find(|s| s.block == b) {
                    Some(s) => {
                        let d = self.cells.coboundary(&s.cocycle, k)?.to_dense();
                        blocks.push(faer::Mat::from_fn(rows, cols, |i, j| {
                            if i % r == j % r {
                                d[(i / r, j / r)]
                            } else {
                                C64::new(0.0, 0.0)
                            }
                        }));
                    }
                    None => blocks.push(crate::linalg::cmat_zeros(rows, cols)),
                }
            }
            diffs.push(AEndomorphism { blocks, weights: weights.clone() });
        }
        FiniteComplex::new(modules, diffs)
    }
}

/// Twisted complex on a flat torus grid (n = 1, 2) with a real twist and fiber.
pub fn build_torus_complex(grid: &FlatTorusGrid, twist: &OneCocycle, fiber: &HilbertianModule) -> Result<TwistedComplex> {
    let cells = grid.build()?;
    TwistedComplex::new(cells, LocalSystem::real(fiber.clone(), twist.clone()))
}

/// Twisted simplicial complex on a triangulated surface.
pub fn build_surface_complex(
    surface: &BranchedSurface,
    twist: &OneCocycle,
    fiber: &HilbertianModule,
) -> Result<TwistedComplex> {
    TwistedComplex::new(surface.complex.clone(), LocalSystem::real(fiber.clone(), twist.clone()))
}

/// Hodge star from degree `j` of `cx` to degree `n−j` of `cx.dual()` in
/// orthonormal coordinates. Both are indexed by the same cells, so the map
/// is the identity matrix; the content is that
/// `Δ_{θ,j}(cx) = Δ_{−θ,n−j}(dual)` for the independently assembled dual.
pub fn hodge_star(cx: &CellComplex, j: usize) -> Result<SparseMat> {
    if j > cx.n {
        return Err(Error::DegreeOutOfRange { degree: j, top: cx.n });
    }
    let m = cx.cells[j].len();
    Ok(sparse_from_triplets(m, m, &(0..m).map(|i| (i, i, 1.0)).collect::<Vec<_>>()))
}

/// Diagonal gauge factors `exp(h̄(p_c))` per `k`-cell, `h̄` the support average of `h`.
pub fn gauge_factors(cx: &CellComplex, h: &[f64], k: usize) -> Vec<f64> {
    cx.cells[k]
        .iter()
        .map(|c| (c.support.iter().map(|&v| h[v]).sum::<f64>() / c.support.len() as f64).exp())
        .collect()
}

pub fn real_cocycle(values: &[f64]) -> Vec<C64> {
    values.iter().map(|&t| C64::new(t, 0.0)).collect()
}

#[cfg(test)]
mod tests;
