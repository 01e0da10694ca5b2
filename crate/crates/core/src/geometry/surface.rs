use serde::{Deserialize, Serialize};

use super::torus::{torus_triangulation, triangle_complex_with_lengths};
use super::{CellComplex, OneCocycle, RESOLUTION_FLOOR};
use crate::error::{Error, Result};

/// Closed orientable surface of genus `g ≥ 1`, triangulated as a double
/// cover of the `n × n` triangulated torus branched over `2(g−1)` points.
/// The branch points are joined in pairs by horizontal slits; crossing a
/// slit swaps the sheets. Lengths are pulled back from the flat torus, so
/// the metric is flat away from the branch points (cone angle `4π` there).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchedSurface {
    pub genus: usize,
    pub n: usize,
    pub complex: CellComplex,
    /// The torus it covers (itself when g = 1).
    pub base: CellComplex,
    pub base_vertex: Vec<usize>,
    pub base_edge: Vec<usize>,
    pub base_face: Vec<usize>,
    /// Lifted indices of the branch vertices.
    pub branch_points: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Slit rows and the column range `[c0, c0 + len)` of x-edges they cut.
fn slits(genus: usize, n: usize) -> (Vec<usize>, usize, usize) {
    let pairs = genus - 1;
    let rows = (0..pairs).map(|k| k * n / pairs + n / (4 * pairs)).collect();
    (rows, n / 8, n / 2)
}

pub fn build_surface(genus: usize, n: usize) -> Result<BranchedSurface> {
    if genus == 0 {
        return Err(Error::Unsupported("genus 0 (use a genus ≥ 1 surface)".into()));
    }
    if n < RESOLUTION_FLOOR {
        return Err(Error::ResolutionTooLow { got: n, floor: RESOLUTION_FLOOR });
    }
    let base = torus_triangulation(n)?;
    if genus == 1 {
        let nv = base.num_vertices;
        let ne = base.edges.len();
        let nf = base.cells[2].len();
        return Ok(BranchedSurface {
            genus,
            n,
            complex: base.clone(),
            base,
            base_vertex: (0..nv).collect(),
            base_edge: (0..ne).collect(),
            base_face: (0..nf).collect(),
            branch_points: vec![],
        });
    }
    if n < 8 * (genus - 1) {
        return Err(Error::ResolutionTooLow { got: n, floor: 8 * (genus - 1) });
    }
    let ne = base.edges.len();
    let nf = base.cells[2].len();
    let (rows, c0, len) = slits(genus, n);
    let mut cut = vec![false; ne];
    let mut branch_base = Vec::new();
    for &r in &rows {
        for i in c0..c0 + len {
            cut[r * n + i] = true;
        }
        branch_base.push(r * n + c0);
        branch_base.push(r * n + c0 + len);
    }

    let mut adjacent: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for (t, cell) in base.cells[2].iter().enumerate() {
        for &(e, _) in &cell.faces {
            adjacent[e].push(t);
        }
    }
    // corner (t, s, local k) ↦ (s * nf + t) * 3 + k
    let corner = |t: usize, s: usize, k: usize| (s * nf + t) * 3 + k;
    let local = |t: usize, v: usize| base.cells[2][t].support.iter().position(|&w| w == v).unwrap();
    let mut parent: Vec<usize> = (0..6 * nf).collect();
    for e in 0..ne {
        let (t1, t2) = (adjacent[e][0], adjacent[e][1]);
        let c = cut[e] as usize;
        for &v in &base.edges[e] {
            for s in 0..2 {
                let a = find(&mut parent, corner(t1, s, local(t1, v)));
                let b = find(&mut parent, corner(t2, s ^ c, local(t2, v)));
                parent[a] = b;
            }
        }
    }
    let mut label = vec![usize::MAX; 6 * nf];
    let mut base_vertex = Vec::new();
    let mut vertex_of = vec![0usize; 6 * nf];
    for s in 0..2 {
        for t in 0..nf {
            for k in 0..3 {
                let x = corner(t, s, k);
                let root = find(&mut parent, x);
                if label[root] == usize::MAX {
                    label[root] = base_vertex.len();
                    base_vertex.push(base.cells[2][t].support[k]);
                }
                vertex_of[x] = label[root];
            }
        }
    }
    let lift = |t: usize, s: usize, v: usize| vertex_of[corner(t, s, local(t, v))];

    let mut edges = Vec::with_capacity(2 * ne);
    let mut base_edge = Vec::with_capacity(2 * ne);
    let mut displacement = Vec::with_capacity(2 * ne);
    let mut lengths = Vec::with_capacity(2 * ne);
    for s in 0..2 {
        for e in 0..ne {
            let t1 = adjacent[e][0];
            let [u, v] = base.edges[e];
            edges.push([lift(t1, s, u), lift(t1, s, v)]);
            base_edge.push(e);
            displacement.push(base.displacement[e]);
            lengths.push(base.primal_vol[1][e]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nf);
    let mut base_face = Vec::with_capacity(2 * nf);
    for s in 0..2 {
        for t in 0..nf {
            let cell = &base.cells[2][t];
            let support = cell.support.iter().map(|&v| lift(t, s, v)).collect();
            let faces = cell
                .faces
                .iter()
                .map(|&(e, sign)| {
                    let sheet = if adjacent[e][0] == t { s } else { s ^ cut[e] as usize };
                    (sheet * ne + e, sign)
                })
                .collect();
            tris.push((support, faces));
            base_face.push(t);
        }
    }
    let coords = base_vertex.iter().map(|&v| base.coords[v]).collect();
    let complex = triangle_complex_with_lengths(base_vertex.len(), edges, tris, coords, displacement, &lengths);
    let branch_points = (0..base_vertex.len()).filter(|v| branch_base.contains(&base_vertex[*v])).collect();
    Ok(BranchedSurface { genus, n, complex, base, base_vertex, base_edge, base_face, branch_points })
}

impl BranchedSurface {
    /// Pull back a cocycle on the base torus.
    pub fn pullback(&self, z: &OneCocycle) -> OneCocycle {
        OneCocycle { values: self.base_edge.iter().map(|&e| z.values[e]).collect() }
    }

    /// Pull back a function on the base vertices.
    pub fn pullback_function(&self, f: &[f64]) -> Vec<f64> {
        self.base_vertex.iter().map(|&v| f[v]).collect()
    }
}

/// Base-torus coordinates of the branch points of [`build_surface`]`(genus, n)`.
pub fn branch_locations(genus: usize, n: usize) -> Result<Vec<[f64; 2]>> {
    if genus == 0 {
        return Err(Error::Unsupported("genus 0 (use a genus ≥ 1 surface)".into()));
    }
    if genus == 1 {
        return Ok(vec![]);
    }
    if n < RESOLUTION_FLOOR.max(8 * (genus - 1)) {
        return Err(Error::ResolutionTooLow { got: n, floor: RESOLUTION_FLOOR.max(8 * (genus - 1)) });
    }
    let (rows, c0, len) = slits(genus, n);
    let h = 1.0 / n as f64;
    Ok(rows
        .iter()
        .flat_map(|&r| [[c0 as f64 * h, r as f64 * h], [(c0 + len) as f64 * h, r as f64 * h]])
        .collect())
}
