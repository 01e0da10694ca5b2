use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Cell, CellComplex, HomologyBasis, OneCocycle, CLOSED_TOL};
use crate::error::{Error, Result};

/// Bookkeeping for a cyclic cover: lifted `k`-cell `(c, s)` has index
/// `s · base_counts[k] + c`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverInfo {
    pub sheets: usize,
    pub base_counts: Vec<usize>,
    /// Periods of the classifying cocycle on the base homology basis.
    pub periods: Vec<i64>,
}

impl CoverInfo {
    pub fn base_cell(&self, k: usize, lifted: usize) -> (usize, usize) {
        (lifted % self.base_counts[k], lifted / self.base_counts[k])
    }

    /// Pull back a cocycle from the base.
    pub fn pullback(&self, z: &OneCocycle) -> OneCocycle {
        let ne = self.base_counts[1];
        OneCocycle { values: (0..self.sheets * ne).map(|e| z.values[e % ne]).collect() }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Integer primitive of `z` on a cell closure, rooted at `root`.
fn integer_primitive(cx: &CellComplex, z: &[i64], root: usize, edges: &[usize]) -> Vec<(usize, i64)> {
    let mut pot = vec![(root, 0i64)];
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        let ha = pot.iter().find(|p| p.0 == a).unwrap().1;
        for &e in edges {
            let [u, v] = cx.edges[e];
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

/// Connected `k`-sheeted cyclic cover classified by the integer cocycle
/// `z` reduced mod `k`. Crossing edge `e` moves up `z(e)` sheets.
pub fn build_cover(cx: &CellComplex, k: usize, z: &[i64]) -> Result<(CellComplex, CoverInfo)> {
    if cx.is_dual {
        return Err(Error::Unsupported("covers of dual complexes".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("a cover needs at least one sheet".into()));
    }
    cx.check_cocycle_len(z.len())?;
    let zf = OneCocycle { values: z.iter().map(|&v| v as f64).collect() };
    if zf.closedness_defect(cx) > CLOSED_TOL {
        return Err(Error::NotClosed(zf.closedness_defect(cx)));
    }
    let basis = HomologyBasis::tree_cotree(cx)?;
    let periods: Vec<i64> = basis.periods(&zf).iter().map(|p| p.round() as i64).collect();
    let g = periods.iter().fold(k as i64, |acc, &p| gcd(acc, p));
    if k > 1 && g != 1 {
        return Err(Error::InvalidInput(format!(
            "cocycle periods {periods:?} do not generate Z/{k}; the cover would be disconnected"
        )));
    }
    let ki = k as i64;
    let sheet = |s: usize, shift: i64| (s as i64 + shift).rem_euclid(ki) as usize;
    let counts = cx.counts();
    let nv = cx.num_vertices;
    let ne = cx.edges.len();

    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(cx.n + 1);
    for (dim, layer) in cx.cells.iter().enumerate() {
        let mut out = Vec::with_capacity(k * layer.len());
        for s in 0..k {
            for cell in layer {
                let root = cell.support[0];
                let pot = integer_primitive(cx, z, root, &cell.closure);
                let at = |v: usize| pot.iter().find(|p| p.0 == v).map(|p| p.1).unwrap_or(0);
                let support = cell.support.iter().map(|&v| sheet(s, at(v)) * nv + v).collect();
                let closure = cell.closure.iter().map(|&e| sheet(s, at(cx.edges[e][0])) * ne + e).collect();
                let faces = if dim == 0 {
                    Vec::new()
                } else {
                    cell.faces
                        .iter()
                        .map(|&(t, sign)| {
                            let first = cx.cells[dim - 1][t].support[0];
                            (sheet(s, at(first)) * counts[dim - 1] + t, sign)
                        })
                        .collect()
                };
                out.push(Cell { faces, support, closure });
            }
        }
        cells.push(out);
    }
    let mut edges = Vec::with_capacity(k * ne);
    for s in 0..k {
        for (e, &[u, v]) in cx.edges.iter().enumerate() {
            edges.push([s * nv + u, sheet(s, z[e]) * nv + v]);
        }
    }
    let rep = |v: &Vec<f64>| -> Vec<f64> { (0..k).flat_map(|_| v.iter().copied()).collect() };
    let cover = CellComplex {
        n: cx.n,
        cells,
        edges,
        num_vertices: k * nv,
        primal_vol: cx.primal_vol.iter().map(rep).collect(),
        dual_vol: cx.dual_vol.iter().map(rep).collect(),
        coords: (0..k).flat_map(|_| cx.coords.iter().copied()).collect(),
        displacement: (0..k).flat_map(|_| cx.displacement.iter().copied()).collect(),
        is_dual: false,
    };
    Ok((cover, CoverInfo { sheets: k, base_counts: counts, periods }))
}
