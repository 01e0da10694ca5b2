use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::CellComplex;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Face sums of a closed cocycle vanish to this tolerance.
pub const CLOSED_TOL: f64 = 1e-12;

/// Real 1-cochain on the support edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneCocycle {
    pub values: Vec<f64>,
}

impl OneCocycle {
    pub fn zero(edges: usize) -> Self {
        Self { values: vec![0.0; edges] }
    }

    /// `dh` for a vertex function `h`.
    pub fn exact(cx: &CellComplex, h: &[f64]) -> Self {
        Self { values: cx.edges.iter().map(|&[u, v]| h[v] - h[u]).collect() }
    }

    /// Largest inconsistency of the cocycle around the closure of any cell.
    pub fn closedness_defect(&self, cx: &CellComplex) -> f64 {
        let z: Vec<C64> = super::real_cocycle(&self.values);
        let mut worst = 0.0f64;
        for layer in &cx.cells {
            for cell in layer {
                if cell.closure.len() < 2 {
                    continue;
                }
                let pot = cx.local_primitive(&z, &cell.support, &cell.closure);
                let at = |v: usize| pot.iter().find(|p| p.0 == v).map(|p| p.1.re).unwrap_or(f64::NAN);
                for &e in &cell.closure {
                    let [u, v] = cx.edges[e];
                    let scale = 1.0f64.max(self.values[e].abs());
                    worst = worst.max((at(v) - at(u) - self.values[e]).abs() / scale);
                }
            }
        }
        worst
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ sign · θ(e)` along a signed edge loop.
    pub fn period(&self, lp: &[(usize, f64)]) -> f64 {
        lp.iter().map(|&(e, s)| s * self.values[e]).sum()
    }

    /// Two-column CSV `edge,theta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,theta\n");
        for (e, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{e},{v:.17e}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse_err = || Error::InvalidInput(format!("bad twist CSV line {}", i + 1));
            let e: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(parse_err)?;
            let v: f64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(parse_err)?;
            rows.push((e, v));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for (e, v) in rows {
            if e >= values.len() {
                return Err(Error::InvalidInput(format!("edge index {e} out of range")));
            }
            values[e] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("twist CSV misses edges".into()));
        }
        Ok(Self { values })
    }
}

/// Generators of `H₁` as signed edge loops and the dual integer cocycles
/// (`ζ_i(γ_j) = δ_ij`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomologyBasis {
    pub loops: Vec<Vec<(usize, f64)>>,
    pub cocycles: Vec<OneCocycle>,
}

fn spanning_tree(cx: &CellComplex) -> (Vec<bool>, Vec<Option<(usize, f64)>>, Vec<usize>) {
    let nv = cx.num_vertices;
    let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nv];
    for (e, &[u, v]) in cx.edges.iter().enumerate() {
        adj[u].push((v, e, 1.0));
        adj[v].push((u, e, -1.0));
    }
    let mut in_tree = vec![false; cx.edges.len()];
    // parent edge, signed in the parent → child direction
    let mut parent: Vec<Option<(usize, f64)>> = vec![None; nv];
    let mut depth = vec![usize::MAX; nv];
    depth[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        for &(b, e, s) in &adj[a] {
            if depth[b] == usize::MAX {
                depth[b] = depth[a] + 1;
                parent[b] = Some((e, s));
                in_tree[e] = true;
                queue.push_back(b);
            }
        }
    }
    (in_tree, parent, depth)
}

fn other_end(cx: &CellComplex, e: usize, v: usize) -> usize {
    let [a, b] = cx.edges[e];
    if a == v {
        b
    } else {
        a
    }
}

/// Tree path from `a` to `b` as signed edges.
fn tree_path(cx: &CellComplex, parent: &[Option<(usize, f64)>], depth: &[usize], a: usize, b: usize) -> Vec<(usize, f64)> {
    let (mut x, mut y) = (a, b);
    let mut up = Vec::new();
    let mut down = Vec::new();
    while x != y {
        if depth[x] >= depth[y] {
            let (e, s) = parent[x].unwrap();
            up.push((e, -s));
            x = other_end(cx, e, x);
        } else {
            let (e, s) = parent[y].unwrap();
            down.push((e, s));
            y = other_end(cx, e, y);
        }
    }
    down.reverse();
    up.extend(down);
    up
}

impl HomologyBasis {
    /// Tree–cotree decomposition of a primal complex of dimension 1 or 2.
    pub fn tree_cotree(cx: &CellComplex) -> Result<Self> {
        if cx.is_dual {
            return Err(Error::Unsupported("homology basis of a dual complex".into()));
        }
        let (in_tree, parent, depth) = spanning_tree(cx);
        if depth.iter().any(|&d| d == usize::MAX) {
            return Err(Error::InvalidInput("complex is not connected".into()));
        }
        let ne = cx.edges.len();
        // edge → adjacent top cells
        let mut edge_faces: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ne];
        if cx.n == 2 {
            for (f, cell) in cx.cells[2].iter().enumerate() {
                for &(e, s) in &cell.faces {
                    edge_faces[e].push((f, s));
                }
            }
        }
        let nf = if cx.n == 2 { cx.cells[2].len() } else { 0 };
        let mut in_cotree = vec![false; ne];
        let mut face_parent: Vec<Option<usize>> = vec![None; nf];
        let mut order = Vec::new();
        if nf > 0 {
            let mut seen = vec![false; nf];
            seen[0] = true;
            let mut queue = VecDeque::from([0usize]);
            while let Some(f) = queue.pop_front() {
                order.push(f);
                for &(e, _) in &cx.cells[2][f].faces {
                    if in_tree[e] {
                        continue;
                    }
                    for &(g, _) in &edge_faces[e] {
                        if !seen[g] {
                            seen[g] = true;
                            in_cotree[e] = true;
                            face_parent[g] = Some(e);
                            queue.push_back(g);
                        }
                    }
                }
            }
        }
        let generators: Vec<usize> = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
        let mut loops = Vec::new();
        let mut cocycles = Vec::new();
        for &g in &generators {
            let [u, v] = cx.edges[g];
            let mut lp = vec![(g, 1.0)];
            lp.extend(tree_path(cx, &parent, &depth, v, u));
            loops.push(lp);

            let mut val = vec![f64::NAN; ne];
            for e in 0..ne {
                if in_tree[e] || (!in_cotree[e]) {
                    val[e] = if e == g { 1.0 } else { 0.0 };
                }
            }
            // leaves of the dual tree first: each face fixes its parent edge
            for &f in order.iter().rev() {
                if let Some(pe) = face_parent[f] {
                    let mut sum = 0.0;
                    let mut sign_pe = 0.0;
                    for &(e, s) in &cx.cells[2][f].faces {
                        if e == pe {
                            sign_pe = s;
                        } else {
                            sum += s * val[e];
                        }
                    }
                    val[pe] = -sum / sign_pe;
                }
            }
            cocycles.push(OneCocycle { values: val });
        }
        Ok(Self { loops, cocycles })
    }

    /// Basis dual to prescribed loops (which must span `H₁`).
    pub fn with_loops(cx: &CellComplex, loops: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let tc = Self::tree_cotree(cx)?;
        let g = tc.cocycles.len();
        if loops.len() != g {
            return Err(Error::DimensionMismatch(format!("{} loops for rank-{g} homology", loops.len())));
        }
        // P[i][j] = ζ'_j(γ_i); new ζ_i = Σ_j (P⁻¹)_{ji} ζ'_j
        let p = faer::Mat::from_fn(g, g, |i, j| tc.cocycles[j].period(&loops[i]));
        let id = faer::Mat::<f64>::identity(g, g);
        let lu = p.partial_piv_lu();
        let inv = faer::linalg::solvers::Solve::solve(&lu, &id);
        for i in 0..g {
            for j in 0..g {
                if !inv[(i, j)].is_finite() {
                    return Err(Error::InvalidInput("loops do not span homology".into()));
                }
            }
        }
        let cocycles = (0..g)
            .map(|i| {
                let mut v = vec![0.0; cx.edges.len()];
                for j in 0..g {
                    let c = inv[(j, i)];
                    for (e, x) in v.iter_mut().enumerate() {
                        *x += c * tc.cocycles[j].values[e];
                    }
                }
                OneCocycle { values: v }
            })
            .collect();
        Ok(Self { loops, cocycles })
    }

    pub fn rank(&self) -> usize {
        self.loops.len()
    }

    pub fn periods(&self, z: &OneCocycle) -> Vec<f64> {
        self.loops.iter().map(|l| z.period(l)).collect()
    }
}

/// Harmonic cocycle with the given periods: `Σ c_i ζ_i − dh` where `h`
/// minimizes the lumped norm, i.e. `d*(Σ c_i ζ_i − dh) = 0`.
pub fn harmonic_twist(cx: &CellComplex, basis: &HomologyBasis, coords: &[f64]) -> Result<OneCocycle> {
    if coords.len() != basis.rank() {
        return Err(Error::DimensionMismatch(format!(
            "{} class coordinates for rank-{} homology",
            coords.len(),
            basis.rank()
        )));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("class coordinates must be finite".into()));
    }
    let mut z = OneCocycle::zero(cx.edges.len());
    for (c, zeta) in coords.iter().zip(&basis.cocycles) {
        z = z.add(&zeta.scaled(*c));
    }
    if z.max_abs() == 0.0 {
        return Ok(z);
    }
    let h = poisson_correction(cx, &z)?;
    Ok(z.add(&OneCocycle::exact(cx, &h).scaled(-1.0)))
}

/// Solve `d*⋆ d h = d*⋆ z` on vertices by conjugate gradients (mean-zero `h`).
fn poisson_correction(cx: &CellComplex, z: &OneCocycle) -> Result<Vec<f64>> {
    let star1 = cx.star(1);
    let nv = cx.num_vertices;
    let apply = |h: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (e, &[u, v]) in cx.edges.iter().enumerate() {
            let flow = star1[e] * (h[v] - h[u]);
            out[v] += flow;
            out[u] -= flow;
        }
    };
    let mut rhs = vec![0.0; nv];
    for (e, &[u, v]) in cx.edges.iter().enumerate() {
        let flow = star1[e] * z.values[e];
        rhs[v] += flow;
        rhs[u] -= flow;
    }
    let mean = rhs.iter().sum::<f64>() / nv as f64;
    rhs.iter_mut().for_each(|x| *x -= mean);
    let mut h = vec![0.0; nv];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; nv];
    let bnorm = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rr: f64 = r.iter().map(|x| x * x).sum();
    for _ in 0..20 * nv + 100 {
        if rr.sqrt() <= 1e-13 * bnorm.max(1e-300) {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..nv {
            h[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|x| x * x).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..nv {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(h)
}
