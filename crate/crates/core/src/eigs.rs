//! Lowest eigenvalues of large sparse symmetric operators.
//!
//! Block Lanczos with full reorthogonalization and thick restarts on Ritz
//! vectors. A shift-invert wrapper (inner solves by conjugate gradients) is
//! provided for positive definite operators with a clustered low end.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{sparse_matvec, symmetric_eigen, symmetric_eigenvalues, SparseMat};

/// Rows up to which the dense solver is used instead of Lanczos.
pub const DENSE_LIMIT: usize = 600;
/// Hard ceiling on dense full decompositions.
pub const DENSE_FULL_LIMIT: usize = 20_000;

pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymOperator for SparseMat {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        sparse_matvec(self, x, y);
    }
}

/// `x ↦ c·A x`.
pub struct Scaled<'a, A: SymOperator + ?Sized> {
    pub inner: &'a A,
    pub factor: f64,
}

impl<A: SymOperator + ?Sized> SymOperator for Scaled<'_, A> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        for v in y.iter_mut() {
            *v *= self.factor;
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub block: usize,
    pub max_basis: usize,
    /// Residual tolerance relative to the operator norm estimate.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { block: 8, max_basis: 320, tol: 1e-10, max_iters: 4000, seed: 0x5eed }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dense_from_operator<A: SymOperator + ?Sized>(op: &A) -> Mat<f64> {
    let n = op.dim();
    let mut m = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    // symmetrize against rounding in the operator
    let mut s = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    s
}

/// All eigenvalues of a symmetric operator by dense decomposition.
pub fn all_eigenvalues<A: SymOperator + ?Sized>(op: &A) -> Result<Vec<f64>> {
    if op.dim() > DENSE_FULL_LIMIT {
        return Err(Error::SizeLimit { rows: op.dim(), limit: DENSE_FULL_LIMIT });
    }
    let mut v = symmetric_eigenvalues(&dense_from_operator(op))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// The `k` smallest eigenvalues, ascending.
pub fn lowest_eigenvalues<A: SymOperator + ?Sized>(
    op: &A,
    k: usize,
    opts: &LanczosOptions,
) -> Result<Vec<f64>> {
    let n = op.dim();
    let k = k.min(n);
    if k == 0 {
        return Ok(Vec::new());
    }
    if n <= DENSE_LIMIT.max(k + 2 * opts.block + 16) && n <= DENSE_FULL_LIMIT {
        let mut v = all_eigenvalues(op)?;
        v.truncate(k);
        return Ok(v);
    }
    block_lanczos(op, k, opts)
}

struct Basis {
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    /// Projected matrix, row-major growing square.
    t: Vec<Vec<f64>>,
}

impl Basis {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// Orthogonalize `w` against the basis (twice) and append it.
    /// Returns false if `w` is numerically dependent.
    fn push<A: SymOperator + ?Sized>(&mut self, op: &A, mut w: Vec<f64>) -> bool {
        let w0 = norm(&w);
        if w0 == 0.0 || !w0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for q in &self.v {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let nw = norm(&w);
        if nw <= 1e-10 * w0 {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        let mut aw = vec![0.0; w.len()];
        op.apply(&w, &mut aw);
        let m = self.v.len();
        let mut row = Vec::with_capacity(m + 1);
        for j in 0..m {
            row.push(dot(&w, &self.av[j]));
        }
        row.push(dot(&w, &aw));
        for (j, r) in self.t.iter_mut().enumerate() {
            r.push(row[j]);
        }
        self.t.push(row);
        self.v.push(w);
        self.av.push(aw);
        true
    }

    fn ritz(&self) -> Result<(Vec<f64>, Mat<f64>)> {
        let m = self.len();
        let t = Mat::from_fn(m, m, |i, j| 0.5 * (self.t[i][j] + self.t[j][i]));
        symmetric_eigen(&t)
    }

    fn combine(&self, y: &Mat<f64>, col: usize, from_av: bool) -> Vec<f64> {
        let src = if from_av { &self.av } else { &self.v };
        let mut out = vec![0.0; src[0].len()];
        for (i, s) in src.iter().enumerate() {
            let c = y[(i, col)];
            if c != 0.0 {
                axpy(c, s, &mut out);
            }
        }
        out
    }
}

fn block_lanczos<A: SymOperator + ?Sized>(op: &A, k: usize, opts: &LanczosOptions) -> Result<Vec<f64>> {
    let n = op.dim();
    let b = opts.block.max(1);
    let max_basis = opts.max_basis.max(k + 3 * b).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis { v: Vec::new(), av: Vec::new(), t: Vec::new() };

    let mut pending: Vec<Vec<f64>> =
        (0..b).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let mut anorm = 0.0f64;

    for _iter in 0..opts.max_iters {
        let before = basis.len();
        let mut added = Vec::new();
        for w in pending.drain(..) {
            if basis.len() >= max_basis {
                break;
            }
            if basis.push(op, w) {
                added.push(basis.len() - 1);
            }
        }
        if added.is_empty() && before == basis.len() {
            // Krylov space exhausted: inject fresh random directions.
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            if basis.len() >= n || !basis.push(op, w) {
                let (vals, _) = basis.ritz()?;
                return Ok(vals.into_iter().take(k).collect());
            }
            added.push(basis.len() - 1);
        }

        let (vals, y) = basis.ritz()?;
        for v in &vals {
            anorm = anorm.max(v.abs());
        }
        let m = basis.len();
        if m < k {
            pending = added.iter().map(|&i| basis.av[i].clone()).collect();
            continue;
        }
        let scale = anorm.max(1.0);
        let mut converged = true;
        let mut residuals = Vec::new();
        for c in 0..k.min(m) {
            let ay = basis.combine(&y, c, true);
            let vy = basis.combine(&y, c, false);
            let r: Vec<f64> = ay.iter().zip(&vy).map(|(a, v)| a - vals[c] * v).collect();
            let rn = norm(&r);
            if rn > opts.tol * scale {
                converged = false;
                residuals.push(r);
            }
        }
        if converged && m >= k + b.min(n - k) {
            return Ok(vals.into_iter().take(k).collect());
        }
        if m + b > max_basis {
            // Thick restart on the lowest Ritz vectors.
            let keep = (k + 2 * b).min(m);
            let mut next = Basis { v: Vec::new(), av: Vec::new(), t: Vec::new() };
            for c in 0..keep {
                let vy = basis.combine(&y, c, false);
                next.push(op, vy);
            }
            basis = next;
            pending = residuals.into_iter().take(b).collect();
            if pending.is_empty() {
                pending.push((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
            }
        } else {
            pending = added.iter().map(|&i| basis.av[i].clone()).collect();
        }
    }
    Err(Error::Solver(format!("block Lanczos did not converge for {k} eigenvalues of a {n}-row operator")))
}

/// `x ↦ −(A − σ)⁻¹x` for symmetric `A` with `A − σ` positive definite.
pub struct ShiftInvert<'a> {
    pub a: &'a SparseMat,
    pub sigma: f64,
    pub cg_tol: f64,
}

impl ShiftInvert<'_> {
    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let bnorm = norm(b).max(f64::MIN_POSITIVE);
        let mut rr = dot(&r, &r);
        for _ in 0..(20 * n).max(100) {
            if rr.sqrt() <= self.cg_tol * bnorm {
                break;
            }
            sparse_matvec(self.a, &p, &mut ap);
            axpy(-self.sigma, &p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            axpy(alpha, &p, x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
        }
    }
}

impl SymOperator for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.a.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.solve(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Lowest eigenvalues of `a` above the shift `sigma`, via shift-invert.
pub fn lowest_shift_invert(a: &SparseMat, sigma: f64, k: usize, opts: &LanczosOptions) -> Result<Vec<f64>> {
    let si = ShiftInvert { a, sigma, cg_tol: 1e-13 };
    let mu = block_lanczos_or_dense(&si, k, opts)?;
    let mut out: Vec<f64> = mu.into_iter().map(|m| sigma - 1.0 / m).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn block_lanczos_or_dense<A: SymOperator + ?Sized>(op: &A, k: usize, opts: &LanczosOptions) -> Result<Vec<f64>> {
    if op.dim() <= DENSE_LIMIT {
        let mut v = all_eigenvalues(op)?;
        v.truncate(k);
        Ok(v)
    } else {
        block_lanczos(op, k, opts)
    }
}
