//! Dense and sparse linear algebra helpers shared by every module.
//!
//! Dense work goes through `faer`; sparse operators are `sprs` CSR matrices
//! with real entries. Hermitian complex operators are realified before they
//! reach the iterative solver.

use faer::{Mat, Side};
use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Mat<C64>;
pub type RMat = Mat<f64>;
pub type SparseMat = CsMat<f64>;

/// Eigenvalues below this are classified as kernel.
pub const KERNEL_TOL: f64 = 1e-10;

pub fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn cmat_zeros(rows: usize, cols: usize) -> CMat {
    Mat::from_fn(rows, cols, |_, _| czero())
}

pub fn cmat_identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { czero() })
}

pub fn adjoint(m: &CMat) -> CMat {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    a * b
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + b[(i, j)])
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// Largest entry modulus; zero for empty matrices.
pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Spectral norm via singular values.
pub fn op_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn hermitian_deviation(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), cmat_zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..n).map(|i| s[i].re).collect();
    let u = evd.U();
    Ok((vals, Mat::from_fn(n, n, |i, j| u[(i, j)])))
}

pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))
}

pub fn symmetric_eigenvalues(a: &RMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))
}

pub fn symmetric_eigen(a: &RMat) -> Result<(Vec<f64>, RMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..n).map(|i| s[i]).collect();
    let u = evd.U();
    Ok((vals, Mat::from_fn(n, n, |i, j| u[(i, j)])))
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    match a.singular_values() {
        Ok(s) => s,
        // Fall back to the Gram matrix if the SVD iteration stalls.
        Err(_) => {
            let g = matmul(&adjoint(a), a);
            let mut v: Vec<f64> = hermitian_eigenvalues(&g)
                .unwrap_or_default()
                .into_iter()
                .map(|x| x.max(0.0).sqrt())
                .collect();
            v.sort_by(|x, y| y.total_cmp(x));
            v
        }
    }
}

pub fn real_singular_values(a: &RMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.singular_values().unwrap_or_default()
}

/// Numerical rank with a relative cutoff on the largest singular value.
pub fn real_rank(a: &RMat, rel_tol: f64) -> usize {
    let s = real_singular_values(a);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

pub fn to_complex(a: &RMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C64::new(a[(i, j)], 0.0))
}

/// `a ⊗ I_k` with the identity as the fast (inner) index.
pub fn kron_identity(a: &CMat, k: usize) -> CMat {
    Mat::from_fn(a.nrows() * k, a.ncols() * k, |i, j| {
        if i % k == j % k {
            a[(i / k, j / k)]
        } else {
            czero()
        }
    })
}

/// Orthonormal basis (as columns) of the range of a Hermitian projection.
pub fn projection_range(p: &CMat) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(p)?;
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    Ok(Mat::from_fn(p.nrows(), cols.len(), |i, j| vecs[(i, cols[j])]))
}

// ---------------------------------------------------------------------------
// sparse

pub fn sparse_from_triplets(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> SparseMat {
    let mut tri = TriMat::new((rows, cols));
    for &(i, j, v) in entries {
        tri.add_triplet(i, j, v);
    }
    tri.to_csr()
}

pub fn sparse_zeros(rows: usize, cols: usize) -> SparseMat {
    CsMat::zero((rows, cols))
}

pub fn sparse_transpose(a: &SparseMat) -> SparseMat {
    a.transpose_view().to_csr()
}

pub fn sparse_mul(a: &SparseMat, b: &SparseMat) -> SparseMat {
    assert_eq!(a.cols(), b.rows(), "sparse product shape mismatch");
    (a * b).to_csr()
}

pub fn sparse_add(a: &SparseMat, b: &SparseMat) -> SparseMat {
    (a + b).to_csr()
}

pub fn sparse_scale(a: &SparseMat, s: f64) -> SparseMat {
    a.map(|v| v * s)
}

pub fn sparse_matvec(a: &SparseMat, x: &[f64], y: &mut [f64]) {
    for (i, row) in a.outer_iterator().enumerate() {
        y[i] = row.iter().map(|(j, &v)| v * x[j]).sum();
    }
}

pub fn sparse_to_dense(a: &SparseMat) -> RMat {
    let mut m = Mat::zeros(a.rows(), a.cols());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            m[(i, j)] += v;
        }
    }
    m
}

pub fn sparse_max_abs(a: &SparseMat) -> f64 {
    a.data().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Realification `[[Re, -Im], [Im, Re]]` of a complex matrix given by its parts.
/// A Hermitian matrix maps to a symmetric one whose eigenvalues are those of
/// the original, each doubled.
pub fn realify(re: &SparseMat, im: &SparseMat) -> SparseMat {
    let (r, c) = (re.rows(), re.cols());
    let mut entries = Vec::with_capacity(2 * (re.nnz() + im.nnz()));
    for (i, row) in re.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            entries.push((i, j, v));
            entries.push((i + r, j + c, v));
        }
    }
    for (i, row) in im.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            entries.push((i, j + c, -v));
            entries.push((i + r, j, v));
        }
    }
    sparse_from_triplets(2 * r, 2 * c, &entries)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realified_hermitian_doubles_spectrum() {
        // H = [[1, i], [-i, 2]]
        let re = sparse_from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]);
        let im = sparse_from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]);
        let r = sparse_to_dense(&realify(&re, &im));
        let mut ev = symmetric_eigenvalues(&r).unwrap();
        ev.sort_by(f64::total_cmp);
        let h = Mat::from_fn(2, 2, |i, j| {
            C64::new(if i == j { (i + 1) as f64 } else { 0.0 }, match (i, j) {
                (0, 1) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            })
        });
        let hv = hermitian_eigenvalues(&h).unwrap();
        for (k, v) in hv.iter().enumerate() {
            assert!((ev[2 * k] - v).abs() < 1e-12);
            assert!((ev[2 * k + 1] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(2, 3), 0);
    }
}
