use faer::Mat;
use rand::Rng;

use super::FiniteComplex;
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, cmat_identity, cmat_zeros, hermitian_eigen, matmul, sub, CMat, C64, KERNEL_TOL,
};
use crate::vn_core::{random_cmat, AEndomorphism, HilbertianModule, VNAlgebra};

/// Random unitary from the eigenvectors of a random Hermitian matrix.
fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Result<CMat> {
    let x = random_cmat(rng, n, n);
    let h = crate::linalg::add(&x, &adjoint(&x));
    Ok(hermitian_eigen(&h)?.1)
}

fn random_module<R: Rng>(rng: &mut R, algebra: &VNAlgebra, max_mult: usize) -> Result<HilbertianModule> {
    let k = rng.random_range(1..=max_mult.max(1));
    if rng.random_bool(0.5) {
        return Ok(HilbertianModule::free(algebra, k));
    }
    let mut proj = Vec::new();
    for b in algebra.blocks() {
        let n = k * b.dim;
        let r = rng.random_range(0..=n);
        let u = random_unitary(rng, n)?;
        let p = Mat::from_fn(n, n, |i, j| (0..r).map(|m| u[(i, m)] * u[(j, m)].conj()).sum::<C64>());
        // symmetrize away rounding so the idempotency check sees a clean projection
        let p = Mat::from_fn(n, n, |i, j| (p[(i, j)] + p[(j, i)].conj()) * 0.5);
        proj.push(p);
    }
    HilbertianModule::with_projection(algebra, k, proj)
}

/// Orthogonal projector onto the column space of `m`.
fn range_projector(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Ok(cmat_zeros(n, n));
    }
    let (vals, vecs) = hermitian_eigen(&matmul(m, &adjoint(m)))?;
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > KERNEL_TOL.max(1e-12 * top)).collect();
    Ok(Mat::from_fn(n, n, |i, j| keep.iter().map(|&c| vecs[(i, c)] * vecs[(j, c)].conj()).sum()))
}

/// Random complex of `len` modules (`len ≥ 1`) with multiplicities up to
/// `max_mult`. Each differential is a random low-rank map killed on the image
/// of its predecessor, so `d² = 0` up to rounding.
pub fn random_complex<R: Rng>(
    rng: &mut R,
    algebra: &VNAlgebra,
    len: usize,
    max_mult: usize,
) -> Result<FiniteComplex> {
    if len == 0 {
        return Err(Error::InvalidInput("complex needs at least one module".into()));
    }
    let modules = (0..len)
        .map(|_| random_module(rng, algebra, max_mult))
        .collect::<Result<Vec<_>>>()?;
    let nb = algebra.blocks().len();
    let mut diffs: Vec<AEndomorphism> = Vec::new();
    for j in 0..len - 1 {
        let (src, dst) = (modules[j].block_ranks(), modules[j + 1].block_ranks());
        let mut blocks = Vec::with_capacity(nb);
        for b in 0..nb {
            let (n, m) = (src[b], dst[b]);
            let rank = rng.random_range(0..=n.min(m));
            let r = matmul(&random_cmat(rng, m, rank), &random_cmat(rng, rank, n));
            let d = match diffs.last() {
                Some(prev) => {
                    let pi = range_projector(&prev.blocks[b])?;
                    matmul(&r, &sub(&cmat_identity(n), &pi))
                }
                None => r,
            };
            blocks.push(d);
        }
        diffs.push(AEndomorphism { blocks, weights: modules[j].identity().weights });
    }
    FiniteComplex::new(modules, diffs)
}

/// Chain maps `f: c₁ → c₂`, `g: c₂ → c₁` with homotopies `h₁: g f ≃ Id` and
/// `h₂: f g ≃ Id`.
#[derive(Clone, Debug)]
pub struct HomotopyData {
    pub complex: FiniteComplex,
    pub f: Vec<AEndomorphism>,
    pub g: Vec<AEndomorphism>,
    pub h1: Vec<AEndomorphism>,
    pub h2: Vec<AEndomorphism>,
}

fn map_from_blocks(blocks: Vec<CMat>, weights: &[f64]) -> AEndomorphism {
    AEndomorphism { blocks, weights: weights.to_vec() }
}

fn zero_maps(src: &[HilbertianModule], dst: &[HilbertianModule]) -> Vec<AEndomorphism> {
    src.iter().zip(dst).map(|(s, t)| s.zero_map_to(t)).collect()
}

/// `c₂ = c₁ ⊕ (E --Id--> E)` with the elementary summand in degrees `k, k+1`.
pub fn contractible_summand(c1: &FiniteComplex, k: usize, mult: usize) -> Result<HomotopyData> {
    let n = c1.top();
    if k >= n {
        return Err(Error::DegreeOutOfRange { degree: k + 1, top: n });
    }
    let alg = c1.algebra();
    let e_mods: Vec<HilbertianModule> = (0..=n)
        .map(|j| HilbertianModule::free(alg, if j == k || j == k + 1 { mult } else { 0 }))
        .collect();
    let e_diffs: Vec<AEndomorphism> = (0..n)
        .map(|j| {
            if j == k {
                e_mods[k].identity()
            } else {
                e_mods[j].zero_map_to(&e_mods[j + 1])
            }
        })
        .collect();
    let e = FiniteComplex::new(e_mods.clone(), e_diffs)?;
    let c2 = c1.direct_sum(&e)?;
    let w = c1.modules()[0].identity().weights;

    let mut f = Vec::new();
    let mut g = Vec::new();
    for j in 0..=n {
        let r1 = c1.modules()[j].block_ranks();
        let re = e_mods[j].block_ranks();
        let inc: Vec<CMat> = (0..r1.len())
            .map(|b| Mat::from_fn(r1[b] + re[b], r1[b], |i, c| C64::new(if i == c { 1.0 } else { 0.0 }, 0.0)))
            .collect();
        let proj: Vec<CMat> = inc.iter().map(adjoint).collect();
        f.push(map_from_blocks(inc, &w));
        g.push(map_from_blocks(proj, &w));
    }
    let h1 = (0..n)
        .map(|j| c1.modules()[j + 1].zero_map_to(&c1.modules()[j]))
        .collect();
    let mut h2 = zero_maps(&c2.modules()[1..], &c2.modules()[..n]);
    // h₂ sends the E summand in degree k+1 back to degree k with a minus sign
    let r1k = c1.modules()[k].block_ranks();
    let r1k1 = c1.modules()[k + 1].block_ranks();
    for b in 0..r1k.len() {
        let m = &mut h2[k].blocks[b];
        let ek = m.nrows() - r1k[b];
        for i in 0..ek {
            m[(r1k[b] + i, r1k1[b] + i)] = C64::new(-1.0, 0.0);
        }
    }
    Ok(HomotopyData { complex: c2, f, g, h1, h2 })
}

/// Positive definite `A = B B* / ‖B‖² + 0.5` per block and its inverse.
fn random_positive<R: Rng>(rng: &mut R, n: usize) -> Result<(CMat, CMat)> {
    let b = random_cmat(rng, n, n);
    let bb = matmul(&b, &adjoint(&b));
    let scale = crate::linalg::op_norm(&bb).max(1e-300);
    let a = Mat::from_fn(n, n, |i, j| {
        bb[(i, j)] / scale + if i == j { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) }
    });
    let a = Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let (vals, vecs) = hermitian_eigen(&a)?;
    let inv = Mat::from_fn(n, n, |i, j| (0..n).map(|m| vecs[(i, m)] * vecs[(j, m)].conj() / vals[m]).sum());
    Ok((a, inv))
}

/// `d²_j = A_{j+1} d_j A_j⁻¹` with random positive `A_j`; `f = A`, `g = A⁻¹`.
pub fn conjugated_complex<R: Rng>(rng: &mut R, c1: &FiniteComplex) -> Result<HomotopyData> {
    let n = c1.top();
    let w = c1.modules()[0].identity().weights;
    let mut f = Vec::new();
    let mut g = Vec::new();
    for m in c1.modules() {
        let mut a = Vec::new();
        let mut ai = Vec::new();
        for r in m.block_ranks() {
            let (x, y) = random_positive(rng, r)?;
            a.push(x);
            ai.push(y);
        }
        f.push(map_from_blocks(a, &w));
        g.push(map_from_blocks(ai, &w));
    }
    let diffs = (0..n)
        .map(|j| f[j + 1].compose(&c1.differentials()[j]).compose(&g[j]))
        .collect();
    let c2 = FiniteComplex::new(c1.modules().to_vec(), diffs)?;
    let h1 = zero_maps(&c1.modules()[1..], &c1.modules()[..n]);
    let h2 = h1.clone();
    Ok(HomotopyData { complex: c2, f, g, h1, h2 })
}
