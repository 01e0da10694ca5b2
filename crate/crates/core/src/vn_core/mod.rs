//! Finite von Neumann algebras realized as weighted multi-matrix algebras,
//! Hilbertian modules over them, and their commutant traces.
//!
//! An algebra is `⊕_b M_{d_b}(ℂ)` with trace `τ(a) = Σ_b w_b · tr(a_b)/d_b`.
//! The free module `ℓ²(𝒜)^k` has commutant `⊕_b M_{k·d_b}(ℂ)` acting from the
//! right, so every 𝒜-equivariant map is stored as one complex matrix per
//! algebra block. Modules are ranges of projections in that commutant, and
//! maps are kept in orthonormal coordinates of those ranges.

mod density;

pub use density::{dilation_compare, dilation_equivalent, dilation_grid, DilationReport, PowerLaw, SpectralDensity, StepDensity};

use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, cmat_identity, cmat_zeros, hermitian_deviation, hermitian_eigen, matmul, max_abs,
    projection_range, sub, trace, CMat, C64,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VNAlgebra {
    blocks: Vec<Block>,
}

impl VNAlgebra {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("algebra needs at least one block".into()));
        }
        if blocks.iter().any(|b| b.dim == 0 || !(b.weight > 0.0)) {
            return Err(Error::InvalidInput("block dims and weights must be positive".into()));
        }
        let total: f64 = blocks.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("block weights sum to {total}, expected 1")));
        }
        Ok(Self { blocks })
    }

    /// `𝒜 = ℂ`.
    pub fn scalars() -> Self {
        Self { blocks: vec![Block { dim: 1, weight: 1.0 }] }
    }

    /// A single full matrix block `M_d(ℂ)` with its normalized trace (a factor).
    pub fn matrix(d: usize) -> Self {
        Self { blocks: vec![Block { dim: d.max(1), weight: 1.0 }] }
    }

    /// Group algebra of `ℤ/k` in its character basis: `k` one-dimensional
    /// blocks of weight `1/k`.
    pub fn cyclic_group(k: usize) -> Self {
        let k = k.max(1);
        Self { blocks: vec![Block { dim: 1, weight: 1.0 / k as f64 }; k] }
    }

    /// Random multi-matrix algebra with up to `max_blocks` blocks of size up to `max_dim`.
    pub fn random<R: Rng>(rng: &mut R, max_blocks: usize, max_dim: usize) -> Self {
        let nb = rng.random_range(1..=max_blocks.max(1));
        let raw: Vec<f64> = (0..nb).map(|_| 0.2 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut blocks: Vec<Block> = raw
            .iter()
            .map(|w| Block { dim: rng.random_range(1..=max_dim.max(1)), weight: w / total })
            .collect();
        // pin the sum to exactly one
        let rest: f64 = blocks[1..].iter().map(|b| b.weight).sum();
        blocks[0].weight = 1.0 - rest;
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_factor(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement { blocks: self.blocks.iter().map(|b| cmat_identity(b.dim)).collect() }
    }

    /// `Σ_m c_m g^m` in `ℂ[ℤ/k]`, mapped to the character blocks of [`VNAlgebra::cyclic_group`].
    pub fn cyclic_element(&self, coeffs: &[C64]) -> Result<AlgebraElement> {
        let k = self.blocks.len();
        if coeffs.len() != k || self.blocks.iter().any(|b| b.dim != 1) {
            return Err(Error::DimensionMismatch(format!(
                "expected {k} coefficients on a cyclic group algebra"
            )));
        }
        let blocks = (0..k)
            .map(|j| {
                let v: C64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, c)| {
                        let ang = 2.0 * std::f64::consts::PI * (j * m) as f64 / k as f64;
                        c * C64::from_polar(1.0, ang)
                    })
                    .sum();
                Mat::from_fn(1, 1, |_, _| v)
            })
            .collect();
        Ok(AlgebraElement { blocks })
    }

    /// Normalized trace `τ(a) = Σ_b w_b tr(a_b)/d_b`.
    pub fn trace(&self, a: &AlgebraElement) -> Result<C64> {
        self.check_element(a)?;
        Ok(self
            .blocks
            .iter()
            .zip(&a.blocks)
            .map(|(b, m)| trace(m) * (b.weight / b.dim as f64))
            .sum())
    }

    fn check_element(&self, a: &AlgebraElement) -> Result<()> {
        if a.blocks.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "element has {} blocks, algebra has {}",
                a.blocks.len(),
                self.blocks.len()
            )));
        }
        for (b, m) in self.blocks.iter().zip(&a.blocks) {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::DimensionMismatch(format!(
                    "block of size {}x{} where {} expected",
                    m.nrows(),
                    m.ncols(),
                    b.dim
                )));
            }
        }
        Ok(())
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|b| random_cmat(rng, b.dim, b.dim)).collect(),
        }
    }
}

/// An element of the algebra, one matrix per block.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    pub blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn star(&self) -> Self {
        Self { blocks: self.blocks.iter().map(adjoint).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| matmul(a, b)).collect() }
    }
}

pub(crate) fn random_cmat<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMat {
    Mat::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

/// A finitely generated Hilbertian module `ℓ²(𝒜)^k · p`.
#[derive(Clone, Debug)]
pub struct HilbertianModule {
    algebra: VNAlgebra,
    multiplicity: usize,
    /// Projection per block, `(k·d_b) × (k·d_b)`.
    projection: Vec<CMat>,
    /// Orthonormal basis of the projection range per block.
    range: Vec<CMat>,
}

/// Projection idempotency tolerance.
pub const PROJECTION_TOL: f64 = 1e-12;

impl HilbertianModule {
    /// The free module `ℓ²(𝒜)^k`.
    pub fn free(algebra: &VNAlgebra, multiplicity: usize) -> Self {
        let projection: Vec<CMat> =
            algebra.blocks.iter().map(|b| cmat_identity(multiplicity * b.dim)).collect();
        let range = projection.clone();
        Self { algebra: algebra.clone(), multiplicity, projection, range }
    }

    pub fn with_projection(algebra: &VNAlgebra, multiplicity: usize, projection: Vec<CMat>) -> Result<Self> {
        if projection.len() != algebra.blocks.len() {
            return Err(Error::DimensionMismatch("one projection block per algebra block".into()));
        }
        let mut range = Vec::with_capacity(projection.len());
        for (b, p) in algebra.blocks.iter().zip(&projection) {
            let n = multiplicity * b.dim;
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch(format!("projection block must be {n}x{n}")));
            }
            let herm = hermitian_deviation(p);
            let idem = max_abs(&sub(&matmul(p, p), p));
            // absolute tolerance scaled by the block size for rounding in p²
            let tol = PROJECTION_TOL * (n as f64).max(1.0);
            if herm > tol || idem > tol {
                return Err(Error::InvalidInput(format!(
                    "projection not self-adjoint idempotent (|p-p*| = {herm:e}, |p²-p| = {idem:e})"
                )));
            }
            range.push(projection_range(p)?);
        }
        Ok(Self { algebra: algebra.clone(), multiplicity, projection, range })
    }

    pub fn algebra(&self) -> &VNAlgebra {
        &self.algebra
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn projection(&self) -> &[CMat] {
        &self.projection
    }

    /// Orthonormal range coordinates, one `(k·d_b) × r_b` matrix per block.
    pub fn range_basis(&self) -> &[CMat] {
        &self.range
    }

    /// Rank of the projection per block.
    pub fn block_ranks(&self) -> Vec<usize> {
        self.range.iter().map(|r| r.ncols()).collect()
    }

    /// `dim_τ = Tr_τ(p)`.
    pub fn dim_tau(&self) -> f64 {
        self.algebra
            .blocks
            .iter()
            .zip(&self.projection)
            .map(|(b, p)| trace(p).re * b.weight / b.dim as f64)
            .sum()
    }

    /// `m ⊕ m′`; range coordinates are the concatenation of both, so maps
    /// can be summed block-diagonally.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::DimensionMismatch("direct sum over different algebras".into()));
        }
        let multiplicity = self.multiplicity + other.multiplicity;
        let mut projection = Vec::with_capacity(self.projection.len());
        let mut range = Vec::with_capacity(self.range.len());
        for (b, blk) in self.algebra.blocks.iter().enumerate() {
            // free coordinates of block b: first copy's k·d rows, then the second's
            projection.push(block_diag(&self.projection[b], &other.projection[b]));
            range.push(block_diag(&self.range[b], &other.range[b]));
            debug_assert_eq!(projection[b].nrows(), multiplicity * blk.dim);
        }
        Ok(Self { algebra: self.algebra.clone(), multiplicity, projection, range })
    }

    /// `m^{⊕n}` with copy-major free coordinates: projection `I_n ⊗ p` and
    /// range `I_n ⊗ range(p)`, so a map `D ⊗ Id` has blocks `D ⊗ I_{r_b}`.
    pub fn amplify(&self, n: usize) -> Self {
        let kron = |a: &CMat| {
            let (r, c) = (a.nrows(), a.ncols());
            Mat::from_fn(n * r, n * c, |i, j| {
                if i / r == j / c {
                    a[(i % r, j % c)]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        };
        Self {
            algebra: self.algebra.clone(),
            multiplicity: n * self.multiplicity,
            projection: self.projection.iter().map(kron).collect(),
            range: self.range.iter().map(kron).collect(),
        }
    }

    pub fn identity(&self) -> AEndomorphism {
        AEndomorphism {
            blocks: self.range.iter().map(|r| cmat_identity(r.ncols())).collect(),
            weights: block_weights(&self.algebra),
        }
    }

    pub fn zero_map_to(&self, target: &Self) -> AEndomorphism {
        AEndomorphism {
            blocks: self
                .range
                .iter()
                .zip(&target.range)
                .map(|(s, t)| cmat_zeros(t.ncols(), s.ncols()))
                .collect(),
            weights: block_weights(&self.algebra),
        }
    }
}

pub(crate) fn block_weights(a: &VNAlgebra) -> Vec<f64> {
    a.blocks.iter().map(|b| b.weight / b.dim as f64).collect()
}

pub(crate) fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (r1, c1) = (a.nrows(), a.ncols());
    Mat::from_fn(r1 + b.nrows(), c1 + b.ncols(), |i, j| {
        if i < r1 && j < c1 {
            a[(i, j)]
        } else if i >= r1 && j >= c1 {
            b[(i - r1, j - c1)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// An 𝒜-equivariant map between Hilbertian modules (an endomorphism when
/// source and target agree), stored per algebra block in range coordinates.
///
/// `weights[b] = w_b / d_b` is the trace weight of one rank in block `b`.
#[derive(Clone, Debug)]
pub struct AEndomorphism {
    pub blocks: Vec<CMat>,
    pub weights: Vec<f64>,
}

impl AEndomorphism {
    /// Map given in free coordinates (`(k'·d_b) × (k·d_b)` per block); it must
    /// satisfy `q f p = f` for the target/source projections.
    pub fn from_free(source: &HilbertianModule, target: &HilbertianModule, free: Vec<CMat>) -> Result<Self> {
        if free.len() != source.range.len() {
            return Err(Error::DimensionMismatch("one matrix per algebra block".into()));
        }
        let mut blocks = Vec::with_capacity(free.len());
        let mut worst = 0.0f64;
        for (b, f) in free.iter().enumerate() {
            let (p, q) = (&source.projection[b], &target.projection[b]);
            if f.nrows() != q.nrows() || f.ncols() != p.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "block {b}: map is {}x{}, expected {}x{}",
                    f.nrows(),
                    f.ncols(),
                    q.nrows(),
                    p.nrows()
                )));
            }
            let compressed = matmul(&matmul(q, f), p);
            worst = worst.max(max_abs(&sub(&compressed, f)));
            blocks.push(matmul(&matmul(&adjoint(&target.range[b]), f), &source.range[b]));
        }
        if worst > 1e-10 {
            return Err(Error::NotCompressed(worst));
        }
        Ok(Self { blocks, weights: block_weights(&source.algebra) })
    }

    /// Back to free coordinates.
    pub fn to_free(&self, source: &HilbertianModule, target: &HilbertianModule) -> Vec<CMat> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, m)| matmul(&matmul(&target.range[b], m), &adjoint(&source.range[b])))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(adjoint).collect(), weights: self.weights.clone() }
    }

    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&inner.blocks).map(|(a, b)| matmul(a, b)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| crate::linalg::add(a, b)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| sub(a, b)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|a| crate::linalg::scale(a, C64::new(s, 0.0))).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn op_norm(&self) -> f64 {
        self.blocks.iter().map(crate::linalg::op_norm).fold(0.0, f64::max)
    }

    pub fn self_adjoint_deviation(&self) -> f64 {
        self.blocks.iter().map(hermitian_deviation).fold(0.0, f64::max)
    }

    /// Trace-weighted eigenvalues `(λ, w)` of a self-adjoint map.
    pub fn weighted_eigenvalues(&self) -> Result<Vec<(f64, f64)>> {
        let dev = self.self_adjoint_deviation();
        if dev > 1e-10 {
            return Err(Error::NotSelfAdjoint(dev));
        }
        let mut out = Vec::new();
        for (m, &w) in self.blocks.iter().zip(&self.weights) {
            for v in crate::linalg::hermitian_eigenvalues(m)? {
                out.push((v, w));
            }
        }
        Ok(out)
    }

    /// Weighted eigen-decomposition per block (eigenvalues ascending within a block).
    pub fn block_eigen(&self) -> Result<Vec<(Vec<f64>, CMat)>> {
        self.blocks.iter().map(hermitian_eigen).collect()
    }
}

/// `Tr_τ(f) = Σ_i τ(f_ii)`.
pub fn commutant_trace(f: &AEndomorphism) -> Result<C64> {
    for m in &f.blocks {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("trace of a non-square map".into()));
        }
    }
    Ok(f.blocks.iter().zip(&f.weights).map(|(m, &w)| trace(m) * w).sum())
}

/// `Tr_τ` of a map given in free coordinates; checks compression first.
pub fn commutant_trace_free(module: &HilbertianModule, free: Vec<CMat>) -> Result<C64> {
    commutant_trace(&AEndomorphism::from_free(module, module, free)?)
}

pub fn dim_tau(m: &HilbertianModule) -> f64 {
    m.dim_tau()
}

/// Spectral density `λ ↦ Tr_τ(E_λ)` of a self-adjoint endomorphism.
pub fn spectral_density(f: &AEndomorphism) -> Result<SpectralDensity> {
    Ok(SpectralDensity::from_weighted(f.weighted_eigenvalues()?))
}

/// Sampled check that `f: source → target` commutes with the left action of
/// `a`. Block `b` of `ℓ²(𝒜)^k` is realized as `d_b × (k·d_b)` matrices: `a`
/// multiplies from the left, the commutant from the right.
pub fn commutator_norm<R: Rng>(
    source: &HilbertianModule,
    target: &HilbertianModule,
    a: &AlgebraElement,
    f: &AEndomorphism,
    rng: &mut R,
) -> Result<f64> {
    source.algebra.check_element(a)?;
    let free = f.to_free(source, target);
    let mut worst = 0.0f64;
    for (b, blk) in source.algebra.blocks.iter().enumerate() {
        let x = random_cmat(rng, blk.dim, free[b].ncols());
        let ft = Mat::from_fn(free[b].ncols(), free[b].nrows(), |i, j| free[b][(j, i)]);
        let lhs = matmul(&matmul(&a.blocks[b], &x), &ft);
        let rhs = matmul(&a.blocks[b], &matmul(&x, &ft));
        worst = worst.max(max_abs(&sub(&lhs, &rhs)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn trace_examples() {
        let a = VNAlgebra::matrix(2);
        assert!((a.trace(&a.identity()).unwrap() - c(1.0)).norm() < 1e-15);
        let e = AlgebraElement { blocks: vec![Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(1.0) } else { c(0.0) })] };
        assert!((a.trace(&e).unwrap() - c(0.5)).norm() < 1e-15);

        let z2 = VNAlgebra::cyclic_group(2);
        let el = z2.cyclic_element(&[c(0.7), c(-2.3)]).unwrap();
        assert!((z2.trace(&el).unwrap() - c(0.7)).norm() < 1e-14);
    }

    #[test]
    fn trace_rejects_shape_mismatch() {
        let a = VNAlgebra::matrix(2);
        let bad = AlgebraElement { blocks: vec![cmat_identity(3)] };
        assert!(matches!(a.trace(&bad), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn trace_is_tracial_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let alg = VNAlgebra::random(&mut rng, 3, 3);
            let a = alg.random_element(&mut rng);
            let b = alg.random_element(&mut rng);
            let ab = alg.trace(&a.mul(&b)).unwrap();
            let ba = alg.trace(&b.mul(&a)).unwrap();
            assert!((ab - ba).norm() < 1e-12);
            let pos = alg.trace(&a.star().mul(&a)).unwrap();
            assert!(pos.re > 0.0 && pos.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dims_and_traces() {
        let scal = VNAlgebra::scalars();
        let f3 = HilbertianModule::free(&scal, 3);
        assert!((f3.dim_tau() - 3.0).abs() < 1e-15);
        assert!((commutant_trace(&f3.identity()).unwrap() - c(3.0)).norm() < 1e-15);

        let diag100 = Mat::from_fn(3, 3, |i, j| if i == 0 && j == 0 { c(1.0) } else { c(0.0) });
        assert!((commutant_trace_free(&f3, vec![diag100]).unwrap() - c(1.0)).norm() < 1e-15);

        let m2 = VNAlgebra::matrix(2);
        let p = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(1.0) } else { c(0.0) });
        let half = HilbertianModule::with_projection(&m2, 1, vec![p]).unwrap();
        assert!((half.dim_tau() - 0.5).abs() < 1e-15);
        let zero = HilbertianModule::with_projection(&m2, 1, vec![cmat_zeros(2, 2)]).unwrap();
        assert_eq!(zero.dim_tau(), 0.0);
        let sum = half.direct_sum(&HilbertianModule::free(&m2, 2)).unwrap();
        assert!((sum.dim_tau() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn bad_projection_rejected() {
        let a = VNAlgebra::scalars();
        let p = Mat::from_fn(1, 1, |_, _| c(0.5));
        assert!(HilbertianModule::with_projection(&a, 1, vec![p]).is_err());
    }

    #[test]
    fn uncompressed_map_rejected() {
        let m2 = VNAlgebra::matrix(2);
        let p = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(1.0) } else { c(0.0) });
        let half = HilbertianModule::with_projection(&m2, 1, vec![p]).unwrap();
        let f = cmat_identity(2);
        assert!(matches!(
            AEndomorphism::from_free(&half, &half, vec![f]),
            Err(Error::NotCompressed(_))
        ));
    }

    #[test]
    fn trace_property_on_free_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alg = VNAlgebra::random(&mut rng, 3, 3);
        let m = HilbertianModule::free(&alg, 2);
        let f = AEndomorphism {
            blocks: m.range_basis().iter().map(|r| random_cmat(&mut rng, r.ncols(), r.ncols())).collect(),
            weights: block_weights(&alg),
        };
        let g = AEndomorphism {
            blocks: m.range_basis().iter().map(|r| random_cmat(&mut rng, r.ncols(), r.ncols())).collect(),
            weights: block_weights(&alg),
        };
        let fg = commutant_trace(&f.compose(&g)).unwrap();
        let gf = commutant_trace(&g.compose(&f)).unwrap();
        assert!((fg - gf).norm() < 1e-12);
    }

    #[test]
    fn commutes_with_left_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alg = VNAlgebra::random(&mut rng, 3, 3);
        let m = HilbertianModule::free(&alg, 2);
        let f = AEndomorphism {
            blocks: m.range_basis().iter().map(|r| random_cmat(&mut rng, r.ncols(), r.ncols())).collect(),
            weights: block_weights(&alg),
        };
        let a = alg.random_element(&mut rng);
        assert!(commutator_norm(&m, &m, &a, &f, &mut rng).unwrap() <= 1e-10);
    }

    #[test]
    fn spectral_density_examples() {
        let scal = VNAlgebra::scalars();
        let f2 = HilbertianModule::free(&scal, 2);
        let n = spectral_density(&f2.identity()).unwrap();
        assert_eq!(n.eval(0.999), 0.0);
        assert!((n.eval(1.0) - 2.0).abs() < 1e-14);

        let f = AEndomorphism {
            blocks: vec![Mat::from_fn(2, 2, |i, j| if i == j && i == 1 { c(3.0) } else { c(0.0) })],
            weights: vec![1.0],
        };
        let n = spectral_density(&f).unwrap();
        assert!((n.eval(0.0) - 1.0).abs() < 1e-14);
        assert!((n.eval(2.9) - 1.0).abs() < 1e-14);
        assert!((n.eval(3.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_density_rejects_non_self_adjoint() {
        let f = AEndomorphism {
            blocks: vec![Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1.0) } else { c(0.0) })],
            weights: vec![1.0],
        };
        assert!(matches!(spectral_density(&f), Err(Error::NotSelfAdjoint(_))));
    }
}
