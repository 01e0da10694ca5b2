//! Finite Hilbertian complexes `L₀ → L₁ → … → L_n` over a multi-matrix
//! algebra, their Laplacians, reduced L² Betti numbers, the `F/G/N`
//! bookkeeping of spectral density functions, and the abstract Euler and
//! Morse-type inequalities.
//!
//! Every differential is block diagonal over the algebra, so all spectral
//! questions split into ordinary matrix problems per block, each weighted by
//! `w_b/d_b`.

mod extended;
mod random;
mod serial;

pub use extended::{extended_decompose, extended_from_complex, mu_bounds, ExtendedClass, MuBounds};
pub use random::{conjugated_complex, contractible_summand, random_complex, HomotopyData};
pub use serial::ComplexDescriptor;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, matmul, op_norm, CMat, KERNEL_TOL};
use crate::vn_core::{
    commutator_norm, dilation_compare, AEndomorphism, DilationReport, HilbertianModule,
    SpectralDensity, VNAlgebra,
};

#[derive(Clone, Debug)]
pub struct FiniteComplex {
    algebra: VNAlgebra,
    modules: Vec<HilbertianModule>,
    differentials: Vec<AEndomorphism>,
}

impl FiniteComplex {
    /// Checks shapes only; use [`validate_complex`] for `d² = 0`.
    pub fn new(modules: Vec<HilbertianModule>, differentials: Vec<AEndomorphism>) -> Result<Self> {
        let first = modules
            .first()
            .ok_or_else(|| Error::InvalidInput("complex needs at least one module".into()))?;
        let algebra = first.algebra().clone();
        if differentials.len() + 1 != modules.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} modules need {} differentials, got {}",
                modules.len(),
                modules.len() - 1,
                differentials.len()
            )));
        }
        for m in &modules {
            if m.algebra() != &algebra {
                return Err(Error::DimensionMismatch("modules over different algebras".into()));
            }
        }
        for (j, d) in differentials.iter().enumerate() {
            let src = modules[j].block_ranks();
            let dst = modules[j + 1].block_ranks();
            if d.blocks.len() != src.len() {
                return Err(Error::DimensionMismatch(format!("d_{j} has the wrong number of blocks")));
            }
            for (b, m) in d.blocks.iter().enumerate() {
                if m.nrows() != dst[b] || m.ncols() != src[b] {
                    return Err(Error::DimensionMismatch(format!(
                        "d_{j} block {b} is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        dst[b],
                        src[b]
                    )));
                }
            }
        }
        Ok(Self { algebra, modules, differentials })
    }

    /// Complex whose differentials are given in free coordinates.
    pub fn from_free(modules: Vec<HilbertianModule>, free: Vec<Vec<CMat>>) -> Result<Self> {
        if free.len() + 1 != modules.len() {
            return Err(Error::DimensionMismatch("one differential between consecutive modules".into()));
        }
        let diffs = free
            .into_iter()
            .enumerate()
            .map(|(j, f)| AEndomorphism::from_free(&modules[j], &modules[j + 1], f))
            .collect::<Result<Vec<_>>>()?;
        Self::new(modules, diffs)
    }

    /// All-zero differentials between the given modules.
    pub fn zero(modules: Vec<HilbertianModule>) -> Result<Self> {
        let diffs = modules.windows(2).map(|w| w[0].zero_map_to(&w[1])).collect();
        Self::new(modules, diffs)
    }

    pub fn algebra(&self) -> &VNAlgebra {
        &self.algebra
    }

    pub fn modules(&self) -> &[HilbertianModule] {
        &self.modules
    }

    pub fn differentials(&self) -> &[AEndomorphism] {
        &self.differentials
    }

    /// Top degree `n`.
    pub fn top(&self) -> usize {
        self.modules.len() - 1
    }

    /// `m_j = dim_τ L_j`.
    pub fn dims(&self) -> Vec<f64> {
        self.modules.iter().map(|m| m.dim_tau()).collect()
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k > self.top() {
            return Err(Error::DegreeOutOfRange { degree: k, top: self.top() });
        }
        Ok(())
    }

    /// Direct sum of two complexes of equal length.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.top() != other.top() {
            return Err(Error::DimensionMismatch("direct sum of complexes of different length".into()));
        }
        let modules = self
            .modules
            .iter()
            .zip(&other.modules)
            .map(|(a, b)| a.direct_sum(b))
            .collect::<Result<Vec<_>>>()?;
        let diffs = self
            .differentials
            .iter()
            .zip(&other.differentials)
            .map(|(a, b)| block_sum(a, b))
            .collect();
        Self::new(modules, diffs)
    }
}

/// `a ⊕ b` for maps, block by block.
pub(crate) fn block_sum(a: &AEndomorphism, b: &AEndomorphism) -> AEndomorphism {
    AEndomorphism {
        blocks: a
            .blocks
            .iter()
            .zip(&b.blocks)
            .map(|(x, y)| crate::vn_core::block_diag(x, y))
            .collect(),
        weights: a.weights.clone(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexReport {
    pub valid: bool,
    /// `max_j ‖d_{j+1} d_j‖`.
    pub d_squared: f64,
    /// Largest sampled commutator with the algebra action.
    pub equivariance: f64,
    pub tolerance: f64,
}

pub const COMPLEX_TOL: f64 = 1e-10;

pub fn validate_complex<R: Rng>(c: &FiniteComplex, rng: &mut R) -> Result<ComplexReport> {
    let mut d_squared = 0.0f64;
    for j in 1..c.differentials.len() {
        d_squared = d_squared.max(c.differentials[j].compose(&c.differentials[j - 1]).op_norm());
    }
    let mut equivariance = 0.0f64;
    for (j, d) in c.differentials.iter().enumerate() {
        let a = c.algebra.random_element(rng);
        equivariance = equivariance.max(commutator_norm(&c.modules[j], &c.modules[j + 1], &a, d, rng)?);
    }
    Ok(ComplexReport {
        valid: d_squared <= COMPLEX_TOL && equivariance <= COMPLEX_TOL,
        d_squared,
        equivariance,
        tolerance: COMPLEX_TOL,
    })
}

/// `Δ_k = d_{k−1} d_{k−1}* + d_k* d_k`.
pub fn laplacian(c: &FiniteComplex, k: usize) -> Result<AEndomorphism> {
    c.check_degree(k)?;
    let id = c.modules[k].identity();
    let mut lap = id.scale(0.0);
    if k > 0 {
        let d = &c.differentials[k - 1];
        lap = lap.add(&d.compose(&d.adjoint()));
    }
    if k < c.top() {
        let d = &c.differentials[k];
        lap = lap.add(&d.adjoint().compose(d));
    }
    Ok(lap)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BettiReport {
    pub degree: usize,
    pub betti: f64,
    /// Smallest Laplacian eigenvalue classified as nonzero.
    pub smallest_retained: Option<f64>,
    /// `smallest_retained / threshold`; large means a clean classification.
    pub gap_ratio: Option<f64>,
    /// Some eigenvalue lies within a factor 100 of the threshold on either side.
    pub near_threshold: bool,
}

pub fn betti_report(c: &FiniteComplex, k: usize) -> Result<BettiReport> {
    let ev = laplacian(c, k)?.weighted_eigenvalues()?;
    Ok(classify(k, &ev))
}

fn classify(k: usize, ev: &[(f64, f64)]) -> BettiReport {
    let betti = ev.iter().filter(|e| e.0 < KERNEL_TOL).map(|e| e.1).sum();
    let smallest_retained = ev.iter().map(|e| e.0).filter(|&l| l >= KERNEL_TOL).min_by(f64::total_cmp);
    let near_threshold = ev
        .iter()
        .any(|e| e.0.abs() > KERNEL_TOL / 100.0 && e.0.abs() < KERNEL_TOL * 100.0);
    BettiReport {
        degree: k,
        betti,
        smallest_retained,
        gap_ratio: smallest_retained.map(|l| l / KERNEL_TOL),
        near_threshold,
    }
}

/// `b̄_k = dim_τ Ker Δ_k`.
pub fn l2_betti(c: &FiniteComplex, k: usize) -> Result<f64> {
    Ok(betti_report(c, k)?.betti)
}

pub fn l2_bettis(c: &FiniteComplex) -> Result<Vec<f64>> {
    (0..=c.top()).map(|k| l2_betti(c, k)).collect()
}

/// Trace-weighted nonzero `σ²` of a map, i.e. the jumps of its `F` function.
pub fn squared_singular_values(d: &AEndomorphism) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (m, &w) in d.blocks.iter().zip(&d.weights) {
        let gram = matmul(&crate::linalg::adjoint(m), m);
        for v in hermitian_eigenvalues(&gram)? {
            if v >= KERNEL_TOL {
                out.push((v, w));
            }
        }
    }
    Ok(out)
}

/// Same as [`squared_singular_values`] but computed from `d d*` on the target.
fn squared_singular_values_left(d: &AEndomorphism) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (m, &w) in d.blocks.iter().zip(&d.weights) {
        let gram = matmul(m, &crate::linalg::adjoint(m));
        for v in hermitian_eigenvalues(&gram)? {
            if v >= KERNEL_TOL {
                out.push((v, w));
            }
        }
    }
    Ok(out)
}

/// `F_k` of a complex: σ² ≤ λ counting for `d_k` on `(Ker d_k)^⊥`.
pub fn f_function(c: &FiniteComplex, k: usize) -> Result<SpectralDensity> {
    c.check_degree(k)?;
    if k == c.top() {
        return Ok(SpectralDensity::zero());
    }
    Ok(SpectralDensity::from_weighted(squared_singular_values(&c.differentials[k])?))
}

#[derive(Clone, Debug)]
pub struct DensitySplit {
    pub degree: usize,
    pub f_prev: SpectralDensity,
    pub betti: f64,
    pub f: SpectralDensity,
    /// Independently computed density of `Δ_k`.
    pub n: SpectralDensity,
    /// `G_k` from `d_{k−1} d_{k−1}*` on `L_k`.
    pub g: SpectralDensity,
    /// Worst `|N − F_{k−1} − b − F|` at midpoints between jumps.
    pub split_violation: f64,
    /// Worst mismatch between `F_{k−1}` and `G_k` jump locations.
    pub fg_violation: f64,
}

impl DensitySplit {
    pub fn holds(&self) -> bool {
        self.split_violation <= COMPLEX_TOL && self.fg_violation <= COMPLEX_TOL
    }

    /// Columns `k,lambda,F_prev,b,F,N` sampled at every jump of `N`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda,F_prev,b,F,N\n");
        let pts = match &self.n {
            SpectralDensity::Steps(s) => s.points.iter().map(|p| p.0).collect::<Vec<_>>(),
            SpectralDensity::ClosedForm { .. } => Vec::new(),
        };
        for l in pts {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.degree,
                l,
                self.f_prev.eval(l),
                self.betti,
                self.f.eval(l),
                self.n.eval(l)
            ));
        }
        out
    }
}

fn jumps(d: &SpectralDensity) -> Vec<f64> {
    match d {
        SpectralDensity::Steps(s) => s.points.iter().map(|p| p.0).collect(),
        SpectralDensity::ClosedForm { .. } => Vec::new(),
    }
}

/// Sample points strictly between clusters of jump locations (clusters merge
/// values closer than rounding noise), plus one point below and above all.
fn midpoints(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    let mut clusters: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        match clusters.last_mut() {
            Some(c) if p - c.1 <= 1e-9 * (1.0 + p.abs()) => c.1 = p,
            _ => clusters.push((p, p)),
        }
    }
    let mut out = vec![-1.0];
    for w in clusters.windows(2) {
        out.push(0.5 * (w[0].1 + w[1].0));
    }
    if let Some(last) = clusters.last() {
        out.push(last.1 * 2.0 + 1.0);
    }
    out
}

pub fn density_split(c: &FiniteComplex, k: usize) -> Result<DensitySplit> {
    c.check_degree(k)?;
    let f_prev = if k == 0 { SpectralDensity::zero() } else { f_function(c, k - 1)? };
    let f = f_function(c, k)?;
    let lap_ev = laplacian(c, k)?.weighted_eigenvalues()?;
    let betti = classify(k, &lap_ev).betti;
    let n = SpectralDensity::from_weighted(lap_ev);
    let g = if k == 0 {
        SpectralDensity::zero()
    } else {
        SpectralDensity::from_weighted(squared_singular_values_left(&c.differentials[k - 1])?)
    };

    let mut all = jumps(&f_prev);
    all.extend(jumps(&f));
    all.extend(jumps(&n));
    let mut split_violation = 0.0f64;
    for l in midpoints(all) {
        let lhs = n.eval(l);
        let rhs = if l >= 0.0 { f_prev.eval(l) + betti + f.eval(l) } else { 0.0 };
        split_violation = split_violation.max((lhs - rhs).abs());
    }

    let fg_violation = jump_mismatch(&f_prev, &g);
    Ok(DensitySplit { degree: k, f_prev, betti, f, n, g, split_violation, fg_violation })
}

/// Max distance between corresponding jumps (and heights) of two step
/// densities; infinite when they have different jump counts.
fn jump_mismatch(a: &SpectralDensity, b: &SpectralDensity) -> f64 {
    match (a, b) {
        (SpectralDensity::Steps(x), SpectralDensity::Steps(y)) => {
            let (px, py) = (merge_close(&x.points), merge_close(&y.points));
            if px.len() != py.len() {
                return f64::INFINITY;
            }
            px.iter()
                .zip(&py)
                .map(|(p, q)| {
                    let scale = 1.0f64.max(p.0.abs());
                    ((p.0 - q.0).abs() / scale).max((p.1 - q.1).abs())
                })
                .fold(0.0, f64::max)
        }
        _ => f64::INFINITY,
    }
}

fn merge_close(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(l, v) in points {
        match out.last_mut() {
            Some(last) if l - last.0 <= 1e-9 * (1.0 + l.abs()) => last.1 = v,
            _ => out.push((l, v)),
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EulerReport {
    /// `Σ(−1)^j m_j`.
    pub dims: f64,
    /// `Σ(−1)^j b̄_j`.
    pub bettis: f64,
    pub holds: bool,
}

pub const INEQUALITY_TOL: f64 = 1e-8;

fn alternating(v: &[f64]) -> f64 {
    v.iter().enumerate().map(|(j, x)| if j % 2 == 0 { *x } else { -x }).sum()
}

pub fn euler_identity(c: &FiniteComplex) -> Result<EulerReport> {
    let dims = alternating(&c.dims());
    let bettis = alternating(&l2_bettis(c)?);
    Ok(EulerReport { dims, bettis, holds: (dims - bettis).abs() <= INEQUALITY_TOL })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialSum {
    pub p: usize,
    /// `Σ_{j≤p}(−1)^{p−j} m_j`.
    pub dims: f64,
    /// `Σ_{j≤p}(−1)^{p−j} b̄_j`.
    pub bettis: f64,
    pub holds: bool,
}

/// `Σ_{j≤p}(−1)^{p−j} v_j` for every `p`.
pub fn alternating_partial_sums(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|p| (0..=p).map(|j| if (p - j) % 2 == 0 { v[j] } else { -v[j] }).sum())
        .collect()
}

pub fn morse_partial_sums(c: &FiniteComplex) -> Result<Vec<PartialSum>> {
    let m = alternating_partial_sums(&c.dims());
    let b = alternating_partial_sums(&l2_bettis(c)?);
    Ok(m.iter()
        .zip(&b)
        .enumerate()
        .map(|(p, (&dims, &bettis))| PartialSum { p, dims, bettis, holds: dims >= bettis - INEQUALITY_TOL })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomotopyReport {
    /// `max_j ‖d² f_j − f_{j+1} d¹_j‖`.
    pub chain_violation: f64,
    /// `max_j ‖g_j f_j − Id − (d h + h d)_j‖`.
    pub homotopy_violation: f64,
    pub per_degree: Vec<DegreeComparison>,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeComparison {
    pub degree: usize,
    pub sample_top: f64,
    pub dilation: DilationReport,
    pub betti_1: f64,
    pub betti_2: f64,
}

/// Check that `f: c₁ → c₂`, `g: c₂ → c₁` are chain maps with `g f ≃ Id` via
/// `h_j: L¹_{j+1} → L¹_j`, then compare `F_k` and `b̄_k` of the two complexes.
pub fn homotopy_dilation_check(
    c1: &FiniteComplex,
    c2: &FiniteComplex,
    f: &[AEndomorphism],
    g: &[AEndomorphism],
    h: &[AEndomorphism],
) -> Result<HomotopyReport> {
    let n = c1.top();
    if c2.top() != n || f.len() != n + 1 || g.len() != n + 1 || h.len() != n {
        return Err(Error::DimensionMismatch("chain data does not match the complexes".into()));
    }
    let mut chain_violation = 0.0f64;
    for j in 0..n {
        let lhs = c2.differentials[j].compose(&f[j]);
        let rhs = f[j + 1].compose(&c1.differentials[j]);
        chain_violation = chain_violation.max(lhs.sub(&rhs).max_abs());
        let lhs = c1.differentials[j].compose(&g[j]);
        let rhs = g[j + 1].compose(&c2.differentials[j]);
        chain_violation = chain_violation.max(lhs.sub(&rhs).max_abs());
    }
    let mut homotopy_violation = 0.0f64;
    for j in 0..=n {
        let mut rhs = c1.modules[j].identity();
        if j > 0 {
            rhs = rhs.add(&c1.differentials[j - 1].compose(&h[j - 1]));
        }
        if j < n {
            rhs = rhs.add(&h[j].compose(&c1.differentials[j]));
        }
        let lhs = g[j].compose(&f[j]);
        homotopy_violation = homotopy_violation.max(lhs.sub(&rhs).max_abs());
    }
    if chain_violation > INEQUALITY_TOL || homotopy_violation > INEQUALITY_TOL {
        return Err(Error::ChainIdentity(format!(
            "chain map violation {chain_violation:e}, homotopy violation {homotopy_violation:e}"
        )));
    }

    let h_norm = h.iter().map(|m| m.op_norm()).fold(0.0, f64::max);
    let mut per_degree = Vec::new();
    let mut holds = true;
    for k in 0..=n {
        let f1 = f_function(c1, k)?;
        let f2 = f_function(c2, k)?;
        let mut sample_top = match f1.bottom_above(0.0) {
            Some(l) => 2.0 * l,
            None => 1.0,
        };
        // the comparison is a germ at zero: below 1/(4‖h‖²) the homotopy cannot move spectral mass
        if h_norm > 0.0 {
            sample_top = sample_top.min(0.25 / (h_norm * h_norm));
        }
        let dilation = dilation_compare(&f1, &f2, sample_top)?;
        let betti_1 = l2_betti(c1, k)?;
        let betti_2 = l2_betti(c2, k)?;
        holds &= dilation.dominated && betti_1 <= betti_2 + INEQUALITY_TOL;
        per_degree.push(DegreeComparison { degree: k, sample_top, dilation, betti_1, betti_2 });
    }
    Ok(HomotopyReport { chain_violation, homotopy_violation, per_degree, holds })
}

/// Largest operator norm among the differentials; handy for scale-aware tolerances.
pub fn differential_scale(c: &FiniteComplex) -> f64 {
    c.differentials
        .iter()
        .flat_map(|d| d.blocks.iter().map(op_norm))
        .fold(0.0, f64::max)
}
