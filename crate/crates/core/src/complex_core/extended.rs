use serde::{Deserialize, Serialize};

use super::{squared_singular_values, FiniteComplex};
use crate::error::{Error, Result};
use crate::linalg::KERNEL_TOL;
use crate::vn_core::{AEndomorphism, SpectralDensity};

/// Extended cohomology in one degree: projective part (reduced cohomology)
/// and torsion part (spectrum of `d_in* d_in` accumulating at zero).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtendedClass {
    pub projective_dim: f64,
    /// Density of `d_in* d_in` on `(Ker d_in)^⊥`.
    pub torsion_density: SpectralDensity,
    pub torsion_present: bool,
    /// Bottom of the torsion spectrum, if it is separated from zero.
    pub torsion_gap: Option<f64>,
}

/// `z` is the projection onto the cocycle submodule `Z ⊆ C^i`, as a
/// self-adjoint idempotent endomorphism of `C^i`; `d_in: C^{i−1} → C^i`.
pub fn extended_decompose(d_in: &AEndomorphism, z: &AEndomorphism) -> Result<ExtendedClass> {
    let outside = z.compose(d_in).sub(d_in).max_abs();
    if outside > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "image of the incoming map leaves the cocycles by {outside:e}"
        )));
    }
    let z_dim: f64 = z
        .weighted_eigenvalues()?
        .iter()
        .filter(|e| e.0 > 0.5)
        .map(|e| e.1)
        .sum();
    let sv = squared_singular_values(d_in)?;
    let image_dim: f64 = sv.iter().map(|e| e.1).sum();
    let torsion_gap = sv.iter().map(|e| e.0).min_by(f64::total_cmp);
    // Images are closed in finite dimensions: every nonzero σ² is at least the
    // kernel threshold, so nothing accumulates below it.
    let torsion_present = torsion_gap.is_some_and(|g| g < KERNEL_TOL);
    Ok(ExtendedClass {
        projective_dim: (z_dim - image_dim).max(0.0),
        torsion_density: SpectralDensity::from_weighted(sv),
        torsion_present,
        torsion_gap,
    })
}

/// Degree-`i` extended class of a finite complex with `Z = Ker d_i`.
pub fn extended_from_complex(c: &FiniteComplex, i: usize) -> Result<ExtendedClass> {
    if i > c.top() {
        return Err(Error::DegreeOutOfRange { degree: i, top: c.top() });
    }
    let module = &c.modules()[i];
    let z = if i < c.top() {
        kernel_projection(&c.differentials()[i])?
    } else {
        module.identity()
    };
    let d_in = if i == 0 {
        // zero map from the zero module
        AEndomorphism {
            blocks: module.block_ranks().iter().map(|&r| crate::linalg::cmat_zeros(r, 0)).collect(),
            weights: module.identity().weights,
        }
    } else {
        c.differentials()[i - 1].clone()
    };
    extended_decompose(&d_in, &z)
}

/// Orthogonal projection onto `Ker d` in range coordinates of the source.
pub(crate) fn kernel_projection(d: &AEndomorphism) -> Result<AEndomorphism> {
    let gram = d.adjoint().compose(d);
    let mut blocks = Vec::with_capacity(gram.blocks.len());
    for m in &gram.blocks {
        let (vals, vecs) = crate::linalg::hermitian_eigen(m)?;
        let n = m.nrows();
        let keep: Vec<usize> = (0..n).filter(|&i| vals[i] < KERNEL_TOL).collect();
        blocks.push(faer::Mat::from_fn(n, n, |r, c| {
            keep.iter().map(|&i| vecs[(r, i)] * vecs[(c, i)].conj()).sum()
        }));
    }
    Ok(AEndomorphism { blocks, weights: gram.weights })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MuBounds {
    /// `μ ≥ dim_τ` of the projective part.
    pub lower: f64,
    /// Set only when μ is determined: `0` for the zero class.
    pub exact: Option<u32>,
    /// `μ(T) = 1` for a nontrivial torsion part over a factor.
    pub torsion_factor_value: Option<u32>,
}

pub fn mu_bounds(e: &ExtendedClass, algebra_is_factor: bool) -> MuBounds {
    let zero_class = e.projective_dim.abs() <= 1e-12 && !e.torsion_present;
    MuBounds {
        lower: e.projective_dim,
        exact: zero_class.then_some(0),
        torsion_factor_value: (algebra_is_factor && e.torsion_present).then_some(1),
    }
}
