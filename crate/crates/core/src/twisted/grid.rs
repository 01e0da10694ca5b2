//! Densities of the periodic grid Laplacian on the `ℤⁿ`-cover of a torus
//! grid, per fundamental domain: by Bloch averaging of assembled operators
//! and by the closed-form stencil symbol.

use crate::error::{Error, Result};
use crate::geometry::{hodge_laplacian, FlatTorusGrid};
use crate::linalg::{binomial, sparse_to_dense, symmetric_eigenvalues, C64};
use crate::vn_core::SpectralDensity;

/// Symbol of the constant-twist grid Laplacian at Bloch frequencies `ω`:
/// `Σ_i (2 cosh(θ_i h_i) − 2 cos ω_i) / h_i²`, the same in every degree.
pub fn symbol_eigenvalues(grid: &FlatTorusGrid, theta: &[f64], omega: &[f64]) -> f64 {
    let h = grid.spacing();
    (0..grid.dim())
        .map(|i| (2.0 * (theta[i] * h[i]).cosh() - 2.0 * omega[i].cos()) / (h[i] * h[i]))
        .sum()
}

fn check(grid: &FlatTorusGrid, theta: &[f64], j: usize) -> Result<()> {
    if theta.len() != grid.dim() {
        return Err(Error::DimensionMismatch("twist covector length differs from the grid dimension".into()));
    }
    if j > grid.dim() {
        return Err(Error::DegreeOutOfRange { degree: j, top: grid.dim() });
    }
    Ok(())
}

/// Stencil-symbol density with `samples` midpoint frequencies per axis.
pub fn symbol_density(grid: &FlatTorusGrid, theta: &[f64], j: usize, samples: usize) -> Result<SpectralDensity> {
    check(grid, theta, j)?;
    let n = grid.dim();
    let cells: usize = grid.resolution.iter().product();
    let total = samples.pow(n as u32);
    let w = (binomial(n, j) * cells) as f64 / total as f64;
    let freq = |m: usize| std::f64::consts::TAU * (m as f64 + 0.5) / samples as f64 - std::f64::consts::PI;
    let mut eig = Vec::with_capacity(total);
    for idx in 0..total {
        let omega: Vec<f64> = (0..n).map(|i| freq((idx / samples.pow(i as u32)) % samples)).collect();
        eig.push((symbol_eigenvalues(grid, theta, &omega), w));
    }
    Ok(SpectralDensity::from_weighted(eig))
}

/// Bloch-averaged density: the assembled degree-`j` operator with an extra
/// U(1) phase `φ_i / N_i` per edge along axis `i`, for `phases` midpoint
/// values of each `φ_i`, each weighted `1/phasesⁿ`.
pub fn bloch_density(grid: &FlatTorusGrid, theta: &[f64], j: usize, phases: usize) -> Result<SpectralDensity> {
    check(grid, theta, j)?;
    let cx = grid.build()?;
    let n = grid.dim();
    let h = grid.spacing();
    let nv: usize = grid.resolution.iter().product();
    let total = phases.pow(n as u32);
    let w = 1.0 / total as f64;
    let mut eig = Vec::new();
    for idx in 0..total {
        let phi: Vec<f64> = (0..n)
            .map(|i| {
                let m = (idx / phases.pow(i as u32)) % phases;
                std::f64::consts::TAU * (m as f64 + 0.5) / phases as f64 - std::f64::consts::PI
            })
            .collect();
        let z: Vec<C64> = (0..cx.edges.len())
            .map(|e| {
                let axis = e / nv;
                C64::new(theta[axis] * h[axis], phi[axis] / grid.resolution[axis] as f64)
            })
            .collect();
        let diffs = cx.coboundaries(&z)?;
        let lap = hodge_laplacian(&diffs, &cx.counts(), j)?;
        let mut ev = symmetric_eigenvalues(&sparse_to_dense(&lap.real_form()))?;
        ev.sort_by(f64::total_cmp);
        let step = if lap.is_real() { 1 } else { 2 };
        eig.extend(ev.into_iter().step_by(step).map(|l| (l, w)));
    }
    Ok(SpectralDensity::from_weighted(eig))
}
