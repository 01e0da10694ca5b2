//! Finite-cover approximations of twisted Betti numbers and class scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_cover, harmonic_twist, real_cocycle, BranchedSurface, CellComplex, HomologyBasis, OneCocycle};
use crate::linalg::{real_rank, sparse_to_dense};

/// Relative singular-value threshold for ranks of twisted coboundaries.
pub const RANK_TOL: f64 = 1e-9;

/// Betti numbers `N_j − rank d_j − rank d_{j−1}` of the twisted complex
/// (real twist, scalar fiber) from dense singular values.
pub fn twisted_bettis_by_rank(cx: &CellComplex, theta: &OneCocycle) -> Result<Vec<usize>> {
    let z = real_cocycle(&theta.values);
    let counts = cx.counts();
    let mut ranks = Vec::with_capacity(cx.n);
    for k in 0..cx.n {
        let d = cx.raw_coboundary(&z, k)?;
        ranks.push(real_rank(&sparse_to_dense(&d.re), RANK_TOL));
    }
    Ok((0..=cx.n)
        .map(|j| {
            let out = if j < cx.n { ranks[j] } else { 0 };
            let inc = if j > 0 { ranks[j - 1] } else { 0 };
            counts[j] - out - inc
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TowerRow {
    pub sheets: usize,
    pub bettis: Vec<usize>,
    /// Betti numbers divided by the number of sheets.
    pub normalized: Vec<f64>,
    pub euler: i64,
}

/// Twisted Betti numbers on the cyclic covers classified by `z` (integer
/// cocycle on `surface`) with the harmonic twist of class `coords` pulled back.
pub fn cover_tower(surface: &BranchedSurface, z: &[i64], sheets: &[usize], coords: &[f64]) -> Result<Vec<TowerRow>> {
    let basis = HomologyBasis::tree_cotree(&surface.complex)?;
    let theta = harmonic_twist(&surface.complex, &basis, coords)?;
    sheets
        .iter()
        .map(|&k| {
            let (cover, info) = build_cover(&surface.complex, k, z)?;
            let bettis = twisted_bettis_by_rank(&cover, &info.pullback(&theta))?;
            Ok(TowerRow {
                sheets: k,
                normalized: bettis.iter().map(|&b| b as f64 / k as f64).collect(),
                bettis,
                euler: cover.euler_characteristic(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    /// Grid points where the value exceeds both neighbours.
    pub upward_jumps: Vec<f64>,
    /// `b(t) ≥ b(t ± δ) − tol` for shrinking `δ` at every grid point.
    pub semicontinuous: bool,
    pub worst_violation: f64,
}

pub const SEMICONTINUITY_TOL: f64 = 1e-6;

/// Scan `t ↦ value(t)` along a line of classes. `value` is typically a
/// normalized Betti number.
pub fn semicontinuity_scan<F>(ts: &[f64], mut value: F) -> Result<ScanReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    if ts.len() < 3 || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("scan needs at least three increasing parameters".into()));
    }
    let values: Vec<f64> = ts.iter().map(|&t| value(t)).collect::<Result<_>>()?;
    let mut upward_jumps = Vec::new();
    for i in 0..ts.len() {
        let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < ts.len() { values[i + 1] } else { f64::NEG_INFINITY };
        if values[i] > left.max(right) + SEMICONTINUITY_TOL {
            upward_jumps.push(ts[i]);
        }
    }
    let spacing = ts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut worst = 0.0f64;
    for (&t, &v) in ts.iter().zip(&values) {
        for frac in [1e-1, 1e-2, 1e-3] {
            for sign in [-1.0, 1.0] {
                let near = value(t + sign * frac * spacing)?;
                worst = worst.max(near - v);
            }
        }
    }
    Ok(ScanReport {
        points: ts.iter().zip(&values).map(|(&t, &value)| ScanPoint { t, value }).collect(),
        upward_jumps,
        semicontinuous: worst <= SEMICONTINUITY_TOL,
        worst_violation: worst,
    })
}
