//! Morse inequality checkers.

use serde::{Deserialize, Serialize};

use super::MorseData;
use crate::complex_core::{alternating_partial_sums, ExtendedClass};
use crate::error::{Error, Result};

pub const MORSE_TOL: f64 = 1e-8;
const EULER_TOL: f64 = 1e-6;
/// `λ₀` (kernel excluded) at or below this counts as "no gap".
pub const GAP_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrongRow {
    pub k: usize,
    /// `(dim_τ E)⁻¹ Σ_{j≤k} (−1)^{k−j} b̄_j`.
    pub lhs: f64,
    /// `Σ_{j≤k} (−1)^{k−j} m_j`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrongReport {
    pub rows: Vec<StrongRow>,
    pub equality_at_top: bool,
    pub passed: bool,
}

pub fn strong_morse_check(bettis: &[f64], morse: &[usize], fiber_dim: f64) -> Result<StrongReport> {
    if bettis.len() != morse.len() || bettis.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} Betti numbers against {} Morse numbers", bettis.len(), morse.len())));
    }
    if !(fiber_dim > 0.0) {
        return Err(Error::InvalidInput("fiber dimension must be positive".into()));
    }
    let normalized: Vec<f64> = bettis.iter().map(|b| b / fiber_dim).collect();
    let lhs = alternating_partial_sums(&normalized);
    let rhs = alternating_partial_sums(&morse.iter().map(|&m| m as f64).collect::<Vec<_>>());
    let rows: Vec<StrongRow> = lhs
        .iter()
        .zip(&rhs)
        .enumerate()
        .map(|(k, (&l, &r))| StrongRow { k, lhs: l, rhs: r, holds: l <= r + MORSE_TOL })
        .collect();
    let top = rows.last().unwrap();
    let equality_at_top = (top.lhs - top.rhs).abs() <= MORSE_TOL;
    let passed = equality_at_top && rows.iter().all(|r| r.holds);
    Ok(StrongReport { rows, equality_at_top, passed })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub per_s: Vec<(f64, StrongReport)>,
    /// First `s` from which every later sample passes.
    pub onset: Option<f64>,
    pub passed: bool,
}

/// `samples` are `(s, b̄(sθ))` pairs in increasing `s`.
pub fn asymptotic_morse_check(samples: &[(f64, Vec<f64>)], data: &MorseData, fiber_dim: f64) -> Result<AsymptoticReport> {
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidInput("s values must increase".into()));
    }
    let per_s: Vec<(f64, StrongReport)> = samples
        .iter()
        .map(|(s, b)| Ok((*s, strong_morse_check(b, &data.morse_numbers, fiber_dim)?)))
        .collect::<Result<_>>()?;
    let first_tail = per_s.iter().rposition(|(_, r)| !r.passed).map_or(0, |i| i + 1);
    let onset = per_s.get(first_tail).map(|(s, _)| *s);
    Ok(AsymptoticReport { passed: onset.is_some(), per_s, onset })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EulerMorseReport {
    /// `(dim_τ E)⁻¹ Σ (−1)^j b̄_j`.
    pub betti_sum: f64,
    pub euler: i64,
    pub morse_sum: i64,
    pub passed: bool,
}

pub fn euler_morse_check(bettis: &[f64], data: &MorseData, euler: i64, fiber_dim: f64) -> Result<EulerMorseReport> {
    if bettis.len() != data.morse_numbers.len() {
        return Err(Error::DimensionMismatch("Betti and Morse lists differ in length".into()));
    }
    let betti_sum: f64 =
        bettis.iter().enumerate().map(|(j, b)| if j % 2 == 0 { *b } else { -b }).sum::<f64>() / fiber_dim;
    let morse_sum = data.alternating_sum();
    Ok(EulerMorseReport {
        betti_sum,
        euler,
        morse_sum,
        passed: (betti_sum - euler as f64).abs() <= EULER_TOL && morse_sum == euler,
    })
}

/// What the spectrum near zero says in one degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeSpectralData {
    pub betti: f64,
    /// Bottom of the spectrum above the kernel.
    pub lambda0_excluded: Option<f64>,
    /// Spectrum accumulates at zero outside the kernel.
    pub torsion_present: bool,
}

impl DegreeSpectralData {
    pub fn from_extended(e: &ExtendedClass, lambda0_excluded: Option<f64>) -> Self {
        let accumulates = lambda0_excluded.is_some_and(|l| l <= GAP_THRESHOLD);
        Self { betti: e.projective_dim, lambda0_excluded, torsion_present: e.torsion_present || accumulates }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GapConclusion {
    NoConclusion,
    /// `m_j ≥` this.
    AtLeast(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapRow {
    pub degree: usize,
    pub gap: bool,
    pub conclusion: GapConclusion,
    pub morse_number: usize,
    pub satisfied: bool,
}

/// Lower bounds on Morse numbers from the absence of a spectral gap at zero.
/// Without a gap, `m_j` dominates the minimal number of generators of the
/// extended class, which is at least `b̄_j / dim_τ E`, strictly more when a
/// torsion part is present, and at least one in any case.
pub fn gap_report(spectral: &[DegreeSpectralData], data: &MorseData, fiber_dim: f64) -> Result<Vec<GapRow>> {
    if spectral.len() != data.morse_numbers.len() {
        return Err(Error::DimensionMismatch("one spectral record per degree expected".into()));
    }
    Ok(spectral
        .iter()
        .zip(&data.morse_numbers)
        .enumerate()
        .map(|(degree, (d, &m))| {
            let gap = d.betti <= MORSE_TOL && !d.torsion_present && d.lambda0_excluded.is_none_or(|l| l > GAP_THRESHOLD);
            let conclusion = if gap {
                GapConclusion::NoConclusion
            } else {
                let ratio = d.betti / fiber_dim;
                let bound = if d.torsion_present {
                    (ratio + MORSE_TOL).floor() as usize + 1
                } else {
                    (ratio - MORSE_TOL).ceil() as usize
                };
                GapConclusion::AtLeast(bound.max(1))
            };
            let satisfied = match conclusion {
                GapConclusion::NoConclusion => true,
                GapConclusion::AtLeast(b) => m >= b,
            };
            GapRow { degree, gap, conclusion, morse_number: m, satisfied }
        })
        .collect())
}
