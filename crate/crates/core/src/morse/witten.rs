//! Witten deformation sweeps on torus grids.
//!
//! For each `s` the spectrum of `(1/s)Δ_{sθ,j}` is computed in degrees 0
//! and `n`; on a 2-torus the middle degree follows from the Hodge split
//! `spec Δ₁ \ {0} = (spec Δ₀ ∪ spec Δ₂) \ {0}` and the Euler relation.

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{find_zeros, ModelOperator, MorseOneForm};
use crate::error::{Error, Result};
use crate::geometry::{build_torus_complex, FlatTorusGrid};
use crate::twisted::TwistedLaplacian;
use crate::vn_core::HilbertianModule;

/// Fraction of the smallest nonzero model eigenvalue used as the window.
pub const EPS_FRACTION: f64 = 0.4;
const COUNT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOptions {
    pub s_values: Vec<f64>,
    /// Defaults to [`default_epsilon`].
    pub epsilon: Option<f64>,
    pub threads: usize,
}

impl SweepOptions {
    /// `count` values `s₀·1.5^k`.
    pub fn geometric(s0: f64, count: usize) -> Self {
        Self { s_values: (0..count).map(|k| s0 * 1.5f64.powi(k as i32)).collect(), epsilon: None, threads: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub degree: usize,
    /// Trace of eigenvalues of `(1/s)Δ` in `[0, ε]`.
    pub count: f64,
    /// First eigenvalue above `ε`, divided by `ε`.
    pub gap_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub epsilon: f64,
    pub model_gap: Option<f64>,
    /// `m_j · dim_τ E`.
    pub expected: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// Start of the longest tail of equal count vectors.
    pub s_star: Option<f64>,
    pub tail_counts: Vec<f64>,
    pub tail_len: usize,
    /// The tail spans a factor of ten in `s` and has at least three points.
    pub stabilized: bool,
    pub matches_model: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,j,count,gap_ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.s, r.degree, r.count, r.gap_ratio));
        }
        out
    }

    pub fn counts_at(&self, s: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.s == s).map(|r| r.count).collect()
    }
}

/// `0.4 ×` the smallest nonzero model eigenvalue, or `1` when the form has
/// no zeros.
pub fn default_epsilon(model: &ModelOperator) -> f64 {
    model.smallest_nonzero().map_or(1.0, |g| EPS_FRACTION * g)
}

struct DegreeSpectrum {
    eig: Vec<(f64, f64)>,
}

impl DegreeSpectrum {
    fn count(&self, eps: f64) -> f64 {
        self.eig.iter().filter(|e| e.0 <= eps).map(|e| e.1).sum()
    }

    fn next_above(&self, eps: f64) -> f64 {
        self.eig.iter().map(|e| e.0).find(|&v| v > eps).unwrap_or(f64::INFINITY)
    }
}

pub fn witten_sweep(grid: &FlatTorusGrid, form: &MorseOneForm, fiber: &HilbertianModule, opts: &SweepOptions) -> Result<SweepReport> {
    grid.validate()?;
    if form.cover.is_some() {
        return Err(Error::Unsupported("Witten sweeps on branched covers".into()));
    }
    if form.dim() != grid.dim() {
        return Err(Error::DimensionMismatch(format!("{}-form on a {}-torus", form.dim(), grid.dim())));
    }
    if grid.lengths.iter().any(|&l| (l - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidInput("forms are defined on the unit torus".into()));
    }
    if opts.s_values.is_empty() || opts.s_values.iter().any(|&s| !(s > 0.0)) || opts.s_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("s values must be positive and increasing".into()));
    }
    let data = find_zeros(form, 32)?;
    let fiber_dim = fiber.dim_tau();
    let model = ModelOperator::from_data(&data, fiber_dim)?;
    let model_gap = model.smallest_nonzero();
    let epsilon = opts.epsilon.unwrap_or_else(|| default_epsilon(&model));
    if let Some(g) = model_gap {
        if !(epsilon < 0.5 * g) {
            return Err(Error::InvalidInput(format!("window {epsilon} is not below half the model gap {g}")));
        }
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("window must be positive".into()));
    }
    let cx = grid.build()?;
    let theta = form.cocycle_on(&cx)?;
    let tc = build_torus_complex(grid, &theta, fiber)?;
    let n = grid.dim();
    let counts = cx.counts();

    let jobs: Vec<(usize, usize)> = (0..opts.s_values.len()).flat_map(|i| [(i, 0), (i, n)]).collect();
    let results: Mutex<Vec<Option<Result<DegreeSpectrum>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::Relaxed);
        if k >= jobs.len() {
            break;
        }
        let (i, j) = jobs[k];
        let s = opts.s_values[i];
        let spec = TwistedLaplacian::assemble(&tc, j, s)
            .and_then(|l| l.spectrum())
            .map(|w| DegreeSpectrum { eig: w.eigenvalues.iter().map(|&(v, t)| (v / s, t)).collect() });
        results.lock().unwrap()[k] = Some(spec);
    };
    std::thread::scope(|scope| {
        for _ in 0..opts.threads.max(1) {
            scope.spawn(worker);
        }
    });
    let mut spectra = results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran"));

    let mut rows = Vec::new();
    let mut vectors = Vec::new();
    for &s in &opts.s_values {
        let low = spectra.next().unwrap()?;
        let high = spectra.next().unwrap()?;
        let mut c = vec![0.0; n + 1];
        let mut gaps = vec![0.0; n + 1];
        c[0] = low.count(epsilon);
        gaps[0] = low.next_above(epsilon) / epsilon;
        c[n] = high.count(epsilon);
        gaps[n] = high.next_above(epsilon) / epsilon;
        if n == 2 {
            let euler = (counts[1] as f64 - counts[0] as f64 - counts[2] as f64) * fiber_dim;
            c[1] = euler + c[0] + c[2];
            gaps[1] = gaps[0].min(gaps[2]);
        }
        for j in 0..=n {
            rows.push(SweepRow { s, degree: j, count: c[j], gap_ratio: gaps[j] });
        }
        vectors.push(c);
    }

    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= COUNT_TOL);
    let mut start = vectors.len() - 1;
    while start > 0 && same(&vectors[start - 1], &vectors[start]) {
        start -= 1;
    }
    let tail_len = vectors.len() - start;
    let s_star = opts.s_values[start];
    let s_last = *opts.s_values.last().unwrap();
    let stabilized = tail_len >= 3 && s_last >= 10.0 * s_star * (1.0 - 1e-12);
    let expected: Vec<f64> = data.morse_numbers.iter().map(|&m| m as f64 * fiber_dim).collect();
    let tail_counts = vectors[start].clone();
    Ok(SweepReport {
        epsilon,
        model_gap,
        matches_model: stabilized && same(&tail_counts, &expected),
        expected,
        rows,
        s_star: stabilized.then_some(s_star),
        tail_counts,
        tail_len,
        stabilized,
    })
}
