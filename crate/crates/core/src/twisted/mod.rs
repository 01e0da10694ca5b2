//! Twisted Laplacians on discrete models and their spectral invariants:
//! densities, theta functions, Novikov–Shubin fits, spectrum bottoms, plus
//! the exact Fourier-multiplier backend for flat tori.

mod grid;
mod multiplier;
mod tower;

pub use grid::{bloch_density, symbol_density, symbol_eigenvalues};
pub use multiplier::{
    anticommutator_check, exact_flat_density, multiplier_vanishing, AnticommutatorReport, MultiplierModel,
    VanishingRow,
};
pub use tower::{
    cover_tower, semicontinuity_scan, twisted_bettis_by_rank, ScanPoint, ScanReport, TowerRow,
};

use serde::{Deserialize, Serialize};

use crate::eigs::{lowest_shift_invert, LanczosOptions};
use crate::error::{Error, Result};
use crate::geometry::{gauge_factors, hodge_laplacian, CellComplex, OneCocycle, TwistedComplex};
use crate::linalg::{sparse_to_dense, symmetric_eigenvalues, SparseMat, C64, KERNEL_TOL};
use crate::vn_core::{dilation_compare, SpectralDensity};

/// Real-form rows up to which spectra are computed densely.
pub const DENSE_SOLVE_LIMIT: usize = 5000;
/// Eigenvalues kept per sector above [`DENSE_SOLVE_LIMIT`].
pub const LOW_COUNT: usize = 200;
pub const PSD_TOL: f64 = 1e-10;

/// One sector of a twisted Laplacian in real symmetric form.
#[derive(Clone, Debug)]
pub struct LaplacianPart {
    pub block: usize,
    /// Trace weight carried by each eigenvalue.
    pub weight: f64,
    pub op: SparseMat,
    /// The operator is complex Hermitian, stored realified (eigenvalues doubled).
    pub realified: bool,
}

/// `Δ_{β+sα, j}` assembled per sector of the local system.
#[derive(Clone, Debug)]
pub struct TwistedLaplacian {
    pub degree: usize,
    pub s: f64,
    pub top: usize,
    pub parts: Vec<LaplacianPart>,
}

/// Trace-weighted eigenvalues, complete below `valid_below`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedSpectrum {
    pub eigenvalues: Vec<(f64, f64)>,
    pub valid_below: f64,
}

impl WeightedSpectrum {
    pub fn kernel_trace(&self) -> f64 {
        self.eigenvalues.iter().filter(|e| e.0 <= KERNEL_TOL).map(|e| e.1).sum()
    }

    /// Trace of eigenvalues in `[0, eps]`.
    pub fn count_below(&self, eps: f64) -> f64 {
        self.eigenvalues.iter().filter(|e| e.0 <= eps).map(|e| e.1).sum()
    }

    pub fn density(&self) -> SpectralDensity {
        SpectralDensity::from_weighted_truncated(self.eigenvalues.clone(), self.valid_below)
    }
}

fn sector_cocycle(base: &[C64], alpha: Option<&OneCocycle>, s: f64) -> Vec<C64> {
    match alpha {
        None => base.iter().map(|z| C64::new(s * z.re, z.im)).collect(),
        Some(a) => base.iter().zip(&a.values).map(|(z, &av)| C64::new(z.re + s * av, z.im)).collect(),
    }
}

impl TwistedLaplacian {
    /// `Δ_{sθ, j}` for the twist `θ` of `tc` (phases are not scaled).
    pub fn assemble(tc: &TwistedComplex, j: usize, s: f64) -> Result<Self> {
        Self::build(tc, None, j, s)
    }

    /// Deformation family `Δ_{β+sα, j}` with `β` the twist of `tc`.
    pub fn family(tc: &TwistedComplex, alpha: &OneCocycle, j: usize, s: f64) -> Result<Self> {
        if alpha.values.len() != tc.cells.edges.len() {
            return Err(Error::DimensionMismatch("deformation direction has the wrong length".into()));
        }
        Self::build(tc, Some(alpha), j, s)
    }

    fn build(tc: &TwistedComplex, alpha: Option<&OneCocycle>, j: usize, s: f64) -> Result<Self> {
        let n = tc.cells.n;
        if j > n {
            return Err(Error::DegreeOutOfRange { degree: j, top: n });
        }
        let counts = tc.cells.counts();
        let mut parts = Vec::new();
        for sector in tc.sectors() {
            let z = sector_cocycle(&sector.cocycle, alpha, s);
            let diffs = tc.cells.coboundaries(&z)?;
            let lap = hodge_laplacian(&diffs, &counts, j)?;
            parts.push(LaplacianPart {
                block: sector.block,
                weight: sector.weight,
                realified: !lap.is_real(),
                op: lap.real_form(),
            });
        }
        Ok(Self { degree: j, s, top: n, parts })
    }

    /// Rows of each (complex) sector.
    pub fn rows(&self) -> usize {
        self.parts.first().map(|p| if p.realified { p.op.rows() / 2 } else { p.op.rows() }).unwrap_or(0)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.parts {
            let t = crate::linalg::sparse_transpose(&p.op);
            let diff = crate::linalg::sparse_add(&p.op, &crate::linalg::sparse_scale(&t, -1.0));
            worst = worst.max(crate::linalg::sparse_max_abs(&diff));
        }
        worst
    }

    fn part_eigenvalues(p: &LaplacianPart, count: Option<usize>) -> Result<(Vec<f64>, f64)> {
        let rows = p.op.rows();
        let (mut ev, valid) = if rows <= DENSE_SOLVE_LIMIT {
            let mut ev = symmetric_eigenvalues(&sparse_to_dense(&p.op))?;
            ev.sort_by(f64::total_cmp);
            (ev, f64::INFINITY)
        } else {
            let mult = if p.realified { 2 } else { 1 };
            let k = count.unwrap_or(LOW_COUNT).min(rows) * mult;
            let opts = LanczosOptions { max_basis: (2 * k + 40).max(320), ..Default::default() };
            let ev = lowest_shift_invert(&p.op, -1.0, k, &opts)?;
            let top = ev.last().copied().unwrap_or(f64::INFINITY);
            (ev, if k >= rows { f64::INFINITY } else { top })
        };
        if p.realified {
            ev = ev.into_iter().step_by(2).collect();
        }
        if let Some(c) = count {
            if ev.len() > c {
                let cut = ev[c];
                ev.truncate(c);
                return Ok((ev, cut.min(valid)));
            }
        }
        Ok((ev, valid))
    }

    /// Full spectrum when dense, otherwise the lowest [`LOW_COUNT`] per sector.
    pub fn spectrum(&self) -> Result<WeightedSpectrum> {
        self.collect(None)
    }

    /// The lowest `count` eigenvalues per sector.
    pub fn lowest(&self, count: usize) -> Result<WeightedSpectrum> {
        self.collect(Some(count))
    }

    fn collect(&self, count: Option<usize>) -> Result<WeightedSpectrum> {
        let mut eigenvalues = Vec::new();
        let mut valid_below = f64::INFINITY;
        for p in &self.parts {
            let (ev, v) = Self::part_eigenvalues(p, count)?;
            valid_below = valid_below.min(v);
            eigenvalues.extend(ev.into_iter().map(|l| (l, p.weight)));
        }
        eigenvalues.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(WeightedSpectrum { eigenvalues, valid_below })
    }

    /// Most negative eigenvalue (0 when positive semidefinite).
    pub fn psd_violation(&self) -> Result<f64> {
        let low = self.lowest(1)?;
        Ok(low.eigenvalues.first().map(|e| (-e.0).max(0.0)).unwrap_or(0.0))
    }
}

/// Step density of a twisted Laplacian weighted by sector traces.
pub fn twisted_density(l: &TwistedLaplacian) -> Result<SpectralDensity> {
    Ok(l.spectrum()?.density())
}

/// Spectrum bottom, optionally above the kernel threshold. `None` when
/// every computed eigenvalue lies in the kernel.
pub fn lambda0(l: &TwistedLaplacian, exclude_kernel: bool) -> Result<Option<f64>> {
    let mut count = 8usize;
    loop {
        let spec = l.lowest(count)?;
        let found = spec.eigenvalues.iter().map(|e| e.0).find(|&v| !exclude_kernel || v > KERNEL_TOL);
        let exhausted = spec.eigenvalues.len() < count * l.parts.len() || count >= l.rows();
        if found.is_some() || exhausted {
            return Ok(found.map(|v| v.max(0.0)));
        }
        count *= 4;
    }
}

/// `Θ(t) = ∫ e^{−tλ} dN(λ)` over `λ > 0`: the kernel jump is excluded.
/// For truncated step densities this is a lower bound.
pub fn theta_function(n: &SpectralDensity, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("theta function needs t > 0, got {t}")));
    }
    Ok(match n {
        SpectralDensity::Steps(s) => {
            let mut prev = 0.0;
            let mut total = 0.0;
            for &(l, v) in &s.points {
                if l > KERNEL_TOL {
                    total += (v - prev) * (-t * l).exp();
                }
                prev = v;
            }
            total
        }
        SpectralDensity::ClosedForm { terms } => terms
            .iter()
            .map(|p| {
                if p.exponent == 0.0 {
                    if p.gap > KERNEL_TOL {
                        p.coeff * (-t * p.gap).exp()
                    } else {
                        0.0
                    }
                } else {
                    p.coeff * libm::tgamma(p.exponent + 1.0) * t.powf(-p.exponent) * (-t * p.gap).exp()
                }
            })
            .sum(),
    })
}

/// Samples of `Θ` as a CSV `t,theta`.
pub fn theta_csv(n: &SpectralDensity, ts: &[f64]) -> Result<String> {
    let mut out = String::from("t,theta\n");
    for &t in ts {
        out.push_str(&format!("{t:.12e},{:.12e}\n", theta_function(n, t)?));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsWindow {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl NsWindow {
    /// `[4h², 100h²]` for grid spacing `h`.
    pub fn for_spacing(h: f64) -> Self {
        Self { lambda_min: 4.0 * h * h, lambda_max: 100.0 * h * h }
    }

    /// Window used for the closed-form backend (spacing of a 100-cell grid).
    pub fn exact_default() -> Self {
        Self::for_spacing(0.01)
    }
}

/// Novikov–Shubin estimate. A gapped density is reported through
/// `gap_flag` and the measured `gap`, never as an infinite exponent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NSFit {
    /// Slope over the whole window (`None` when gapped).
    pub slope: Option<f64>,
    /// Smaller and larger of the half-window slopes.
    pub alpha: Option<f64>,
    pub alpha_bar: Option<f64>,
    pub window: NsWindow,
    pub residual: f64,
    pub gap_flag: bool,
    pub gap: Option<f64>,
    /// Exponent from the decay of `Θ` on `t ∈ [1/λ_max, 1/λ_min]`.
    pub theta_alpha: Option<f64>,
    /// `|slope − theta_alpha|` when both exist.
    pub discrepancy: Option<f64>,
}

const NS_SAMPLES: usize = 41;

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Least-squares slope and RMS residual of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let res = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum::<f64>() / n;
    (slope, res.sqrt())
}

pub fn ns_fit(n: &SpectralDensity, b: f64, window: NsWindow) -> Result<NSFit> {
    let NsWindow { lambda_min, lambda_max } = window;
    if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
        return Err(Error::InvalidInput(format!("empty fit window [{lambda_min}, {lambda_max}]")));
    }
    if n.valid_below() < lambda_max {
        return Err(Error::InvalidInput(format!(
            "density only known below {} < {lambda_max}",
            n.valid_below()
        )));
    }
    let grid = geometric(lambda_min, lambda_max, NS_SAMPLES);
    let excess: Vec<f64> = grid.iter().map(|&l| n.eval(l) - b).collect();
    let scale = b.abs().max(n.eval(lambda_max).abs()).max(1e-300);
    let positive: Vec<(f64, f64)> = grid
        .iter()
        .zip(&excess)
        .filter(|(_, &e)| e > 1e-12 * scale)
        .map(|(&l, &e)| (l.ln(), e.ln()))
        .collect();
    if positive.is_empty() {
        return Ok(NSFit {
            slope: None,
            alpha: None,
            alpha_bar: None,
            window,
            residual: 0.0,
            gap_flag: true,
            gap: n.bottom_above(KERNEL_TOL),
            theta_alpha: None,
            discrepancy: None,
        });
    }
    if positive.len() < 4 {
        return Err(Error::InvalidInput("too few points of increase inside the fit window".into()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = positive.iter().copied().unzip();
    let (slope, residual) = ls_slope(&x, &y);
    let half = x.len() / 2;
    let (lo, _) = ls_slope(&x[..=half], &y[..=half]);
    let (hi, _) = ls_slope(&x[half..], &y[half..]);

    let ts = geometric(1.0 / lambda_max, 1.0 / lambda_min, NS_SAMPLES);
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    for &t in &ts {
        let th = theta_function(n, t)?;
        if th > 0.0 {
            tx.push(t.ln());
            ty.push(th.ln());
        }
    }
    let theta_alpha = if tx.len() >= 4 { Some(-ls_slope(&tx, &ty).0) } else { None };
    Ok(NSFit {
        slope: Some(slope),
        alpha: Some(lo.min(hi)),
        alpha_bar: Some(lo.max(hi)),
        window,
        residual,
        gap_flag: false,
        gap: None,
        theta_alpha,
        discrepancy: theta_alpha.map(|a| (a - slope).abs()),
    })
}

/// Outcome of replacing `θ` by `θ + dh`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaugeReport {
    /// `max |d' − E_{k+1}⁻¹ d E_k|` over degrees and sectors.
    pub conjugation_defect: f64,
    pub kernel_before: Vec<f64>,
    pub kernel_after: Vec<f64>,
    /// Dilatation constant per degree (`None` if not equivalent on the grid).
    pub dilation_constants: Vec<Option<f64>>,
    /// Power of two at or above `exp(2·osc h)`.
    pub constant_bound: f64,
    pub passed: bool,
}

pub const GAUGE_TOL: f64 = 1e-10;

fn max_abs_diff_scaled(a: &crate::geometry::CDiff, b: &crate::geometry::CDiff, left: &[f64], right: &[f64]) -> f64 {
    let conj = a.scale_rows_cols(&left.iter().map(|x| 1.0 / x).collect::<Vec<_>>(), right);
    let diff = b.add(&conj.scale(-1.0));
    let mut worst = crate::linalg::sparse_max_abs(&diff.re);
    if let Some(im) = &diff.im {
        worst = worst.max(crate::linalg::sparse_max_abs(im));
    }
    worst
}

pub fn gauge_check(tc: &TwistedComplex, h: &[f64]) -> Result<GaugeReport> {
    let cx = &tc.cells;
    if h.len() != cx.num_vertices {
        return Err(Error::DimensionMismatch(format!("{} gauge values for {} vertices", h.len(), cx.num_vertices)));
    }
    let dh = OneCocycle::exact(cx, h);
    let moved = tc.with_twist(tc.system.twist.add(&dh))?;
    let mut defect = 0.0f64;
    for (a, b) in tc.sectors().iter().zip(moved.sectors()) {
        for k in 0..cx.n {
            let d = cx.raw_coboundary(&a.cocycle, k)?;
            let d2 = cx.raw_coboundary(&b.cocycle, k)?;
            defect = defect.max(max_abs_diff_scaled(&d, &d2, &gauge_factors(cx, h, k + 1), &gauge_factors(cx, h, k)));
        }
    }
    let osc = h.iter().copied().fold(f64::NEG_INFINITY, f64::max) - h.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = 2f64.powi((2.0 * osc / std::f64::consts::LN_2 - 1e-12).ceil().max(0.0) as i32);
    let mut kernel_before = Vec::new();
    let mut kernel_after = Vec::new();
    let mut constants = Vec::new();
    for j in 0..=cx.n {
        let s1 = TwistedLaplacian::assemble(tc, j, 1.0)?.spectrum()?;
        let s2 = TwistedLaplacian::assemble(&moved, j, 1.0)?.spectrum()?;
        kernel_before.push(s1.kernel_trace());
        kernel_after.push(s2.kernel_trace());
        let top = s1
            .eigenvalues
            .last()
            .map(|e| e.0)
            .unwrap_or(1.0)
            .max(s2.eigenvalues.last().map(|e| e.0).unwrap_or(1.0))
            .min(s1.valid_below.min(s2.valid_below) / bound)
            .max(KERNEL_TOL);
        let (f, g) = (s1.density(), s2.density());
        let a = dilation_compare(&f, &g, top)?;
        let b = dilation_compare(&g, &f, top)?;
        constants.push(match (a.constant, b.constant) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        });
    }
    let kernels_equal = kernel_before.iter().zip(&kernel_after).all(|(a, b)| (a - b).abs() <= 1e-8);
    let passed =
        defect <= GAUGE_TOL && kernels_equal && constants.iter().all(|c| c.map(|c| c <= bound).unwrap_or(false));
    Ok(GaugeReport {
        conjugation_defect: defect,
        kernel_before,
        kernel_after,
        dilation_constants: constants,
        constant_bound: bound,
        passed,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityRow {
    pub degree: usize,
    pub max_difference: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityReport {
    pub rows: Vec<DualityRow>,
    pub passed: bool,
}

pub const DUALITY_TOL: f64 = 1e-8;

fn sorted_spectrum(cx: &CellComplex, z: &[C64], j: usize) -> Result<Vec<f64>> {
    let diffs = cx.coboundaries(z)?;
    let lap = hodge_laplacian(&diffs, &cx.counts(), j)?;
    if lap.rows() > DENSE_SOLVE_LIMIT {
        return Err(Error::SizeLimit { rows: lap.rows(), limit: DENSE_SOLVE_LIMIT });
    }
    let mut ev = symmetric_eigenvalues(&sparse_to_dense(&lap.real_form()))?;
    ev.sort_by(f64::total_cmp);
    if !lap.is_real() {
        ev = ev.into_iter().step_by(2).collect();
    }
    Ok(ev)
}

fn compare_lists(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `Δ_{θ,j}` against `Δ_{−θ,n−j}` of the dual complex, for every `j`.
pub fn poincare_check(cx: &CellComplex, theta: &OneCocycle) -> Result<DualityReport> {
    let dual = cx.dual();
    let z = crate::geometry::real_cocycle(&theta.values);
    let zm = crate::geometry::real_cocycle(&theta.scaled(-1.0).values);
    let mut rows = Vec::new();
    for j in 0..=cx.n {
        let a = sorted_spectrum(cx, &z, j)?;
        let b = sorted_spectrum(&dual, &zm, cx.n - j)?;
        rows.push(DualityRow { degree: j, max_difference: compare_lists(&a, &b) });
    }
    let passed = rows.iter().all(|r| r.max_difference <= DUALITY_TOL);
    Ok(DualityReport { rows, passed })
}

/// Self-dual square grids: `Δ_{θ,j}` against `Δ_{−θ,n−j}` on the same grid.
pub fn grid_duality_check(cx: &CellComplex, theta: &OneCocycle) -> Result<DualityReport> {
    let z = crate::geometry::real_cocycle(&theta.values);
    let zm = crate::geometry::real_cocycle(&theta.scaled(-1.0).values);
    let mut rows = Vec::new();
    for j in 0..=cx.n {
        let a = sorted_spectrum(cx, &z, j)?;
        let b = sorted_spectrum(cx, &zm, cx.n - j)?;
        rows.push(DualityRow { degree: j, max_difference: compare_lists(&a, &b) });
    }
    let passed = rows.iter().all(|r| r.max_difference <= DUALITY_TOL);
    Ok(DualityReport { rows, passed })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RescalingReport {
    pub factor: f64,
    pub kernel_difference: f64,
    pub dilation_constants: Vec<Option<f64>>,
    /// `max(c, 1/c)⁴`.
    pub bound: f64,
    pub passed: bool,
}

/// Scale every length by `c` and compare densities and kernels.
pub fn rescaling_check(tc: &TwistedComplex, c: f64) -> Result<RescalingReport> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("scale factor must be positive, got {c}")));
    }
    let scaled = TwistedComplex { cells: tc.cells.rescaled(c), system: tc.system.clone() };
    let bound = c.max(1.0 / c).powi(4);
    let mut kernel_difference = 0.0f64;
    let mut constants = Vec::new();
    for j in 0..=tc.cells.n {
        let a = TwistedLaplacian::assemble(tc, j, 1.0)?.spectrum()?;
        let b = TwistedLaplacian::assemble(&scaled, j, 1.0)?.spectrum()?;
        kernel_difference = kernel_difference.max((a.kernel_trace() - b.kernel_trace()).abs());
        let top = a.eigenvalues.last().map(|e| e.0).unwrap_or(1.0).max(KERNEL_TOL);
        let top = top.min(a.valid_below.min(b.valid_below) / bound);
        let f = dilation_compare(&a.density(), &b.density(), top)?;
        let g = dilation_compare(&b.density(), &a.density(), top)?;
        constants.push(match (f.constant, g.constant) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        });
    }
    // the sampled constants are powers of two
    let pow_bound = 2f64.powi(bound.log2().ceil() as i32);
    let passed =
        kernel_difference <= 1e-8 && constants.iter().all(|k| k.map(|k| k <= pow_bound).unwrap_or(false));
    Ok(RescalingReport { factor: c, kernel_difference, dilation_constants: constants, bound, passed })
}

#[cfg(test)]
mod tests;
