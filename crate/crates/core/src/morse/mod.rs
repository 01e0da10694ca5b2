//! Closed Morse 1-forms on flat tori and their branched double covers, the
//! harmonic-oscillator model operator, Witten deformation sweeps and the
//! Morse inequality checkers.
//!
//! A form is `θ = Σ pᵢ dxᵢ + df` on `ℝⁿ/ℤⁿ` with `f` a trigonometric
//! polynomial. Zeros are located in the continuum; meshes only enter when
//! the form is integrated into a cocycle.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{branch_locations, CellComplex, OneCocycle};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues, RMat};

mod checks;
mod model;
mod witten;

pub use checks::{
    asymptotic_morse_check, euler_morse_check, gap_report, strong_morse_check, AsymptoticReport, DegreeSpectralData,
    EulerMorseReport, GapConclusion, GapRow, StrongReport, StrongRow, MORSE_TOL,
};
pub use model::{oscillator_oracle, ModelEigenvalue, ModelOperator};
pub use witten::{default_epsilon, witten_sweep, SweepOptions, SweepReport, SweepRow};

/// `|det Hess| ≤` this at a zero means the form is not Morse.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Zeros closer than this (torus distance) are identified.
pub const DEDUP_DIST: f64 = 1e-6;

/// `cos_coeff · cos 2π⟨k,x⟩ + sin_coeff · sin 2π⟨k,x⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: Vec<i32>,
    #[serde(rename = "cos")]
    pub cos_coeff: f64,
    #[serde(rename = "sin")]
    pub sin_coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Primitive {
    pub terms: Vec<TrigTerm>,
}

/// Pull the form back to the genus-`genus` double cover built by
/// [`crate::geometry::build_surface`] at resolution `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub genus: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseOneForm {
    pub periods: Vec<f64>,
    #[serde(default)]
    pub primitive: Primitive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverSpec>,
}

impl MorseOneForm {
    pub fn new(periods: Vec<f64>, terms: Vec<TrigTerm>) -> Result<Self> {
        let form = Self { periods, primitive: Primitive { terms }, cover: None };
        form.validate()?;
        Ok(form)
    }

    pub fn with_cover(mut self, genus: usize, n: usize) -> Result<Self> {
        self.cover = Some(CoverSpec { genus, n });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidInput(format!("forms live on tori of dimension 1..=3, got {n}")));
        }
        if let Some(t) = self.primitive.terms.iter().find(|t| t.k.len() != n) {
            return Err(Error::DimensionMismatch(format!("frequency {:?} on a {n}-torus", t.k)));
        }
        let finite = self.periods.iter().chain(self.primitive.terms.iter().flat_map(|t| [&t.cos_coeff, &t.sin_coeff]));
        if finite.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        if let Some(c) = self.cover {
            if n != 2 {
                return Err(Error::InvalidInput("covers are branched over the 2-torus".into()));
            }
            branch_locations(c.genus, c.n)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    /// `f = cos 2πx + cos 2πy` on T², exact.
    pub fn cos_cos() -> Self {
        let term = |k: Vec<i32>| TrigTerm { k, cos_coeff: 1.0, sin_coeff: 0.0 };
        Self { periods: vec![0.0, 0.0], primitive: Primitive { terms: vec![term(vec![1, 0]), term(vec![0, 1])] }, cover: None }
    }

    /// `d cos 2πx` on the circle.
    pub fn circle_cos() -> Self {
        Self {
            periods: vec![0.0],
            primitive: Primitive { terms: vec![TrigTerm { k: vec![1], cos_coeff: 1.0, sin_coeff: 0.0 }] },
            cover: None,
        }
    }

    /// Named forms shipped with the library.
    pub fn bundled(name: &str) -> Result<Self> {
        Ok(match name {
            "circle-cos" => Self::circle_cos(),
            "torus-cos-cos" => Self::cos_cos(),
            "torus-cos-cos-shifted" => Self { periods: vec![0.1, 0.0], ..Self::cos_cos() },
            "torus-dx" => Self { periods: vec![1.0, 0.0], primitive: Primitive::default(), cover: None },
            // nowhere zero on the torus; the two branch points become saddles
            "genus2-generic" => Self { periods: vec![1.0, 0.0], ..Self::cos_cos().scaled_primitive(0.05) }.with_cover(2, 16)?,
            "genus2-exact" => Self::cos_cos().with_cover(2, 16)?,
            other => return Err(Error::InvalidInput(format!("unknown bundled form '{other}'"))),
        })
    }

    pub fn bundled_names() -> &'static [&'static str] {
        &["circle-cos", "torus-cos-cos", "torus-cos-cos-shifted", "torus-dx", "genus2-generic", "genus2-exact"]
    }

    fn scaled_primitive(mut self, c: f64) -> Self {
        for t in &mut self.primitive.terms {
            t.cos_coeff *= c;
            t.sin_coeff *= c;
        }
        self
    }

    /// `s·θ`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone().scaled_primitive(s);
        out.periods.iter_mut().for_each(|p| *p *= s);
        out
    }

    fn phase(t: &TrigTerm, x: &[f64]) -> f64 {
        TAU * t.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>()
    }

    pub fn primitive_value(&self, x: &[f64]) -> f64 {
        self.primitive
            .terms
            .iter()
            .map(|t| {
                let p = Self::phase(t, x);
                t.cos_coeff * p.cos() + t.sin_coeff * p.sin()
            })
            .sum()
    }

    /// Components `θ_i(x)`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.periods.clone();
        for t in &self.primitive.terms {
            let p = Self::phase(t, x);
            let g = -t.cos_coeff * p.sin() + t.sin_coeff * p.cos();
            for (o, &k) in out.iter_mut().zip(&t.k) {
                *o += TAU * k as f64 * g;
            }
        }
        out
    }

    /// `∂_i θ_j`; symmetric for a closed form.
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut h = vec![vec![0.0; n]; n];
        for t in &self.primitive.terms {
            let p = Self::phase(t, x);
            let g = -(t.cos_coeff * p.cos() + t.sin_coeff * p.sin()) * TAU * TAU;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += t.k[i] as f64 * (t.k[j] as f64 * g);
                }
            }
        }
        h
    }

    /// `max |∂_i θ_j − ∂_j θ_i|` over `samples` pseudo-random points.
    pub fn closedness_defect(&self, samples: usize) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for s in 0..samples {
            let x: Vec<f64> = (0..n).map(|i| ((s * 7919 + i * 104729) as f64 * 0.618_033_988_749_895).fract()).collect();
            let h = self.jacobian(&x);
            for i in 0..n {
                for j in 0..i {
                    worst = worst.max((h[i][j] - h[j][i]).abs());
                }
            }
        }
        worst
    }

    /// Integrate the form along the edges of `cx` (edge `[u, v]` with
    /// displacement `δ` gets `⟨p, δ⟩ + f(v) − f(u)`).
    pub fn cocycle_on(&self, cx: &CellComplex) -> Result<OneCocycle> {
        let n = self.dim();
        if n != cx.n || n > 2 {
            return Err(Error::DimensionMismatch(format!("{n}-dimensional form on a {}-complex", cx.n)));
        }
        let f: Vec<f64> = cx.coords.iter().map(|c| self.primitive_value(&c[..n])).collect();
        Ok(OneCocycle {
            values: cx
                .edges
                .iter()
                .zip(&cx.displacement)
                .map(|([u, v], d)| (0..n).map(|i| self.periods[i] * d[i]).sum::<f64>() + f[*v] - f[*u])
                .collect(),
        })
    }

    /// Euler characteristic of the manifold the form lives on.
    pub fn euler_characteristic(&self) -> i64 {
        match self.cover {
            Some(c) => 2 - 2 * c.genus as i64,
            None => 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let form: Self = serde_json::from_str(s)?;
        form.validate()?;
        Ok(form)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    /// Coordinates on the base torus, in `[0, 1)ⁿ`.
    pub location: Vec<f64>,
    /// Sheet of the double cover, when the form is pulled back.
    pub sheet: Option<usize>,
    pub branch_point: bool,
    pub index: usize,
    /// Hessian eigenvalues of the local primitive, ascending.
    pub hessian: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseData {
    pub dim: usize,
    pub zeros: Vec<Zero>,
    pub morse_numbers: Vec<usize>,
}

impl MorseData {
    fn from_zeros(dim: usize, zeros: Vec<Zero>) -> Self {
        let mut morse_numbers = vec![0; dim + 1];
        for z in &zeros {
            morse_numbers[z.index] += 1;
        }
        Self { dim, zeros, morse_numbers }
    }

    pub fn alternating_sum(&self) -> i64 {
        self.morse_numbers.iter().enumerate().map(|(j, &m)| if j % 2 == 0 { m as i64 } else { -(m as i64) }).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.morse_numbers.iter().map(|&m| m as f64).collect()
    }
}

fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(1.0);
            d.min(1.0 - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn to_rmat(h: &[Vec<f64>]) -> RMat {
    RMat::from_fn(h.len(), h.len(), |i, j| h[i][j])
}

fn newton(form: &MorseOneForm, seed: Vec<f64>) -> Result<Option<Vec<f64>>> {
    let n = form.dim();
    let mut x = seed;
    for _ in 0..80 {
        let g = form.eval(&x);
        let res = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if res <= 1e-12 {
            return Ok(Some(x.iter().map(|v| v.rem_euclid(1.0)).collect()));
        }
        // pseudo-inverse step, so that degenerate zero sets are still reached
        let (vals, vecs) = symmetric_eigen(&to_rmat(&form.jacobian(&x)))?;
        let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut step = vec![0.0; n];
        for (k, &lam) in vals.iter().enumerate() {
            if lam.abs() > 1e-12 * top.max(1.0) {
                let c: f64 = (0..n).map(|i| vecs[(i, k)] * g[i]).sum::<f64>() / lam;
                for i in 0..n {
                    step[i] += c * vecs[(i, k)];
                }
            }
        }
        let size = step.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !size.is_finite() || size == 0.0 {
            return Ok(None);
        }
        let damp = if size > 0.1 { 0.1 / size } else { 1.0 };
        for i in 0..n {
            x[i] -= damp * step[i];
        }
    }
    Ok(None)
}

fn classify(form: &MorseOneForm, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let mut ev = symmetric_eigenvalues(&to_rmat(&form.jacobian(x)))?;
    ev.sort_by(f64::total_cmp);
    let det: f64 = ev.iter().product();
    if det.abs() <= DEGENERACY_TOL {
        return Err(Error::NotMorse(format!("|det Hess| = {:e} at {x:?}", det.abs())));
    }
    Ok((ev.iter().filter(|&&a| a < 0.0).count(), ev))
}

/// Newton iteration from a `seeds_per_axisⁿ` grid; zeros are deduplicated,
/// classified by the Hessian of the local primitive and, for pulled-back
/// forms, lifted to both sheets with the branch points added as saddles.
pub fn find_zeros(form: &MorseOneForm, seeds_per_axis: usize) -> Result<MorseData> {
    form.validate()?;
    let n = form.dim();
    if seeds_per_axis == 0 {
        return Err(Error::InvalidInput("at least one seed per axis".into()));
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for idx in 0..seeds_per_axis.pow(n as u32) {
        let seed: Vec<f64> = (0..n)
            .map(|i| ((idx / seeds_per_axis.pow(i as u32)) % seeds_per_axis) as f64 / seeds_per_axis as f64 + 0.5 / seeds_per_axis as f64)
            .collect();
        if let Some(x) = newton(form, seed)? {
            if !found.iter().any(|y| torus_dist(y, &x) <= DEDUP_DIST) {
                found.push(x);
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut base = Vec::with_capacity(found.len());
    for x in found {
        let (index, hessian) = classify(form, &x)?;
        base.push(Zero { location: x, sheet: None, branch_point: false, index, hessian });
    }
    let Some(cover) = form.cover else {
        return Ok(MorseData::from_zeros(n, base));
    };
    let branches = branch_locations(cover.genus, cover.n)?;
    let mut zeros = Vec::new();
    for b in &branches {
        if base.iter().any(|z| torus_dist(&z.location, b) <= DEDUP_DIST) {
            return Err(Error::NotMorse(format!("zero at the branch point {b:?}")));
        }
    }
    for sheet in 0..2 {
        zeros.extend(base.iter().cloned().map(|z| Zero { sheet: Some(sheet), ..z }));
    }
    // θ = Re(c dz) near a branch point becomes Re(2cw dw) upstairs: a saddle.
    for b in &branches {
        let v = form.eval(b);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        zeros.push(Zero { location: b.to_vec(), sheet: None, branch_point: true, index: 1, hessian: vec![-2.0 * norm, 2.0 * norm] });
    }
    Ok(MorseData::from_zeros(n, zeros))
}

/// Quadratic model `−Σ_{j≤k} u_j du_j + Σ_{j>k} u_j du_j` on `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalForm {
    /// Diagonal Hessian of the primitive.
    pub hessian: Vec<f64>,
}

impl LocalForm {
    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        self.hessian.iter().zip(u).map(|(a, x)| a * x).collect()
    }

    /// Index of the unique zero at the origin.
    pub fn index(&self) -> usize {
        self.hessian.iter().filter(|&&a| a < 0.0).count()
    }

    pub fn zero(&self) -> Zero {
        let mut hessian = self.hessian.clone();
        hessian.sort_by(f64::total_cmp);
        Zero { location: vec![0.0; self.hessian.len()], sheet: None, branch_point: false, index: self.index(), hessian }
    }
}

pub fn normal_form_sample(k: usize, n: usize) -> Result<LocalForm> {
    if k > n {
        return Err(Error::DegreeOutOfRange { degree: k, top: n });
    }
    Ok(LocalForm { hessian: (0..n).map(|j| if j < k { -1.0 } else { 1.0 }).collect() })
}

/// Add a small random harmonic part and random low-frequency exact terms
/// until the zeros are nondegenerate and their count matches χ.
pub fn perturb_to_morse<R: Rng>(
    form: &MorseOneForm,
    rng: &mut R,
    scale: f64,
    attempts: usize,
) -> Result<(MorseOneForm, MorseData)> {
    let n = form.dim();
    for _ in 0..attempts {
        let mut candidate = form.clone();
        for p in &mut candidate.periods {
            *p += scale * rng.random_range(-1.0..1.0);
        }
        for i in 0..n {
            let mut k = vec![0; n];
            k[i] = 1;
            candidate.primitive.terms.push(TrigTerm {
                k,
                cos_coeff: scale * rng.random_range(-1.0..1.0),
                sin_coeff: scale * rng.random_range(-1.0..1.0),
            });
        }
        if let Ok(data) = find_zeros(&candidate, 32) {
            if data.alternating_sum() == candidate.euler_characteristic() {
                return Ok((candidate, data));
            }
        }
    }
    Err(Error::NotMorse(format!("no nondegenerate perturbation found in {attempts} attempts")))
}

#[cfg(test)]
mod tests;
