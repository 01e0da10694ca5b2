//! Harmonic-oscillator model operator at the zeros of a Morse form.
//!
//! At a zero with Hessian eigenvalues `a₁…a_n` the rescaled Witten
//! Laplacian is modelled in degree `j` by
//! `⊕_{|S|=j} Σ_i (−∂ᵢ² + aᵢ²uᵢ² ± aᵢ)` with `+` for `i ∈ S`.

use serde::{Deserialize, Serialize};

use super::{MorseData, Zero};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, RMat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEigenvalue {
    pub value: f64,
    pub multiplicity: usize,
    /// `multiplicity · dim_τ E`.
    pub trace: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelOperator {
    pub dim: usize,
    /// Hessian eigenvalues per zero.
    pub hessians: Vec<Vec<f64>>,
    pub fiber_dim: f64,
}

fn subsets(n: usize, j: usize) -> impl Iterator<Item = usize> {
    (0..1usize << n).filter(move |s| s.count_ones() as usize == j)
}

impl ModelOperator {
    pub fn new(dim: usize, hessians: Vec<Vec<f64>>, fiber_dim: f64) -> Result<Self> {
        for h in &hessians {
            if h.len() != dim {
                return Err(Error::DimensionMismatch(format!("{} Hessian eigenvalues in dimension {dim}", h.len())));
            }
            if h.iter().any(|a| a.abs() <= super::DEGENERACY_TOL) {
                return Err(Error::NotMorse(format!("degenerate Hessian {h:?}")));
            }
        }
        if !(fiber_dim > 0.0) {
            return Err(Error::InvalidInput("fiber dimension must be positive".into()));
        }
        Ok(Self { dim, hessians, fiber_dim })
    }

    pub fn from_zeros(dim: usize, zeros: &[Zero], fiber_dim: f64) -> Result<Self> {
        Self::new(dim, zeros.iter().map(|z| z.hessian.clone()).collect(), fiber_dim)
    }

    pub fn from_data(data: &MorseData, fiber_dim: f64) -> Result<Self> {
        Self::from_zeros(data.dim, &data.zeros, fiber_dim)
    }

    fn level(a: &[f64], set: usize, nu: &[usize]) -> f64 {
        a.iter()
            .enumerate()
            .map(|(i, &ai)| ai.abs() * (1 + 2 * nu[i]) as f64 + if set & (1 << i) != 0 { ai } else { -ai })
            .sum()
    }

    /// The lowest `count` degree-`j` eigenvalues counted with multiplicity.
    pub fn model_spectrum(&self, j: usize, count: usize) -> Result<Vec<ModelEigenvalue>> {
        if j > self.dim {
            return Err(Error::DegreeOutOfRange { degree: j, top: self.dim });
        }
        let n = self.dim;
        // ν_i ≤ count is enough: raising one ν_i past it passes `count` smaller levels.
        let span = count + 1;
        let mut all = Vec::new();
        for a in &self.hessians {
            for set in subsets(n, j) {
                for idx in 0..span.pow(n as u32) {
                    let nu: Vec<usize> = (0..n).map(|i| (idx / span.pow(i as u32)) % span).collect();
                    all.push(Self::level(a, set, &nu));
                }
            }
        }
        all.sort_by(f64::total_cmp);
        all.truncate(count);
        let mut out: Vec<ModelEigenvalue> = Vec::new();
        for v in all {
            match out.last_mut() {
                Some(last) if (v - last.value).abs() <= 1e-9 * (1.0 + v.abs()) => last.multiplicity += 1,
                _ => out.push(ModelEigenvalue { value: v, multiplicity: 1, trace: 0.0 }),
            }
        }
        for e in &mut out {
            e.trace = e.multiplicity as f64 * self.fiber_dim;
        }
        Ok(out)
    }

    /// Flat list of the lowest `count` degree-`j` eigenvalues.
    pub fn lowest_values(&self, j: usize, count: usize) -> Result<Vec<f64>> {
        Ok(self
            .model_spectrum(j, count)?
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect())
    }

    pub fn kernel_trace(&self, j: usize) -> Result<f64> {
        let zeros = self.hessians.len().max(1);
        Ok(self.model_spectrum(j, zeros)?.iter().filter(|e| e.value.abs() <= 1e-9).map(|e| e.trace).sum())
    }

    /// Smallest nonzero eigenvalue over all degrees: `2 min |aᵢ|`.
    pub fn smallest_nonzero(&self) -> Option<f64> {
        self.hessians.iter().flatten().map(|a| 2.0 * a.abs()).min_by(f64::total_cmp)
    }
}

/// Lowest `count` eigenvalues of `−∂² + a²u² + c` by sinc discrete
/// variable representation on a box scaled to the oscillator length.
fn oscillator_1d(a: f64, c: f64, count: usize) -> Result<Vec<f64>> {
    let len = 1.0 / a.abs().sqrt();
    let dx = 0.1 * len;
    let m = 130i64;
    let pts = (2 * m + 1) as usize;
    let kin = |k: i64, l: i64| {
        let d = (k - l) as f64;
        if k == l {
            std::f64::consts::PI.powi(2) / (3.0 * dx * dx)
        } else {
            2.0 * if (k - l) % 2 == 0 { 1.0 } else { -1.0 } / (dx * dx * d * d)
        }
    };
    let h = RMat::from_fn(pts, pts, |r, s| {
        let (k, l) = (r as i64 - m, s as i64 - m);
        let u = k as f64 * dx;
        kin(k, l) + if k == l { a * a * u * u + c } else { 0.0 }
    });
    let mut ev = symmetric_eigenvalues(&h)?;
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    Ok(ev)
}

/// Numerical degree-`j` model spectrum: each coordinate oscillator is
/// diagonalized on a box, then the Kronecker sums are formed directly.
pub fn oscillator_oracle(hessians: &[Vec<f64>], j: usize, count: usize) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for a in hessians {
        let n = a.len();
        if j > n {
            return Err(Error::DegreeOutOfRange { degree: j, top: n });
        }
        let plus: Vec<Vec<f64>> = a.iter().map(|&ai| oscillator_1d(ai, ai, count + 1)).collect::<Result<_>>()?;
        let minus: Vec<Vec<f64>> = a.iter().map(|&ai| oscillator_1d(ai, -ai, count + 1)).collect::<Result<_>>()?;
        let span = count + 1;
        for set in subsets(n, j) {
            for idx in 0..span.pow(n as u32) {
                let v: f64 = (0..n)
                    .map(|i| {
                        let nu = (idx / span.pow(i as u32)) % span;
                        if set & (1 << i) != 0 { plus[i][nu] } else { minus[i][nu] }
                    })
                    .sum();
                all.push(v);
            }
        }
    }
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    Ok(all)
}
