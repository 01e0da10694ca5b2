//! Exact backend for flat tori `ℝⁿ/ℤⁿ` with a constant twist covector.
//!
//! After the Fourier transform on the `ℤⁿ`-cover the twisted differential
//! acts fibrewise on `Λ*ℂⁿ` by exterior multiplication with the complex
//! covector `ζ = 2πiξ + sθ`, so `Δ = |2πξ|² + s²|θ|²` on every degree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{binomial, cmat_zeros, hermitian_eigenvalues, CMat, C64};
use crate::vn_core::SpectralDensity;

/// Volume of the unit ball in `ℝⁿ`.
fn unit_ball(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0 + 1.0)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierModel {
    pub n: usize,
    pub theta: Vec<f64>,
    pub degree: usize,
    pub s: f64,
}

impl MultiplierModel {
    pub fn new(n: usize, theta: Vec<f64>, degree: usize, s: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Unsupported(format!("multiplier model in dimension {n}")));
        }
        if theta.len() != n {
            return Err(Error::DimensionMismatch(format!("{}-component twist in dimension {n}", theta.len())));
        }
        if degree > n {
            return Err(Error::DegreeOutOfRange { degree, top: n });
        }
        Ok(Self { n, theta, degree, s })
    }

    fn twist(&self) -> Vec<f64> {
        self.theta.iter().map(|t| self.s * t).collect()
    }

    /// Fibre operator on `Λ^j ℂⁿ` at frequency `ξ`, assembled from
    /// exterior and interior products.
    pub fn symbol_matrix(&self, xi: &[f64]) -> CMat {
        let zeta: Vec<C64> = xi
            .iter()
            .zip(self.twist())
            .map(|(&x, t)| C64::new(t, std::f64::consts::TAU * x))
            .collect();
        let f = Fermions::new(self.n);
        let e = f.exterior(&zeta);
        let i = f.interior(&zeta.iter().map(|z| z.conj()).collect::<Vec<_>>());
        let full = &e * &i + &i * &e;
        f.restrict(&full, self.degree)
    }

    /// Lowest eigenvalue over a frequency grid containing `ξ = 0`; the
    /// symbol is convex in `ξ` with its minimum there.
    pub fn lambda0(&self) -> Result<f64> {
        let mut best = f64::INFINITY;
        let ticks = [-0.5, -0.25, 0.0, 0.25, 0.5];
        for idx in 0..ticks.len().pow(self.n as u32) {
            let xi: Vec<f64> = (0..self.n).map(|k| ticks[(idx / ticks.len().pow(k as u32)) % ticks.len()]).collect();
            let ev = hermitian_eigenvalues(&self.symbol_matrix(&xi))?;
            best = best.min(ev.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Ok(best)
    }

    pub fn density(&self) -> SpectralDensity {
        exact_flat_density(self.n, &self.theta, self.degree, self.s).expect("validated model")
    }

    /// `N_j(0⁺)`: the model has no atoms, so this is zero.
    pub fn betti(&self) -> f64 {
        self.density().eval(0.0)
    }
}

/// `N_j(λ) = C(n,j) · vol{t : |2πt|² + s²|θ|² ≤ λ}` per unit cell.
pub fn exact_flat_density(n: usize, theta: &[f64], j: usize, s: f64) -> Result<SpectralDensity> {
    MultiplierModel::new(n, theta.to_vec(), j, s)?;
    let gap = s * s * norm2(theta);
    let coeff = binomial(n, j) as f64 * unit_ball(n) / (4.0 * std::f64::consts::PI.powi(2)).powf(n as f64 / 2.0);
    Ok(SpectralDensity::power_law(coeff, n as f64 / 2.0, gap))
}

/// Creation operators on `Λ*ℂⁿ`, basis indexed by subsets (bitmasks).
struct Fermions {
    n: usize,
    create: Vec<CMat>,
}

impl Fermions {
    fn new(n: usize) -> Self {
        let dim = 1usize << n;
        let create = (0..n)
            .map(|k| {
                let mut m = cmat_zeros(dim, dim);
                for set in 0..dim {
                    if set & (1 << k) == 0 {
                        let below = (set & ((1 << k) - 1)).count_ones();
                        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                        m[(set | (1 << k), set)] = C64::new(sign, 0.0);
                    }
                }
                m
            })
            .collect();
        Self { n, create }
    }

    fn exterior(&self, v: &[C64]) -> CMat {
        let dim = 1usize << self.n;
        let mut m = cmat_zeros(dim, dim);
        for (k, c) in self.create.iter().enumerate() {
            m += c * faer::Scale(v[k]);
        }
        m
    }

    /// `i(w) = Σ w_k e_kᵀ`, complex linear in `w`.
    fn interior(&self, w: &[C64]) -> CMat {
        let dim = 1usize << self.n;
        let mut m = cmat_zeros(dim, dim);
        for (k, c) in self.create.iter().enumerate() {
            m += c.transpose().to_owned() * faer::Scale(w[k]);
        }
        m
    }

    fn degree_indices(&self, j: usize) -> Vec<usize> {
        (0..1usize << self.n).filter(|s| s.count_ones() as usize == j).collect()
    }

    fn restrict(&self, m: &CMat, j: usize) -> CMat {
        let idx = self.degree_indices(j);
        faer::Mat::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
    }
}

/// Expansion `Δ_{β+sα} = Δ_β + s(𝓛_V + 𝓛_V* + 2⟨α,β⟩) + s²|α|²`
/// checked on the fibre operators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum AnticommutatorReport {
    Checked {
        /// First-order coefficient from `s ∈ {0, 1, −1}` against the right side.
        first_order_defect: f64,
        /// Second-order coefficient against `|α|² Id`.
        second_order_defect: f64,
        /// Full family at a few extra `s` against the quadratic.
        family_defect: f64,
        samples: usize,
    },
    /// The discrete models have no exact adjoint pairing of `e(α)` and `i(V)`.
    NotApplicable(String),
}

impl AnticommutatorReport {
    pub fn max_defect(&self) -> Option<f64> {
        match self {
            AnticommutatorReport::Checked { first_order_defect, second_order_defect, family_defect, .. } => {
                Some(first_order_defect.max(*second_order_defect).max(*family_defect))
            }
            AnticommutatorReport::NotApplicable(_) => None,
        }
    }
}

fn max_abs(m: &CMat) -> f64 {
    crate::linalg::max_abs(m)
}

/// Full (all-degree) family operator at frequency `ξ`.
fn family_operator(f: &Fermions, xi: &[f64], beta: &[f64], alpha: &[f64], s: f64) -> CMat {
    let zeta: Vec<C64> = (0..f.n)
        .map(|k| C64::new(beta[k] + s * alpha[k], std::f64::consts::TAU * xi[k]))
        .collect();
    let e = f.exterior(&zeta);
    let i = f.interior(&zeta.iter().map(|z| z.conj()).collect::<Vec<_>>());
    &e * &i + &i * &e
}

pub fn anticommutator_check(n: usize, alpha: &[f64], beta: &[f64], xis: &[Vec<f64>]) -> Result<AnticommutatorReport> {
    if !(1..=3).contains(&n) || alpha.len() != n || beta.len() != n || xis.iter().any(|x| x.len() != n) {
        return Err(Error::DimensionMismatch("anticommutator check needs n ∈ {1,2,3} and matching vectors".into()));
    }
    let f = Fermions::new(n);
    let dim = 1usize << n;
    let id = crate::linalg::cmat_identity(dim);
    let ab: f64 = alpha.iter().zip(beta).map(|(a, b)| a * b).sum();
    let aa = norm2(alpha);
    let (mut d1, mut d2, mut dfam) = (0.0f64, 0.0f64, 0.0f64);
    for xi in xis {
        let m0 = family_operator(&f, xi, beta, alpha, 0.0);
        let mp = family_operator(&f, xi, beta, alpha, 1.0);
        let mm = family_operator(&f, xi, beta, alpha, -1.0);
        let c1 = (&mp - &mm) * faer::Scale(C64::new(0.5, 0.0));
        let c2 = (&mp + &mm) * faer::Scale(C64::new(0.5, 0.0)) - &m0;
        // Lie derivative along V = α♯ with the untwisted differential: 𝓛_V = e(2πiξ) i(α) + i(α) e(2πiξ)
        let k: Vec<C64> = xi.iter().map(|&x| C64::new(0.0, std::f64::consts::TAU * x)).collect();
        let av: Vec<C64> = alpha.iter().map(|&a| C64::new(a, 0.0)).collect();
        let ek = f.exterior(&k);
        let ia = f.interior(&av);
        let lie = &ek * &ia + &ia * &ek;
        let lie_adj = lie.adjoint().to_owned();
        let rhs1 = &lie + &lie_adj + &id * faer::Scale(C64::new(2.0 * ab, 0.0));
        d1 = d1.max(max_abs(&(&c1 - &rhs1)));
        d2 = d2.max(max_abs(&(&c2 - &id * faer::Scale(C64::new(aa, 0.0)))));
        for s in [0.37, -2.5, 4.0] {
            let ms = family_operator(&f, xi, beta, alpha, s);
            let pred = &m0 + &rhs1 * faer::Scale(C64::new(s, 0.0)) + &id * faer::Scale(C64::new(s * s * aa, 0.0));
            dfam = dfam.max(max_abs(&(&ms - &pred)) / (1.0 + s * s));
        }
    }
    Ok(AnticommutatorReport::Checked {
        first_order_defect: d1,
        second_order_defect: d2,
        family_defect: dfam,
        samples: xis.len(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingRow {
    pub class: Vec<f64>,
    /// `b^j = N_j(0⁺)` for `j = 0..=n`.
    pub bettis: Vec<f64>,
}

/// Evaluate all twisted Betti numbers of the multiplier model on a list of classes.
pub fn multiplier_vanishing(n: usize, classes: &[Vec<f64>]) -> Result<Vec<VanishingRow>> {
    classes
        .iter()
        .map(|c| {
            let bettis =
                (0..=n).map(|j| MultiplierModel::new(n, c.clone(), j, 1.0).map(|m| m.betti())).collect::<Result<_>>()?;
            Ok(VanishingRow { class: c.clone(), bettis })
        })
        .collect()
}
