use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues this close below zero are treated as zero.
const NEG_CLAMP: f64 = 1e-10;

/// Right-continuous nondecreasing step function with trace-weighted jumps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDensity {
    /// `(λ, N(λ))` at each jump, λ strictly increasing, values cumulative.
    pub points: Vec<(f64, f64)>,
    /// Upper end of the range on which the steps are complete (∞ for a full spectrum).
    pub valid_below: f64,
}

/// `N(λ) = coeff · (λ − gap)^exponent` for `λ ≥ gap`, zero below.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: f64,
    pub gap: f64,
}

impl PowerLaw {
    pub fn eval(&self, lambda: f64) -> f64 {
        if lambda < self.gap || self.coeff == 0.0 {
            return 0.0;
        }
        let x = lambda - self.gap;
        if self.exponent == 0.0 {
            self.coeff
        } else {
            self.coeff * x.powf(self.exponent)
        }
    }

    pub fn derivative(&self, lambda: f64) -> f64 {
        if lambda <= self.gap || self.exponent == 0.0 {
            return 0.0;
        }
        self.coeff * self.exponent * (lambda - self.gap).powf(self.exponent - 1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    Steps(StepDensity),
    /// Closed form: sum of power-law pieces (e.g. one per form degree).
    ClosedForm { terms: Vec<PowerLaw> },
}

impl SpectralDensity {
    /// Build from trace-weighted eigenvalues.
    pub fn from_weighted(mut eig: Vec<(f64, f64)>) -> Self {
        Self::from_weighted_truncated(std::mem::take(&mut eig), f64::INFINITY)
    }

    pub fn from_weighted_truncated(mut eig: Vec<(f64, f64)>, valid_below: f64) -> Self {
        for e in eig.iter_mut() {
            if e.0 < 0.0 && e.0 > -NEG_CLAMP {
                e.0 = 0.0;
            }
        }
        eig.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0;
        for (l, w) in eig {
            if w == 0.0 {
                continue;
            }
            acc += w;
            match points.last_mut() {
                Some(last) if last.0 == l => last.1 = acc,
                _ => points.push((l, acc)),
            }
        }
        SpectralDensity::Steps(StepDensity { points, valid_below })
    }

    pub fn power_law(coeff: f64, exponent: f64, gap: f64) -> Self {
        SpectralDensity::ClosedForm { terms: vec![PowerLaw { coeff, exponent, gap }] }
    }

    pub fn zero() -> Self {
        SpectralDensity::Steps(StepDensity { points: Vec::new(), valid_below: f64::INFINITY })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            SpectralDensity::Steps(s) => {
                let idx = s.points.partition_point(|p| p.0 <= lambda);
                if idx == 0 {
                    0.0
                } else {
                    s.points[idx - 1].1
                }
            }
            SpectralDensity::ClosedForm { terms } => terms.iter().map(|t| t.eval(lambda)).sum(),
        }
    }

    /// Largest λ at which the density is known to be exact.
    pub fn valid_below(&self) -> f64 {
        match self {
            SpectralDensity::Steps(s) => s.valid_below,
            SpectralDensity::ClosedForm { .. } => f64::INFINITY,
        }
    }

    /// `N(+∞)` for step densities, `None` for unbounded closed forms.
    pub fn total(&self) -> Option<f64> {
        match self {
            SpectralDensity::Steps(s) => Some(s.points.last().map(|p| p.1).unwrap_or(0.0)),
            SpectralDensity::ClosedForm { terms } => {
                if terms.iter().all(|t| t.exponent == 0.0 || t.coeff == 0.0) {
                    Some(terms.iter().map(|t| t.coeff).sum())
                } else {
                    None
                }
            }
        }
    }

    /// Smallest point of increase above `floor`: first jump above it for steps,
    /// the gap edge for closed forms.
    pub fn bottom_above(&self, floor: f64) -> Option<f64> {
        match self {
            SpectralDensity::Steps(s) => s.points.iter().map(|p| p.0).find(|&l| l > floor),
            SpectralDensity::ClosedForm { terms } => terms
                .iter()
                .filter(|t| t.coeff != 0.0)
                .map(|t| t.gap.max(floor))
                .min_by(f64::total_cmp),
        }
    }

    /// Pointwise scale (e.g. a fiber dimension).
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            SpectralDensity::Steps(s) => SpectralDensity::Steps(StepDensity {
                points: s.points.iter().map(|&(l, v)| (l, v * c)).collect(),
                valid_below: s.valid_below,
            }),
            SpectralDensity::ClosedForm { terms } => SpectralDensity::ClosedForm {
                terms: terms.iter().map(|t| PowerLaw { coeff: t.coeff * c, ..*t }).collect(),
            },
        }
    }

    /// Two-column CSV `lambda,N`. Steps emit their jump points; closed forms
    /// are sampled at `samples`.
    pub fn to_csv(&self, samples: &[f64]) -> String {
        let mut out = String::from("lambda,N\n");
        match self {
            SpectralDensity::Steps(s) => {
                for &(l, v) in &s.points {
                    out.push_str(&format!("{l:.12e},{v:.12e}\n"));
                }
            }
            SpectralDensity::ClosedForm { .. } => {
                for &l in samples {
                    out.push_str(&format!("{l:.12e},{:.12e}\n", self.eval(l)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DilationReport {
    pub dominated: bool,
    /// Smallest sampled `C` with `F(λ) ≤ G(Cλ)`.
    pub constant: Option<f64>,
}

/// Geometric sample grid on `(0, λ₀]` used by [`dilation_compare`].
pub fn dilation_grid(lambda0: f64) -> Vec<f64> {
    // ratio 2^(1/8), thirty octaves down
    (0..=240).rev().map(|i| lambda0 * 2f64.powf(-(i as f64) / 8.0)).collect()
}

/// Decide `F ≼ G` on a sampled grid of `(0, λ₀)`: the smallest
/// `C ∈ {1, 2, 4, …, 2²⁰}` with `F(λ) ≤ G(Cλ)` at every sample.
pub fn dilation_compare(f: &SpectralDensity, g: &SpectralDensity, lambda0: f64) -> Result<DilationReport> {
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::InvalidInput("empty sample range for dilation comparison".into()));
    }
    if f.valid_below() < lambda0 {
        return Err(Error::InvalidInput(format!(
            "F is only known below {} < {lambda0}",
            f.valid_below()
        )));
    }
    let grid = dilation_grid(lambda0);
    let fv: Vec<f64> = grid.iter().map(|&l| f.eval(l)).collect();
    let scale = fv.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for e in 0..=20 {
        let c = 2f64.powi(e);
        if g.valid_below() < c * lambda0 {
            break;
        }
        let ok = grid.iter().zip(&fv).all(|(&l, &fl)| fl <= g.eval(c * l) + 1e-12 * scale);
        if ok {
            return Ok(DilationReport { dominated: true, constant: Some(c) });
        }
    }
    Ok(DilationReport { dominated: false, constant: None })
}

/// Both directions; returns the larger constant when equivalent.
pub fn dilation_equivalent(f: &SpectralDensity, g: &SpectralDensity, lambda0: f64) -> Result<Option<f64>> {
    let a = dilation_compare(f, g, lambda0)?;
    let b = dilation_compare(g, f, lambda0)?;
    Ok(match (a.constant, b.constant) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steps_of(f: impl Fn(f64) -> f64, lambda0: f64) -> SpectralDensity {
        // jumps on the same 2^(1/8) lattice as the comparison grid, extended upward
        let mut pts = Vec::new();
        let mut prev = 0.0;
        for i in (-40..=400).rev() {
            let l = lambda0 * 2f64.powf(-(i as f64) / 8.0);
            let v = f(l);
            pts.push((l, v - prev));
            prev = v;
        }
        SpectralDensity::from_weighted(pts)
    }

    #[test]
    fn reflexive_with_unit_constant() {
        let f = SpectralDensity::power_law(1.0 / std::f64::consts::PI, 0.5, 0.0);
        let r = dilation_compare(&f, &f, 1.0).unwrap();
        assert_eq!(r, DilationReport { dominated: true, constant: Some(1.0) });
    }

    #[test]
    fn analytic_dilation_by_four() {
        let f = steps_of(|l| l.sqrt(), 1.0);
        let g = steps_of(|l| (l / 4.0).sqrt(), 1.0);
        let r = dilation_compare(&f, &g, 1.0).unwrap();
        assert_eq!(r.constant, Some(4.0));
        let back = dilation_compare(&g, &f, 1.0).unwrap();
        assert_eq!(back.constant, Some(1.0));
    }

    #[test]
    fn atom_at_zero_not_dominated_by_gapped() {
        let f = SpectralDensity::from_weighted(vec![(0.0, 1.0), (1.0, 1.0)]);
        let g = SpectralDensity::power_law(1.0, 1.0, 0.5);
        let r = dilation_compare(&f, &g, 1e-3).unwrap();
        assert!(!r.dominated);
        assert!(dilation_compare(&f, &g, 0.0).is_err());
    }

    #[test]
    fn transitive_on_grid() {
        let a = SpectralDensity::power_law(1.0, 1.0, 0.0);
        let b = SpectralDensity::power_law(0.5, 1.0, 0.0);
        let c = SpectralDensity::power_law(0.25, 1.0, 0.0);
        let ab = dilation_compare(&a, &b, 1.0).unwrap().constant.unwrap();
        let bc = dilation_compare(&b, &c, 1.0).unwrap().constant.unwrap();
        let ac = dilation_compare(&a, &c, 1.0).unwrap().constant.unwrap();
        assert!(ac <= ab * bc);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let d = SpectralDensity::from_weighted(vec![(0.0, 1.0), (3.0, 1.0)]);
        let csv = d.to_csv(&[]);
        assert!(csv.starts_with("lambda,N\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
