use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use twistlab::geometry::RESOLUTION_FLOOR;
use twistlab::linalg::{cmat_zeros, CMat, C64};
use twistlab::morse::MorseOneForm;
use twistlab::vn_core::{HilbertianModule, VNAlgebra};

pub const SCHEMA_VERSION: u32 = 1;
/// Vertex budget for torus grids.
pub const MAX_GRID_VERTICES: usize = 262_144;
/// Surface resolution budget.
pub const MAX_SURFACE_N: usize = 64;
/// Edge budget for dense rank computations on covers.
pub const MAX_COVER_EDGES: usize = 12_000;
/// Rows of a dense spectrum.
pub const MAX_DENSE_ROWS: usize = twistlab::twisted::DENSE_SOLVE_LIMIT;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Spectrum,
    Density,
    NsFit,
    Morse,
    WittenSweep,
    Tower,
    Exact,
    Dualities,
    ReportAll,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Density => "density",
            Kind::NsFit => "ns-fit",
            Kind::Morse => "morse",
            Kind::WittenSweep => "witten-sweep",
            Kind::Tower => "tower",
            Kind::Exact => "exact",
            Kind::Dualities => "dualities",
            Kind::ReportAll => "report-all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Model {
    Torus {
        resolution: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lengths: Option<Vec<f64>>,
    },
    Surface {
        genus: usize,
        n: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        covers: Vec<usize>,
    },
    Multiplier {
        n: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Fiber {
    #[default]
    Scalar,
    /// `ℂᵐ` with the trivial action.
    Free { multiplicity: usize },
    /// `M_d(ℂ)` cut down by a rank-`rank` projection.
    Matrix { d: usize, rank: usize },
}

impl Fiber {
    pub fn module(&self) -> Result<HilbertianModule, ConfigError> {
        match *self {
            Fiber::Scalar => Ok(HilbertianModule::free(&VNAlgebra::scalars(), 1)),
            Fiber::Free { multiplicity } if multiplicity >= 1 => {
                Ok(HilbertianModule::free(&VNAlgebra::scalars(), multiplicity))
            }
            Fiber::Matrix { d, rank } if d >= 1 && (1..=d).contains(&rank) => {
                let alg = VNAlgebra::matrix(d);
                HilbertianModule::with_projection(&alg, 1, vec![diagonal_projection(d, rank)])
                    .map_err(|e| ConfigError(e.to_string()))
            }
            _ => bad(format!("invalid fiber {self:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Named(String),
    Inline(MorseOneForm),
}

impl FormSpec {
    pub fn resolve(&self) -> Result<MorseOneForm, ConfigError> {
        match self {
            FormSpec::Named(name) => MorseOneForm::bundled(name).map_err(|e| ConfigError(e.to_string())),
            FormSpec::Inline(f) => f.validate().map(|_| f.clone()).map_err(|e| ConfigError(e.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub s0: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Sample points for density output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Fit window `[λ_min, λ_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// `direct`, `bloch` or `symbol` for torus densities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outdir")]
    pub outdir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    /// Covector (torus, multiplier) or harmonic class coordinates (surface).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<Vec<f64>>,
    #[serde(default)]
    pub fiber: Fiber,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub params: Params,
}

fn default_outdir() -> PathBuf {
    PathBuf::from("twistlab-out")
}

fn diagonal_projection(d: usize, rank: usize) -> CMat {
    let mut p = cmat_zeros(d, d);
    for i in 0..rank {
        p[(i, i)] = C64::new(1.0, 0.0);
    }
    p
}

pub const SUITES: [&str; 4] = ["circle", "torus", "genus2", "inequalities"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError(format!("schema violation: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sorted-key serialization with the output directory blanked, so the
    /// artifact name depends only on what is computed.
    pub fn canonical(&self) -> String {
        let mut cfg = self.clone();
        cfg.outdir = PathBuf::new();
        let value = serde_json::to_value(&cfg).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    fn model_dim(&self) -> Option<usize> {
        match self.model.as_ref()? {
            Model::Torus { resolution, .. } => Some(resolution.len()),
            Model::Surface { .. } => Some(2),
            Model::Multiplier { n } => Some(*n),
        }
    }

    fn require_model(&self, allowed: &[&str]) -> Result<&Model, ConfigError> {
        let Some(m) = &self.model else {
            return bad(format!("kind {} needs a model", self.kind.name()));
        };
        let name = match m {
            Model::Torus { .. } => "torus",
            Model::Surface { .. } => "surface",
            Model::Multiplier { .. } => "multiplier",
        };
        if !allowed.contains(&name) {
            return bad(format!("kind {} does not accept a {name} model", self.kind.name()));
        }
        Ok(m)
    }

    fn require_degree(&self) -> Result<usize, ConfigError> {
        let Some(j) = self.params.degree else {
            return bad(format!("kind {} needs params.degree", self.kind.name()));
        };
        if j > self.model_dim().unwrap_or(0) {
            return bad(format!("degree {j} exceeds the model dimension"));
        }
        Ok(j)
    }

    fn require_twist(&self) -> Result<&[f64], ConfigError> {
        let Some(t) = &self.twist else {
            return bad(format!("kind {} needs a twist", self.kind.name()));
        };
        let want = match self.model.as_ref() {
            Some(Model::Surface { genus, .. }) => 2 * genus,
            _ => self.model_dim().unwrap_or(0),
        };
        if t.len() != want {
            return bad(format!("twist has {} components, model expects {want}", t.len()));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return bad("twist has non-finite components");
        }
        Ok(t)
    }

    fn check_model_limits(&self) -> Result<(), ConfigError> {
        match &self.model {
            Some(Model::Torus { resolution, lengths }) => {
                if !(1..=2).contains(&resolution.len()) {
                    return bad("torus grids are 1- or 2-dimensional");
                }
                if let Some(&r) = resolution.iter().find(|&&r| r < RESOLUTION_FLOOR) {
                    return bad(format!("resolution {r} below the accuracy floor {RESOLUTION_FLOOR}"));
                }
                let verts: usize = resolution.iter().product();
                if verts > MAX_GRID_VERTICES {
                    return bad(format!("solver size limit: {verts} vertices > {MAX_GRID_VERTICES}"));
                }
                if let Some(l) = lengths {
                    if l.len() != resolution.len() || l.iter().any(|x| !(*x > 0.0)) {
                        return bad("lengths must be positive, one per axis");
                    }
                }
            }
            Some(Model::Surface { genus, n, covers }) => {
                if *genus == 0 {
                    return bad("genus must be at least 1");
                }
                if *n > MAX_SURFACE_N {
                    return bad(format!("solver size limit: surface resolution {n} > {MAX_SURFACE_N}"));
                }
                let edges = 2 * 3 * n * n;
                if let Some(&k) = covers.iter().find(|&&k| k == 0 || k * edges > MAX_COVER_EDGES) {
                    return bad(format!(
                        "solver size limit: {k}-sheeted cover has {} edges > {MAX_COVER_EDGES}",
                        k * edges
                    ));
                }
            }
            Some(Model::Multiplier { n }) => {
                if !(1..=3).contains(n) {
                    return bad("multiplier models exist in dimensions 1..=3");
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema));
        }
        self.check_model_limits()?;
        self.fiber.module()?;
        match self.kind {
            Kind::Spectrum => {
                self.require_model(&["torus", "surface"])?;
                self.require_degree()?;
                self.require_twist()?;
            }
            Kind::Density => {
                self.require_model(&["torus", "surface", "multiplier"])?;
                self.require_degree()?;
                self.require_twist()?;
                self.require_lambdas()?;
                if let Some(m) = &self.params.method {
                    if !["direct", "bloch", "symbol"].contains(&m.as_str()) {
                        return bad(format!("unknown density method '{m}'"));
                    }
                }
            }
            Kind::NsFit => {
                self.require_model(&["torus", "multiplier"])?;
                self.require_degree()?;
                self.require_twist()?;
                if let Some([a, b]) = self.params.window {
                    if !(a > 0.0 && b > a) {
                        return bad("fit window must satisfy 0 < λ_min < λ_max");
                    }
                }
            }
            Kind::Exact => {
                self.require_model(&["multiplier"])?;
                self.require_degree()?;
                self.require_twist()?;
                self.require_lambdas()?;
            }
            Kind::Morse => {
                self.require_form()?;
            }
            Kind::WittenSweep => {
                let Model::Torus { lengths, .. } = self.require_model(&["torus"])? else { unreachable!() };
                if lengths.as_ref().is_some_and(|l| l.iter().any(|&x| x != 1.0)) {
                    return bad("Witten sweeps run on the unit torus");
                }
                let form = self.require_form()?;
                if form.cover.is_some() || Some(form.dim()) != self.model_dim() {
                    return bad("the form must live on the grid's torus");
                }
                let Some(sw) = &self.sweep else {
                    return bad("kind witten-sweep needs a sweep block");
                };
                if !(sw.s0 > 0.0) || sw.count == 0 || sw.count > 40 {
                    return bad("sweep needs s0 > 0 and 1..=40 values");
                }
                let verts: usize = self.model_dim().map_or(0, |_| match &self.model {
                    Some(Model::Torus { resolution, .. }) => resolution.iter().product(),
                    _ => 0,
                });
                if verts > MAX_DENSE_ROWS {
                    return bad(format!("solver size limit: sweeps solve densely, {verts} rows > {MAX_DENSE_ROWS}"));
                }
            }
            Kind::Tower => {
                let Model::Surface { covers, .. } = self.require_model(&["surface"])? else { unreachable!() };
                if covers.is_empty() {
                    return bad("kind tower needs model.covers");
                }
                self.require_twist()?;
            }
            Kind::Dualities => {
                let m = self.require_model(&["torus", "surface"])?;
                self.require_twist()?;
                if let Model::Torus { resolution, lengths } = m {
                    let square = resolution.windows(2).all(|w| w[0] == w[1]);
                    let unit = lengths.as_ref().is_none_or(|l| l.windows(2).all(|w| w[0] == w[1]));
                    if !(square && unit) {
                        return bad("torus duality checks need a self-dual grid (equal resolutions and lengths)");
                    }
                }
                let rows = match m {
                    Model::Torus { resolution, .. } => 2 * resolution.iter().product::<usize>(),
                    Model::Surface { genus, n, .. } => 3 * n * n * if *genus > 1 { 2 } else { 1 },
                    Model::Multiplier { .. } => 0,
                };
                if rows > MAX_DENSE_ROWS {
                    return bad(format!("solver size limit: duality checks solve densely, {rows} rows > {MAX_DENSE_ROWS}"));
                }
            }
            Kind::ReportAll => {
                let Some(s) = &self.params.suite else {
                    return bad("kind report-all needs params.suite");
                };
                if !SUITES.contains(&s.as_str()) {
                    return bad(format!("unknown suite '{s}' (expected one of {SUITES:?})"));
                }
            }
        }
        Ok(())
    }

    fn require_lambdas(&self) -> Result<&[f64], ConfigError> {
        match &self.params.lambdas {
            Some(l) if !l.is_empty() && l.iter().all(|x| x.is_finite() && *x >= 0.0) => Ok(l),
            _ => bad(format!("kind {} needs nonnegative params.lambdas", self.kind.name())),
        }
    }

    fn require_form(&self) -> Result<MorseOneForm, ConfigError> {
        match &self.params.form {
            Some(f) => f.resolve(),
            None => bad(format!("kind {} needs params.form", self.kind.name())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(outdir: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            r#"{{"schema":1,"kind":"exact","outdir":"{outdir}","model":{{"type":"multiplier","n":2}},
               "twist":[0.5,0.0],"params":{{"degree":1,"lambdas":[1.0]}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn hash_ignores_the_output_directory() {
        let (a, b) = (exact("x"), exact("y"));
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(crate::report::config_hash(&a).len(), 12);
        assert_eq!(crate::report::config_hash(&a), crate::report::config_hash(&b));
    }

    #[test]
    fn forms_parse_by_name_or_inline() {
        let named: FormSpec = serde_json::from_str(r#""torus-cos-cos""#).unwrap();
        let inline: FormSpec = serde_json::from_str(
            r#"{"periods":[0.0,0.0],"primitive":{"terms":[{"k":[1,0],"cos":1.0,"sin":0.0},{"k":[0,1],"cos":1.0,"sin":0.0}]}}"#,
        )
        .unwrap();
        let m = |f: &FormSpec| twistlab::morse::find_zeros(&f.resolve().unwrap(), 16).unwrap().morse_numbers;
        assert_eq!(m(&named), vec![1, 2, 1]);
        assert_eq!(m(&inline), vec![1, 2, 1]);
        assert!(FormSpec::Named("no-such-form".into()).resolve().is_err());
    }

    #[test]
    fn matrix_fibers_carry_fractional_dimension() {
        let m = Fiber::Matrix { d: 4, rank: 1 }.module().unwrap();
        assert!((m.dim_tau() - 0.25).abs() < 1e-12);
        assert!(Fiber::Matrix { d: 2, rank: 3 }.module().is_err());
        assert!(Fiber::Free { multiplicity: 0 }.module().is_err());
    }

    #[test]
    fn kind_specific_fields_are_required() {
        let missing_degree = r#"{"schema":1,"kind":"spectrum","model":{"type":"torus","resolution":[16]},"twist":[0.0]}"#;
        assert!(ExperimentConfig::parse(missing_degree).unwrap_err().0.contains("degree"));
        let wrong_twist = r#"{"schema":1,"kind":"tower","model":{"type":"surface","genus":2,"n":8,"covers":[1]},"twist":[0.1]}"#;
        assert!(ExperimentConfig::parse(wrong_twist).unwrap_err().0.contains("components"));
        let coarse = r#"{"schema":1,"kind":"spectrum","model":{"type":"torus","resolution":[4]},"twist":[0.0],"params":{"degree":0}}"#;
        assert!(ExperimentConfig::parse(coarse).unwrap_err().0.contains("floor"));
    }
}
