//! Run configuration files.

use std::path::{Path, PathBuf};

use boolmodel::boolsim::{EstimatorSettings, GrainModel, RotationLaw, ScalingLaw, TestBody, Window};
use boolmodel::geom::polytope::PolytopeJson;
use boolmodel::geom::Polytope;
use boolmodel::invert::{InversionSettings, Role, TestBodyFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::verify::VerifySpec;
use crate::{Failure, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub invert: InvertSpec,
    #[serde(default)]
    pub flags: FlagsSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Output directory, relative to the config file; `--out` wins.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub gamma: f64,
    pub shapes: Vec<ShapeSpec>,
    #[serde(default = "no_rotation")]
    pub rotation: RotationLaw,
    #[serde(default = "fixed_scaling")]
    pub scaling: ScalingLaw,
}

fn no_rotation() -> RotationLaw {
    RotationLaw::None
}

fn fixed_scaling() -> ScalingLaw {
    ScalingLaw::Fixed
}

/// Exactly one of `box`, `points` and `file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    /// Edge lengths of a centred axis-aligned box.
    #[serde(default, rename = "box")]
    pub edges: Option<Vec<f64>>,
    /// Points whose convex hull is the shape.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    /// JSON file `{"dim": d, "vertices": [[...], ...]}`, relative to the
    /// config file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default = "one")]
    pub probability: f64,
}

fn one() -> f64 {
    1.0
}

/// A cube `[0, side]^d` or a box with the given anchor and edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(default)]
    pub side: Option<f64>,
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
    #[serde(default)]
    pub edges: Option<Vec<f64>>,
}

/// Where the density table written by `simulate` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Window estimates over independent replications.
    #[default]
    Estimate,
    /// Closed-form densities of the model (noiseless).
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestBodies {
    /// The standard inversion family of the dimension (d = 2, 3).
    #[default]
    Family,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSpec {
    pub pipeline: Pipeline,
    pub reps: usize,
    pub subset_budget: Option<u64>,
    pub facet_points: Option<usize>,
    /// Exposed-boundary densities; defaults to on except in ℝ⁴.
    pub boundary: Option<bool>,
    pub test_bodies: TestBodies,
    /// Number of replications whose particles are dumped.
    pub dump_realizations: usize,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::Estimate,
            reps: 16,
            subset_budget: None,
            facet_points: None,
            boundary: None,
            test_bodies: TestBodies::Family,
            dump_realizations: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvertSpec {
    pub settings: InversionSettings,
    /// When set, γ̂ outside `tolerance` (relative) fails the run.
    pub expected_gamma: Option<f64>,
    pub tolerance: f64,
    /// Restricts inversion to test bodies of these roles.
    pub roles: Option<Vec<Role>>,
}

impl Default for InvertSpec {
    fn default() -> Self {
        Self {
            settings: InversionSettings::default(),
            expected_gamma: None,
            tolerance: 0.05,
            roles: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlagsSpec {
    /// Flag order; defaults to 1.
    pub j: Option<usize>,
    pub samples: usize,
    /// Mean flag measure of the grain law (true) or of its first shape.
    pub mean: bool,
}

impl Default for FlagsSpec {
    fn default() -> Self {
        Self {
            j: None,
            samples: 1000,
            mean: true,
        }
    }
}

/// A parsed config together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Outcome<Self> {
        let bytes = std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_bytes(&bytes, &path.display().to_string(), base)
    }

    /// `origin` prefixes diagnostics, which carry line and column.
    pub fn from_bytes(bytes: &[u8], origin: &str, base: PathBuf) -> Outcome<Self> {
        let config: RunConfig = serde_json::from_slice(bytes)
            .map_err(|e| Failure::Input(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        let loaded = Self {
            config,
            hash: sha256_hex(bytes),
            base,
        };
        loaded.validate().map_err(|m| Failure::Input(format!("{origin}: {m}")))?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<(), String> {
        let c = &self.config;
        if !(2..=4).contains(&c.dim) {
            return Err(format!("dim {} not in 2..=4", c.dim));
        }
        if let Some(m) = &c.model {
            for (i, s) in m.shapes.iter().enumerate() {
                let given = [s.edges.is_some(), s.points.is_some(), s.file.is_some()];
                if given.iter().filter(|&&g| g).count() != 1 {
                    return Err(format!("shape {i}: give exactly one of box, points, file"));
                }
                if let Some(f) = &s.file {
                    let p = self.base.join(f);
                    if !p.is_file() {
                        return Err(format!("shape {i}: polytope file {} does not exist", p.display()));
                    }
                }
            }
        }
        if c.estimator.reps == 0 {
            return Err("estimator.reps must be positive".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Outcome<GrainModel> {
        let c = &self.config;
        let spec = c
            .model
            .as_ref()
            .ok_or_else(|| Failure::Input("config has no model".into()))?;
        let mut shapes = Vec::with_capacity(spec.shapes.len());
        for (i, s) in spec.shapes.iter().enumerate() {
            let body = self.shape(s).map_err(|e| Failure::Input(format!("shape {i}: {e}")))?;
            if body.dim() != c.dim {
                return Err(Failure::Input(format!("shape {i} has dimension {}, config has {}", body.dim(), c.dim)));
            }
            shapes.push((body, s.probability));
        }
        Ok(GrainModel::new(shapes, spec.rotation, spec.scaling.clone(), spec.gamma)?)
    }

    fn shape(&self, s: &ShapeSpec) -> Outcome<Polytope> {
        let dim = self.config.dim;
        if let Some(e) = &s.edges {
            if e.len() != dim || e.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Failure::Input(format!("box needs {dim} positive edges")));
            }
            return Ok(Polytope::centered_box(e));
        }
        if let Some(pts) = &s.points {
            let pts = pts.iter().map(|p| nalgebra::DVector::from_vec(p.clone())).collect();
            return Ok(Polytope::from_points(dim, pts)?);
        }
        let path = self.base.join(s.file.as_ref().expect("validated"));
        let text = std::fs::read(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let json: PolytopeJson = serde_json::from_slice(&text)
            .map_err(|e| Failure::Input(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
        Ok(Polytope::try_from(json)?)
    }

    pub fn window(&self) -> Outcome<Window> {
        let d = self.config.dim;
        let spec = self
            .config
            .window
            .as_ref()
            .ok_or_else(|| Failure::Input("config has no window".into()))?;
        match (spec.side, &spec.anchor, &spec.edges) {
            (Some(side), None, None) => Ok(Window::new(vec![0.0; d], vec![side; d])?),
            (None, anchor, Some(edges)) => {
                let anchor = anchor.clone().unwrap_or_else(|| vec![0.0; d]);
                if edges.len() != d {
                    return Err(Failure::Input(format!("window needs {d} edges")));
                }
                Ok(Window::new(anchor, edges.clone())?)
            }
            _ => Err(Failure::Input("window: give either side or edges (with optional anchor)".into())),
        }
    }

    pub fn estimator(&self) -> EstimatorSettings {
        let e = &self.config.estimator;
        let mut s = EstimatorSettings::new(e.reps, self.config.seed);
        if let Some(b) = e.subset_budget {
            s.subset_budget = b;
        }
        if let Some(f) = e.facet_points {
            s.facet_points = f;
        }
        s.boundary = e.boundary.unwrap_or(self.config.dim < 4);
        s
    }

    /// The standard family for d = 2, 3 when requested.
    pub fn family(&self) -> Outcome<Option<TestBodyFamily>> {
        match (self.config.estimator.test_bodies, self.config.dim) {
            (TestBodies::Family, 2 | 3) => Ok(Some(TestBodyFamily::standard(self.config.dim)?)),
            _ => Ok(None),
        }
    }

    pub fn test_bodies(&self) -> Outcome<Vec<TestBody>> {
        Ok(self.family()?.map(|f| f.test_bodies()).unwrap_or_default())
    }

    /// Output directory: `--out` if given, else `output` from the config,
    /// else `out` next to the config.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        match (cli, &self.config.output) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.base.join(p),
            (None, None) => self.base.join("out"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Outcome<LoadedConfig> {
        LoadedConfig::from_bytes(text.as_bytes(), "cfg.json", PathBuf::new())
    }

    #[test]
    fn minimal() {
        let c = load(r#"{"dim": 2, "seed": 1, "model": {"gamma": 0.5, "shapes": [{"box": [1, 1]}]}, "window": {"side": 5}}"#).unwrap();
        assert_eq!(c.model().unwrap().gamma(), 0.5);
        assert_eq!(c.window().unwrap().volume(), 25.0);
        assert_eq!(c.estimator().reps, 16);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn unknown_field_has_a_line() {
        let Err(Failure::Input(m)) = load("{\n  \"dim\": 2,\n  \"seed\": 1,\n  \"colour\": 3\n}") else {
            panic!()
        };
        assert!(m.starts_with("cfg.json:4:"), "{m}");
        assert!(m.contains("colour"));
    }

    #[test]
    fn seed_is_mandatory() {
        let Err(Failure::Input(m)) = load(r#"{"dim": 2}"#) else { panic!() };
        assert!(m.contains("seed"));
    }

    #[test]
    fn missing_polytope_file() {
        let r = load(r#"{"dim": 3, "seed": 1, "model": {"gamma": 1, "shapes": [{"file": "nowhere.json"}]}}"#);
        assert!(matches!(r, Err(Failure::Input(m)) if m.contains("nowhere.json")));
    }

    #[test]
    fn ambiguous_shape() {
        let r = load(r#"{"dim": 2, "seed": 1, "model": {"gamma": 1, "shapes": [{"box": [1, 1], "points": [[0, 0]]}]}}"#);
        assert!(r.is_err());
    }
}
