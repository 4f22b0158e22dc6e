use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::sphere::random_rotation;
use crate::geom::Polytope;

/// Law of the random rotation applied to each grain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationLaw {
    None,
    Uniform,
}

/// Law of the random factor ξ by which each grain is scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalingLaw {
    Fixed,
    /// Values with probabilities.
    Discrete { values: Vec<f64>, probabilities: Vec<f64> },
    /// ξ = exp(N(μ, σ²)), truncated above exp(μ + 6σ) so grains stay bounded.
    LogNormal { mu: f64, sigma: f64 },
}

/// Number of standard deviations at which log-normal factors are truncated.
pub const LOGNORMAL_TRUNCATION: f64 = 6.0;

impl ScalingLaw {
    fn validate(&self) -> Result<()> {
        match self {
            ScalingLaw::Fixed => Ok(()),
            ScalingLaw::Discrete {
                values,
                probabilities,
            } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return Err(Error::InvalidModel(
                        "discrete scaling needs matching values and probabilities".into(),
                    ));
                }
                if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidModel("scaling values must be positive".into()));
                }
                check_probabilities(probabilities)
            }
            ScalingLaw::LogNormal { mu, sigma } => {
                if !mu.is_finite() || !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidModel("log-normal needs finite μ and σ ≥ 0".into()));
                }
                Ok(())
            }
        }
    }

    /// E[ξ^m].
    pub fn moment(&self, m: usize) -> f64 {
        match self {
            ScalingLaw::Fixed => 1.0,
            ScalingLaw::Discrete {
                values,
                probabilities,
            } => values
                .iter()
                .zip(probabilities)
                .map(|(v, p)| p * v.powi(m as i32))
                .sum(),
            ScalingLaw::LogNormal { mu, sigma } => {
                let m = m as f64;
                (m * mu + 0.5 * m * m * sigma * sigma).exp()
            }
        }
    }

    pub fn max_factor(&self) -> f64 {
        match self {
            ScalingLaw::Fixed => 1.0,
            ScalingLaw::Discrete { values, .. } => values.iter().copied().fold(0.0, f64::max),
            ScalingLaw::LogNormal { mu, sigma } => (mu + LOGNORMAL_TRUNCATION * sigma).exp(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalingLaw::Fixed => 1.0,
            ScalingLaw::Discrete {
                values,
                probabilities,
            } => values[pick(probabilities, rng)],
            ScalingLaw::LogNormal { mu, sigma } => {
                if *sigma == 0.0 {
                    return mu.exp();
                }
                let law = LogNormal::new(*mu, *sigma).expect("validated parameters");
                let cap = self.max_factor();
                loop {
                    let x = law.sample(rng);
                    if x <= cap {
                        return x;
                    }
                }
            }
        }
    }
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidModel("probabilities must be nonnegative".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidModel(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

fn pick<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Intensity γ together with the law of the typical grain.
#[derive(Debug, Clone, PartialEq)]
pub struct GrainModel {
    dim: usize,
    shapes: Vec<Polytope>,
    probabilities: Vec<f64>,
    rotation: RotationLaw,
    scaling: ScalingLaw,
    gamma: f64,
}

impl GrainModel {
    /// Shapes are translated so that their Steiner points sit at the origin.
    pub fn new(
        shapes: Vec<(Polytope, f64)>,
        rotation: RotationLaw,
        scaling: ScalingLaw,
        gamma: f64,
    ) -> Result<Self> {
        let Some(first) = shapes.first() else {
            return Err(Error::InvalidModel("no grain shapes".into()));
        };
        let dim = first.0.dim();
        if shapes.iter().any(|(p, _)| p.dim() != dim) {
            return Err(Error::InvalidModel("grain shapes differ in dimension".into()));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!("intensity {gamma} must be ≥ 0")));
        }
        if rotation == RotationLaw::Uniform && dim == 4 {
            return Err(Error::InvalidModel(
                "uniform rotations are available for d = 2, 3 only".into(),
            ));
        }
        let probabilities: Vec<f64> = shapes.iter().map(|(_, p)| *p).collect();
        check_probabilities(&probabilities)?;
        scaling.validate()?;
        let shapes = shapes
            .into_iter()
            .map(|(p, _)| {
                let s = p.steiner_point();
                p.translate(&(-s))
            })
            .collect();
        Ok(Self {
            dim,
            shapes,
            probabilities,
            rotation,
            scaling,
            gamma,
        })
    }

    /// One shape, no rotation, no scaling.
    pub fn deterministic(shape: Polytope, gamma: f64) -> Result<Self> {
        Self::new(vec![(shape, 1.0)], RotationLaw::None, ScalingLaw::Fixed, gamma)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!("intensity {gamma} must be ≥ 0")));
        }
        Ok(Self {
            gamma,
            ..self.clone()
        })
    }

    /// Centred base shapes with their probabilities.
    pub fn shapes(&self) -> impl Iterator<Item = (&Polytope, f64)> {
        self.shapes.iter().zip(self.probabilities.iter().copied())
    }

    pub fn rotation(&self) -> RotationLaw {
        self.rotation
    }

    pub fn scaling(&self) -> &ScalingLaw {
        &self.scaling
    }

    /// Largest distance from the origin to a point of any possible grain.
    pub fn max_radius(&self) -> f64 {
        let origin = nalgebra::DVector::zeros(self.dim);
        self.shapes
            .iter()
            .map(|s| s.radius_about(&origin))
            .fold(0.0, f64::max)
            * self.scaling.max_factor()
    }

    /// Whether every possible grain is an axis-aligned box.
    pub fn all_boxes(&self) -> bool {
        self.rotation == RotationLaw::None && self.shapes.iter().all(|s| s.as_axis_box().is_some())
    }

    /// Draws a grain from the typical-grain law.
    pub fn sample_grain<R: Rng + ?Sized>(&self, rng: &mut R) -> Polytope {
        let shape = &self.shapes[pick(&self.probabilities, rng)];
        let rotated = match self.rotation {
            RotationLaw::None => shape.clone(),
            RotationLaw::Uniform => shape.rotate(&random_rotation(self.dim, rng)),
        };
        match self.scaling {
            ScalingLaw::Fixed => rotated,
            _ => rotated.scale(self.scaling.sample(rng)),
        }
    }
}
