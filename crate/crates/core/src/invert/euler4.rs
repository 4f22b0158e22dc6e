//! The Euler characteristic density of a Boolean model of boxes in ℝ⁴,
//! predicted and simulated.

use serde::{Deserialize, Serialize};

use crate::boolsim::{estimate_densities, forward_densities, EstimatorSettings, GrainModel, Window};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Euler4Check {
    pub predicted: f64,
    pub simulated: f64,
    pub stderr: f64,
}

impl Euler4Check {
    /// |simulated − predicted| in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.simulated - self.predicted).abs() / self.stderr
    }
}

/// V̄₀(Z) predicted from the box closed forms (without the −½V̄₂,₂ term
/// when `drop_v22` is set) and estimated from `settings.reps` windows.
pub fn euler4_check(
    model: &GrainModel,
    gamma: f64,
    drop_v22: bool,
    window: &Window,
    settings: &EstimatorSettings,
) -> Result<Euler4Check> {
    if model.dim() != 4 || !model.all_boxes() {
        return Err(Error::InvalidModel("the ℝ⁴ check needs box grains in dimension 4".into()));
    }
    let model = model.with_gamma(gamma)?;
    let predicted = predict(&model, drop_v22)?;
    let mut settings = settings.clone();
    settings.boundary = false;
    let table = estimate_densities(&model, window, &[], &settings)?;
    let row = table
        .get("Z:V0", None)
        .ok_or_else(|| Error::Schema("estimator produced no Z:V0 row".into()))?;
    Ok(Euler4Check {
        predicted,
        simulated: row.estimate,
        stderr: row.stderr,
    })
}

/// The predicted χ-density alone.
pub fn predict(model: &GrainModel, drop_v22: bool) -> Result<f64> {
    let table = forward_densities(model, &[])?;
    let value = |q: &str| {
        table
            .value(q, None)
            .ok_or_else(|| Error::Schema(format!("forward table lacks {q}")))
    };
    let corrected = value("Z:V0")?;
    if !drop_v22 {
        return Ok(corrected);
    }
    let q = 1.0 - value("Z:V4")?;
    Ok(corrected + 0.5 * q * value("X:V_2_2")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polytope;

    fn hypercubes(gamma: f64) -> GrainModel {
        GrainModel::deterministic(Polytope::centered_box(&[1.0; 4]), gamma).unwrap()
    }

    #[test]
    fn dropping_the_term_shifts_by_its_value() {
        let m = hypercubes(0.4);
        let gap = predict(&m, true).unwrap() - predict(&m, false).unwrap();
        assert!((gap - (-0.4f64).exp() * 3.0 * 0.16).abs() < 1e-12);
    }

    #[test]
    fn vanishing_intensity() {
        let m = hypercubes(1.0);
        let c = euler4_check(&m, 1e-9, false, &Window::cube(4, 3.0), &EstimatorSettings::new(4, 1)).unwrap();
        assert!(c.predicted.abs() < 1e-8);
        assert!(predict(&m.with_gamma(1e-9).unwrap(), true).unwrap().abs() < 1e-8);
        assert_eq!(c.simulated, 0.0);
    }
}
