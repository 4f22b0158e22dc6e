use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::model::GrainModel;
use crate::error::{Error, Result};
use crate::geom::Polytope;

/// Axis-aligned observation window anchor + [0, edges].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub anchor: Vec<f64>,
    pub edges: Vec<f64>,
}

impl Window {
    pub fn new(anchor: Vec<f64>, edges: Vec<f64>) -> Result<Self> {
        if anchor.len() != edges.len() || edges.is_empty() {
            return Err(Error::InvalidModel("window anchor and edges differ in length".into()));
        }
        if edges.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidModel("window edges must be positive".into()));
        }
        Ok(Self { anchor, edges })
    }

    /// Cube [0, side]^d.
    pub fn cube(d: usize, side: f64) -> Self {
        Self {
            anchor: vec![0.0; d],
            edges: vec![side; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn lo(&self) -> Vec<f64> {
        self.anchor.clone()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.anchor.iter().zip(&self.edges).map(|(a, e)| a + e).collect()
    }

    pub fn volume(&self) -> f64 {
        self.edges.iter().product()
    }

    /// The window grown by `r` on every side.
    pub fn dilated(&self, r: f64) -> Self {
        Self {
            anchor: self.anchor.iter().map(|a| a - r).collect(),
            edges: self.edges.iter().map(|e| e + 2.0 * r).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.anchor
            .iter()
            .zip(&self.edges)
            .zip(x)
            .all(|((a, e), v)| *v >= *a && *v < a + e)
    }

    pub fn to_polytope(&self) -> Polytope {
        Polytope::axis_box(self.lo(), self.hi())
    }
}

/// One sample of the particle process restricted to the sampling window.
#[derive(Debug, Clone)]
pub struct Realization {
    pub particles: Vec<Polytope>,
    pub window: Window,
    /// Window dilated by the largest grain radius; every particle meeting
    /// `window` has its reference point here.
    pub sampling_window: Window,
    pub seed: u64,
    pub replication: u64,
}

/// RNG stream for replication `rep` of a run seeded with `seed`.
pub fn stream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Poisson(γ·vol) many grains with reference points uniform in the dilated
/// window.
pub fn sample_realization(model: &GrainModel, window: &Window, seed: u64, replication: u64) -> Result<Realization> {
    if model.dim() != window.dim() {
        return Err(Error::InvalidModel("model and window differ in dimension".into()));
    }
    let sampling_window = window.dilated(model.max_radius());
    let mean = model.gamma() * sampling_window.volume();
    let mut rng = stream(seed, replication);
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidModel(e.to_string()))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let d = model.dim();
    let mut particles = Vec::with_capacity(count);
    for _ in 0..count {
        let centre = DVector::from_iterator(
            d,
            (0..d).map(|c| sampling_window.anchor[c] + rng.gen::<f64>() * sampling_window.edges[c]),
        );
        let grain = model.sample_grain(&mut rng);
        particles.push(grain.translate(&centre));
    }
    Ok(Realization {
        particles,
        window: window.clone(),
        sampling_window,
        seed,
        replication,
    })
}

impl Realization {
    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// One JSON object per particle per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.particles {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let m = GrainModel::deterministic(Polytope::centered_box(&[1.0, 1.0]), 0.5).unwrap();
        let w = Window::cube(2, 10.0);
        let a = sample_realization(&m, &w, 7, 3).unwrap();
        let b = sample_realization(&m, &w, 7, 3).unwrap();
        assert_eq!(a.particles, b.particles);
        let c = sample_realization(&m, &w, 7, 4).unwrap();
        assert_ne!(a.particles, c.particles);
    }

    #[test]
    fn tiny_intensity_gives_empty_realization() {
        let m = GrainModel::deterministic(Polytope::centered_box(&[1.0, 1.0]), 1e-9).unwrap();
        let r = sample_realization(&m, &Window::cube(2, 1.0), 1, 0).unwrap();
        assert!(r.particles.is_empty());
    }

    #[test]
    fn jsonl_has_one_line_per_particle() {
        let m = GrainModel::deterministic(Polytope::centered_box(&[1.0, 1.0]), 0.5).unwrap();
        let r = sample_realization(&m, &Window::cube(2, 5.0), 2, 0).unwrap();
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.particles.len());
        for line in text.lines() {
            let p: Polytope = serde_json::from_str(line).unwrap();
            assert_eq!(p.dim(), 2);
        }
    }
}
