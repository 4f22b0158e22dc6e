//! Window estimators of the densities of the union set, averaged over
//! independent replications.

use rayon::prelude::*;

use super::exposed::{exposed_boundary_measure, DEFAULT_FACET_POINTS};
use super::model::GrainModel;
use super::realization::{sample_realization, Window};
use super::table::{mean_and_stderr, DensityTable};
use super::union::{visit_intersections, DEFAULT_SUBSET_BUDGET};
use crate::error::{Error, Result};
use crate::geom::{DiscreteSphericalMeasure, Polytope};

#[derive(Debug, Clone)]
pub struct EstimatorSettings {
    pub reps: usize,
    pub seed: u64,
    pub subset_budget: u64,
    pub facet_points: usize,
    /// Whether to estimate the exposed-boundary densities (skipped in ℝ⁴
    /// unless requested).
    pub boundary: bool,
}

impl EstimatorSettings {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            reps,
            seed,
            subset_budget: DEFAULT_SUBSET_BUDGET,
            facet_points: DEFAULT_FACET_POINTS,
            boundary: true,
        }
    }
}

/// A named test body, moved so that its Steiner point is the origin.
#[derive(Debug, Clone)]
pub struct TestBody {
    pub id: String,
    pub body: Polytope,
}

impl TestBody {
    pub fn new(id: impl Into<String>, body: &Polytope) -> Self {
        let s = body.steiner_point();
        Self {
            id: id.into(),
            body: body.translate(&-s),
        }
    }
}

struct Layout {
    d: usize,
    boundary: bool,
    tests: usize,
}

impl Layout {
    /// Quantity id and test body index of each per-replication value.
    fn rows(&self) -> Vec<(String, Option<usize>)> {
        let d = self.d;
        let mut rows = vec![(format!("Z:V{d}"), None), ("Z:V0".to_string(), None)];
        if self.boundary {
            rows.push((format!("Z:V{}", d - 1), None));
            for t in 0..self.tests {
                rows.push((format!("Z:VK{}", d - 1), Some(t)));
            }
        }
        if d == 3 {
            for t in 0..self.tests {
                rows.push(("Z:VK1".to_string(), Some(t)));
            }
        }
        rows
    }
}

/// Per-replication estimates in the order of [`Layout::rows`].
fn replicate(
    model: &GrainModel,
    window: &Window,
    tests: &[TestBody],
    top_measures: &[DiscreteSphericalMeasure],
    layout: &Layout,
    settings: &EstimatorSettings,
    rep: usize,
) -> Result<Vec<f64>> {
    let d = layout.d;
    let real = sample_realization(model, window, settings.seed, rep as u64)?;
    let vol_w = window.volume();
    let mut volume = 0.0;
    let mut chi = 0.0;
    let mut mixed1 = vec![0.0; if d == 3 { tests.len() } else { 0 }];
    visit_intersections(&real.particles, window, settings.subset_budget, |cell, size| {
        let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
        volume += sign * cell.volume_in(window);
        if window.contains(&cell.steiner_point()) {
            chi += sign;
            for (acc, m) in mixed1.iter_mut().zip(top_measures) {
                // V(N[1], K[2]) = (1/3) ∫ h(N, u) S₂(K, du)
                let v: f64 = m.atoms.iter().map(|a| cell.support(&a.direction) * a.weight).sum();
                *acc += sign * v / 3.0;
            }
        }
    })?;
    let mut out = vec![volume / vol_w, chi / vol_w];
    if layout.boundary {
        let s = exposed_boundary_measure(&real, settings.facet_points);
        out.push(0.5 * s.total_mass());
        for t in tests {
            out.push(s.integrate(|u| t.body.support(u)) / d as f64);
        }
    }
    out.extend(mixed1.iter().map(|v| v / vol_w));
    Ok(out)
}

/// Estimates the volume fraction, the Euler characteristic density, the
/// exposed-boundary densities V̄_{d−1}(Z) and V̄(Z[d−1], K[1]) and, in ℝ³,
/// V̄(Z[1], K[2]) for every test body K.
///
/// Grains are sampled in the window dilated by the largest grain radius, so
/// every particle that meets the window is present. Contributions of
/// intersections are attributed to the window through their Steiner points.
pub fn estimate_densities(
    model: &GrainModel,
    window: &Window,
    tests: &[TestBody],
    settings: &EstimatorSettings,
) -> Result<DensityTable> {
    if settings.reps == 0 {
        return Err(Error::InvalidModel("at least one replication is required".into()));
    }
    let d = model.dim();
    let layout = Layout {
        d,
        boundary: settings.boundary,
        tests: tests.len(),
    };
    let top_measures: Vec<DiscreteSphericalMeasure> = if d == 3 {
        tests.iter().map(|t| t.body.area_measure_top()).collect()
    } else {
        Vec::new()
    };
    let per_rep: Vec<Vec<f64>> = (0..settings.reps)
        .into_par_iter()
        .map(|rep| replicate(model, window, tests, &top_measures, &layout, settings, rep))
        .collect::<Result<_>>()?;
    let mut table = DensityTable::default();
    for (k, (quantity, test)) in layout.rows().into_iter().enumerate() {
        let values: Vec<f64> = per_rep.iter().map(|v| v[k]).collect();
        let (m, se) = mean_and_stderr(&values);
        table.push(quantity, test.map(|t| tests[t].id.as_str()), m, se, settings.reps);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_gives_zero_densities() {
        let sq = Polytope::centered_box(&[1.0, 1.0]);
        let model = GrainModel::deterministic(sq.clone(), 0.0).unwrap();
        let t = vec![TestBody::new("sq", &sq)];
        let table = estimate_densities(&model, &Window::cube(2, 5.0), &t, &EstimatorSettings::new(3, 7)).unwrap();
        assert!(table.rows.iter().all(|r| r.estimate == 0.0 && r.stderr == 0.0 && r.reps == 3));
    }

    #[test]
    fn deterministic_given_seed() {
        let sq = Polytope::centered_box(&[1.0, 1.0]);
        let model = GrainModel::deterministic(sq.clone(), 0.5).unwrap();
        let t = vec![TestBody::new("sq", &sq)];
        let s = EstimatorSettings::new(4, 11);
        let a = estimate_densities(&model, &Window::cube(2, 6.0), &t, &s).unwrap();
        let b = estimate_densities(&model, &Window::cube(2, 6.0), &t, &s).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }
}
