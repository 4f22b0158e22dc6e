//! Method-of-moments recovery of γ and of the mean area measure from a
//! density table, in the plane and in space.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::family::TestBodyFamily;
use super::minkowski::minkowski_solve;
use super::nnls::nnls;
use crate::boolsim::DensityTable;
use crate::error::{Error, Result};
use crate::geom::{DiscreteSphericalMeasure, Polytope, Vector};
use crate::translative::{angle_integral_2d, angle_integral_3d, support_area_integral};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionSettings {
    /// Tikhonov weight for the mean support function, relative to the mean
    /// diagonal of the normal matrix.
    pub regularization: f64,
    /// Weight of the centring rows relative to the largest kernel entry.
    pub centring_weight: f64,
    /// Singular values below this fraction of the largest count as zero.
    pub rank_tolerance: f64,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            regularization: 1e-10,
            centring_weight: 10.0,
            rank_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSample {
    pub direction: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredModel {
    pub gamma_hat: f64,
    /// Mean area measure S̄_{d−1}(X, ·) on the direction grid.
    pub area_measure: DiscreteSphericalMeasure,
    pub blaschke_body: Option<Polytope>,
    /// Mean centred support function h̄*(X, ·) on the grid (d = 3).
    pub support_samples: Option<Vec<SupportSample>>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RecoveredModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Weights on the grid with fit diagnostics.
#[derive(Debug, Clone)]
pub struct AreaFit {
    pub measure: DiscreteSphericalMeasure,
    pub weights: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
}

fn lookup(table: &DensityTable, quantity: &str, body: Option<&str>) -> Result<f64> {
    table
        .value(quantity, body)
        .ok_or_else(|| Error::Schema(format!("density table lacks {quantity} {}", body.unwrap_or(""))))
}

/// Mean exposed-volume fraction complement q = 1 − V̄_d(Z).
fn vacancy(table: &DensityTable, d: usize) -> Result<f64> {
    let vd = lookup(table, &format!("Z:V{d}"), None)?;
    if !(0.0..1.0).contains(&vd) {
        return Err(Error::InfeasibleDensity(vd));
    }
    Ok(1.0 - vd)
}

/// Grid indices whose unit vector has a component of at least 1e-3 in the
/// span of the given null vectors.
fn unresolved(null: &[DVector<f64>], n: usize) -> Vec<usize> {
    (0..n)
        .filter(|&g| null.iter().map(|v| v[g] * v[g]).sum::<f64>().sqrt() > 1e-3)
        .collect()
}

/// Rank analysis of `m`: (nullity, condition number on the identifiable
/// part, null vectors, pseudo-inverse solution of m x = rhs).
fn rank_analysis(m: &DMatrix<f64>, rhs: &DVector<f64>, tol: f64) -> (usize, f64, Vec<DVector<f64>>, DVector<f64>) {
    let n = m.ncols();
    let svd = m.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let cut = tol * smax;
    let rank = s.iter().filter(|&&x| x > cut).count();
    let smin = s.iter().copied().filter(|&x| x > cut).fold(f64::INFINITY, f64::min);
    let vt = svd.v_t.as_ref().unwrap();
    let mut null: Vec<DVector<f64>> = (0..vt.nrows())
        .filter(|&i| s[i] <= cut)
        .map(|i| vt.row(i).transpose())
        .collect();
    // rows of Vᵀ beyond min(rows, cols) are not returned; fill the
    // complement explicitly
    if vt.nrows() < n {
        let basis = DMatrix::from_fn(n, vt.nrows(), |r, c| vt[(c, r)]);
        let proj = DMatrix::identity(n, n) - &basis * basis.transpose();
        let extra = proj.svd(true, false);
        let u = extra.u.unwrap();
        for i in 0..n {
            if extra.singular_values[i] > 0.5 {
                null.push(u.column(i).into_owned());
            }
        }
    }
    let x = svd.solve(rhs, cut).expect("both factors were computed");
    (n - rank, smax / smin, null, x)
}

/// Solves (1/d)Σ_g h(Kᵢ, u_g)·w_g = V̄(Z[d−1], Kᵢ[1])/q for nonnegative
/// grid weights w subject to Σ w_g u_g = 0.
pub fn fit_area_measure(table: &DensityTable, family: &TestBodyFamily, settings: &InversionSettings) -> Result<AreaFit> {
    let d = family.dim;
    let n = family.grid.len();
    let q = vacancy(table, d)?;
    let rows = family.members.len();
    let mut a = DMatrix::zeros(rows + d, n);
    let mut y = DVector::zeros(rows + d);
    let quantity = format!("Z:VK{}", d - 1);
    for (i, m) in family.members.iter().enumerate() {
        y[i] = lookup(table, &quantity, Some(&m.id))? / q;
        for (g, u) in family.grid.iter().enumerate() {
            a[(i, g)] = m.body.support(u) / d as f64;
        }
    }
    let c = settings.centring_weight * a.amax();
    for (g, u) in family.grid.iter().enumerate() {
        for k in 0..d {
            a[(rows + k, g)] = c * u[k];
        }
    }
    let (nullity, condition, null, partial) = rank_analysis(&a, &y, settings.rank_tolerance);
    if nullity > 0 {
        return Err(Error::IllPosed {
            missing: unresolved(&null, n),
            nullity,
            condition,
            partial: Some(partial.iter().copied().collect()),
        });
    }
    let w = nnls(&a, &y);
    let residual = (&a * &w - &y).norm() / y.norm().max(f64::MIN_POSITIVE);
    let measure = DiscreteSphericalMeasure::from_pairs(d, family.grid.iter().cloned().zip(w.iter().copied()));
    Ok(AreaFit {
        measure,
        weights: w.iter().copied().collect(),
        residual,
        condition,
    })
}

/// S̄_{d−1}(X, ·) on the grid of `family`.
pub fn recover_area_measure(table: &DensityTable, family: &TestBodyFamily) -> Result<DiscreteSphericalMeasure> {
    fit_area_measure(table, family, &InversionSettings::default()).map(|f| f.measure)
}

fn blaschke(measure: &DiscreteSphericalMeasure, diagnostics: &mut BTreeMap<String, f64>) -> Option<Polytope> {
    // weights at rounding level would only add slivers to the body
    let top = measure.atoms.iter().map(|a| a.weight).fold(0.0, f64::max);
    let mut pruned = DiscreteSphericalMeasure {
        dim: measure.dim,
        atoms: measure.atoms.iter().filter(|a| a.weight > 1e-9 * top).cloned().collect(),
    };
    // the fit is centred only up to the weight of the centring rows; remove
    // the remaining resultant r by wᵢ ↦ wᵢ(1 − uᵢᵀM⁻¹r), M = Σ wᵢuᵢuᵢᵀ
    let d = measure.dim;
    let r = pruned.resultant();
    let mut m = DMatrix::zeros(d, d);
    for a in &pruned.atoms {
        let u = a.dir();
        m += &u * u.transpose() * a.weight;
    }
    let shift = m.lu().solve(&r)?;
    for a in pruned.atoms.iter_mut() {
        a.weight *= 1.0 - a.dir().dot(&shift);
    }
    diagnostics.insert("area_resultant".into(), r.norm() / measure.total_mass());
    let body = match minkowski_solve(&pruned) {
        Ok(b) => b,
        Err(_) => return None,
    };
    let s = body.area_measure_top();
    let total = measure.total_mass();
    // mass of the Blaschke body's area measure that misses the input atoms
    let mismatch: f64 = measure
        .atoms
        .iter()
        .map(|a| {
            let got: f64 = s.atoms.iter().filter(|b| b.dir().dot(&a.dir()) > 1.0 - 1e-9).map(|b| b.weight).sum();
            (got - a.weight).abs()
        })
        .sum::<f64>()
        / total;
    diagnostics.insert("blaschke_mismatch".into(), mismatch);
    Some(body)
}

fn finish(gamma: f64, fit: AreaFit, diagnostics: &mut BTreeMap<String, f64>, q: f64) {
    diagnostics.insert("q".into(), q);
    diagnostics.insert("area_residual".into(), fit.residual);
    diagnostics.insert("area_condition".into(), fit.condition);
    diagnostics.insert("gamma".into(), gamma);
}

/// γ = V̄₀(Z)/q + ½V̄₁,₁(X, X) with V̄₁,₁ from the recovered area measure.
pub fn recover_2d(table: &DensityTable, family: &TestBodyFamily) -> Result<RecoveredModel> {
    recover_2d_with(table, family, &InversionSettings::default())
}

pub fn recover_2d_with(table: &DensityTable, family: &TestBodyFamily, settings: &InversionSettings) -> Result<RecoveredModel> {
    if family.dim != 2 {
        return Err(Error::Unsupported("recover_2d needs a planar family".into()));
    }
    let q = vacancy(table, 2)?;
    let fit = fit_area_measure(table, family, settings)?;
    let v11 = angle_integral_2d(&fit.measure, &fit.measure);
    let gamma = lookup(table, "Z:V0", None)? / q + 0.5 * v11;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("v11".into(), v11);
    let blaschke_body = blaschke(&fit.measure, &mut diagnostics);
    let area_measure = fit.measure.clone();
    finish(gamma, fit, &mut diagnostics, q);
    Ok(RecoveredModel {
        gamma_hat: gamma,
        area_measure,
        blaschke_body,
        support_samples: None,
        diagnostics,
    })
}

/// γ = V̄₀(Z)/q + V̄₁,₂(X, X) − V̄₂,₂,₂(X, X, X)/6 in ℝ³. The mean support
/// function enters through the probes' V̄(Z[1], K[2]) rows.
pub fn recover_3d(table: &DensityTable, family: &TestBodyFamily) -> Result<RecoveredModel> {
    recover_3d_with(table, family, &InversionSettings::default())
}

pub fn recover_3d_with(table: &DensityTable, family: &TestBodyFamily, settings: &InversionSettings) -> Result<RecoveredModel> {
    if family.dim != 3 {
        return Err(Error::Unsupported("recover_3d needs a spatial family".into()));
    }
    let q = vacancy(table, 3)?;
    let fit = fit_area_measure(table, family, settings)?;
    let s = &fit.measure;
    let n = family.grid.len();
    let rows = family.members.len();
    let mut b = DMatrix::zeros(rows, n);
    let mut y = DVector::zeros(rows);
    for (i, m) in family.members.iter().enumerate() {
        let sk = m.body.area_measure_top();
        for a in &sk.atoms {
            b[(i, family.nearest(&a.dir()))] += a.weight / 3.0;
        }
        let v222 = angle_integral_3d(s, s, &sk.reflected());
        y[i] = lookup(table, "Z:VK1", Some(&m.id))? / q + v222 / 6.0;
    }
    let (h, support_residual, nullity, condition) = support_fit(&b, &y, &family.grid, settings);
    let h_at = |u: &Vector| h[family.nearest(u)];
    let v12 = support_area_integral(h_at, s);
    let v222 = angle_integral_3d(s, s, s);
    let gamma = lookup(table, "Z:V0", None)? / q + v12 - v222 / 6.0;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("v12".into(), v12);
    diagnostics.insert("v222".into(), v222);
    diagnostics.insert("support_residual".into(), support_residual);
    diagnostics.insert("support_nullity".into(), nullity as f64);
    diagnostics.insert("support_condition".into(), condition);
    let blaschke_body = blaschke(s, &mut diagnostics);
    if let Some(body) = &blaschke_body {
        let sb = body.area_measure_top();
        let v222_b = angle_integral_3d(&sb, &sb, &sb);
        diagnostics.insert("v222_blaschke".into(), v222_b);
        diagnostics.insert("gamma_blaschke".into(), gamma + (v222 - v222_b) / 6.0);
    }
    let support_samples = Some(
        family
            .grid
            .iter()
            .zip(h.iter())
            .map(|(u, &value)| SupportSample {
                direction: u.as_slice().to_vec(),
                value,
            })
            .collect(),
    );
    let area_measure = fit.measure.clone();
    finish(gamma, fit, &mut diagnostics, q);
    Ok(RecoveredModel {
        gamma_hat: gamma,
        area_measure,
        blaschke_body,
        support_samples,
        diagnostics,
    })
}

/// Tikhonov-regularised least squares for grid values h with Σ h_g u_g = 0
/// (linear functions are invisible to centred probes). Returns the solution,
/// its relative residual, the nullity and the condition number of the
/// constrained system.
fn support_fit(
    b: &DMatrix<f64>,
    y: &DVector<f64>,
    grid: &[Vector],
    settings: &InversionSettings,
) -> (DVector<f64>, f64, usize, f64) {
    let n = grid.len();
    let d = grid[0].len();
    let mut c = DMatrix::zeros(d, n);
    for (g, u) in grid.iter().enumerate() {
        for k in 0..d {
            c[(k, g)] = u[k];
        }
    }
    let mut stacked = DMatrix::zeros(b.nrows() + d, n);
    stacked.view_mut((0, 0), (b.nrows(), n)).copy_from(b);
    stacked.view_mut((b.nrows(), 0), (d, n)).copy_from(&c);
    let mut rhs = DVector::zeros(b.nrows() + d);
    rhs.rows_mut(0, b.nrows()).copy_from(y);
    let (nullity, condition, _, _) = rank_analysis(&stacked, &rhs, settings.rank_tolerance);
    let normal = b.transpose() * b;
    let lambda = settings.regularization * normal.trace() / n as f64;
    let mut kkt = DMatrix::zeros(n + d, n + d);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(normal + DMatrix::identity(n, n) * lambda));
    kkt.view_mut((0, n), (n, d)).copy_from(&c.transpose());
    kkt.view_mut((n, 0), (d, n)).copy_from(&c);
    let mut r = DVector::zeros(n + d);
    r.rows_mut(0, n).copy_from(&(b.transpose() * y));
    let sol = kkt.lu().solve(&r).unwrap_or_else(|| DVector::zeros(n + d));
    let h = sol.rows(0, n).into_owned();
    let residual = (b * &h - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    (h, residual, nullity, condition)
}
