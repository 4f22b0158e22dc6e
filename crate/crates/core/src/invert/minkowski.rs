//! Polytopes with prescribed facet normals and facet contents.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{DiscreteSphericalMeasure, Polytope, Vector};

const MAX_NEWTON_STEPS: usize = 200;
const STATIONARITY_TOL: f64 = 1e-10;

/// Centred atoms with their directions merged and normalised.
fn prepare(target: &DiscreteSphericalMeasure) -> Result<(Vec<Vector>, Vec<f64>)> {
    let d = target.dim;
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!("Minkowski problem in dimension {d}")));
    }
    if target.atoms.iter().any(|a| !(a.weight >= 0.0 && a.weight.is_finite())) {
        return Err(Error::InfeasibleMeasure("negative or non-finite weight".into()));
    }
    let m = target.merged(1e-12);
    let atoms: Vec<_> = m.atoms.iter().filter(|a| a.weight > 0.0).collect();
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    if atoms.is_empty() || total <= 0.0 {
        return Err(Error::DegenerateMeasure("zero measure".into()));
    }
    let r = m.resultant().norm();
    if r > 1e-8 * total {
        return Err(Error::InfeasibleMeasure(format!(
            "resultant {r:.3e} exceeds 1e-8 of the total mass {total:.3e}"
        )));
    }
    let u: Vec<Vector> = atoms.iter().map(|a| a.dir().normalize()).collect();
    let mat = DMatrix::from_fn(d, u.len(), |i, j| u[j][i]);
    let sv = mat.svd(false, false).singular_values;
    if sv.min() <= 1e-9 * sv.max() {
        return Err(Error::DegenerateMeasure("atoms lie on a great subsphere".into()));
    }
    Ok((u, atoms.iter().map(|a| a.weight).collect()))
}

/// The polytope, unique up to translation, whose facets have outer normals
/// uᵢ and contents wᵢ for the atoms (uᵢ, wᵢ) of `target`. The result has its
/// Steiner point at the origin.
pub fn minkowski_solve(target: &DiscreteSphericalMeasure) -> Result<Polytope> {
    let (u, w) = prepare(target)?;
    let p = if target.dim == 2 { polygon(&u, &w)? } else { solid(&u, &w, vec![1.0; u.len()])? };
    let s = p.steiner_point();
    Ok(p.translate(&-s))
}

fn polygon(u: &[Vector], w: &[f64]) -> Result<Polytope> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a][1].atan2(u[a][0]).total_cmp(&u[b][1].atan2(u[b][0])));
    let mut pts = Vec::with_capacity(u.len());
    let mut cur = DVector::zeros(2);
    for &i in &order {
        pts.push(cur.clone());
        // the edge with outer normal u runs along u turned by +90°
        cur += DVector::from_vec(vec![-u[i][1], u[i][0]]) * w[i];
    }
    Polytope::from_points(2, pts)
}

/// Facet areas of P(h) indexed like `u`, and the Hessian of the volume.
struct Evaluation {
    volume: f64,
    areas: DVector<f64>,
    hessian: DMatrix<f64>,
    centroid: Vector,
}

fn evaluate(u: &[Vector], h: &[f64]) -> Option<Evaluation> {
    let p = Polytope::from_halfspaces(u, h).ok()?;
    if !p.is_full_dimensional() {
        return None;
    }
    let n = u.len();
    let owner: Vec<usize> = p
        .facets()
        .iter()
        .map(|f| {
            (0..n)
                .max_by(|&a, &b| u[a].dot(&f.normal).total_cmp(&u[b].dot(&f.normal)))
                .unwrap()
        })
        .collect();
    let mut areas = DVector::zeros(n);
    for (f, &i) in p.facets().iter().zip(&owner) {
        areas[i] += f.area;
    }
    let mut hessian = DMatrix::zeros(n, n);
    for (f, g, len) in p.facet_adjacency() {
        let (i, j) = (owner[f], owner[g]);
        if i == j {
            continue;
        }
        let cos = u[i].dot(&u[j]);
        let sin = u[i].cross(&u[j]).norm();
        hessian[(i, j)] += len / sin;
        hessian[(j, i)] += len / sin;
        hessian[(i, i)] -= len * cos / sin;
        hessian[(j, j)] -= len * cos / sin;
    }
    let nv = p.vertices().len() as f64;
    let centroid = p.vertices().iter().fold(DVector::zeros(3), |a, v| a + v) / nv;
    Some(Evaluation {
        volume: p.volume(),
        areas,
        hessian,
        centroid,
    })
}

fn stationarity(e: &Evaluation, w: &DVector<f64>) -> f64 {
    let total = e.areas.sum();
    (&e.areas / total - w).amax()
}

/// Pulls every halfspace whose facet is empty into the body until all
/// facets have positive area.
fn activate(u: &[Vector], h: &mut [f64]) -> Result<Evaluation> {
    for _ in 0..100 {
        let e = evaluate(u, h).ok_or_else(|| Error::DegenerateMeasure("initial body is degenerate".into()))?;
        for (i, hi) in h.iter_mut().enumerate() {
            *hi -= e.centroid.dot(&u[i]);
        }
        if e.areas.iter().all(|&a| a > 0.0) {
            return evaluate(u, h).ok_or_else(|| Error::DegenerateMeasure("initial body is degenerate".into()));
        }
        let p = Polytope::from_halfspaces(u, h)?;
        for (i, hi) in h.iter_mut().enumerate() {
            if e.areas[i] <= 0.0 {
                *hi = 0.9 * p.support(&u[i]);
            }
        }
    }
    Err(Error::NumericConditioning {
        detail: "could not make every facet active".into(),
        ratio: f64::INFINITY,
    })
}

/// Maximises vol(P(h))^{1/3} over support numbers h with Σ wᵢhᵢ fixed; at
/// the maximiser the facet areas are proportional to the weights.
fn solid(u: &[Vector], w_in: &[f64], mut h: Vec<f64>) -> Result<Polytope> {
    let n = u.len();
    let total: f64 = w_in.iter().sum();
    let w = DVector::from_iterator(n, w_in.iter().map(|x| x / total));
    let mut e = activate(u, &mut h)?;
    for _ in 0..MAX_NEWTON_STEPS {
        if stationarity(&e, &w) < STATIONARITY_TOL {
            break;
        }
        let v = e.volume;
        let scale = v.powf(-2.0 / 3.0) / 3.0;
        let grad = &e.areas * scale;
        let hess = (&e.hessian - &e.areas * e.areas.transpose() * (2.0 / (3.0 * v))) * scale;
        let mut kkt = DMatrix::zeros(n + 1, n + 1);
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        for i in 0..n {
            kkt[(i, n)] = w[i];
            kkt[(n, i)] = w[i];
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&grad));
        let svd = kkt.svd(true, true);
        let sol = svd
            .solve(&rhs, 1e-12 * svd.singular_values.max())
            .map_err(|m| Error::NumericConditioning { detail: m.into(), ratio: f64::INFINITY })?;
        let step = sol.rows(0, n).into_owned();
        let phi = v.cbrt();
        let stat = stationarity(&e, &w);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..n).map(|i| h[i] + t * step[i]).collect();
            if trial.iter().all(|&x| x > 0.0) {
                if let Some(te) = evaluate(u, &trial) {
                    // near the optimum volume changes drown in rounding, so
                    // a drop in the residual is accepted as well
                    let better = te.volume.cbrt() >= phi * (1.0 - 1e-14) || stationarity(&te, &w) < stat;
                    if better && te.areas.iter().all(|&a| a > 0.0) {
                        accepted = Some((trial, te));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((next, ne)) = accepted else {
            break;
        };
        let stalled = t < 1e-3 && stat < 1e-8;
        // keep the origin well inside the body
        h = (0..n).map(|i| next[i] - ne.centroid.dot(&u[i])).collect();
        e = evaluate(u, &h).ok_or_else(|| Error::DegenerateMeasure("iterate became degenerate".into()))?;
        if stalled {
            break;
        }
    }
    let p = Polytope::from_halfspaces(u, &h)?;
    let areas: f64 = e.areas.sum();
    Ok(p.scale((total / areas).sqrt()))
}
