//! Densities of a Boolean model computed from its intensity and grain law.

use super::estimate::TestBody;
use super::model::{GrainModel, RotationLaw};
use super::table::DensityTable;
use crate::error::{Error, Result};
use crate::geom::sphere::kappa;
use crate::geom::Polytope;
use crate::invert::milesdavy_forward;
use crate::translative::{angle_integral_3d, mix, mixed_functional_boxes, mixed_functional_pair, BoxSpec, MixedIndex};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// V_{m₁,…,m_k}(K₁, …, K_k) for the cases with a closed form: boxes,
/// single bodies, pairs, the (2,2,2) case in ℝ³, and any index with entries
/// equal to d (those slots contribute their volume as a factor).
pub fn mixed_functional(entries: &[usize], bodies: &[&Polytope]) -> Result<f64> {
    let d = bodies[0].dim();
    let k = entries.len();
    let total: usize = entries.iter().sum();
    if total < (k - 1) * d {
        return Err(Error::InvalidIndex {
            entries: entries.to_vec(),
            dim: d,
            reason: "entries sum below (k−1)d".into(),
        });
    }
    let j = total - (k - 1) * d;
    if k > 1 {
        if let Some(boxes) = bodies.iter().map(|b| BoxSpec::of(b)).collect::<Option<Vec<_>>>() {
            if boxes.iter().all(|b| b.edges.iter().all(|&e| e > 0.0)) {
                let m = MixedIndex::new(entries.to_vec(), j, d)?;
                return mixed_functional_boxes(&m, &boxes);
            }
        }
        if let Some(i) = entries.iter().position(|&m| m == d) {
            let mut e = entries.to_vec();
            let mut b = bodies.to_vec();
            e.remove(i);
            let body = b.remove(i);
            return Ok(body.volume() * mixed_functional(&e, &b)?);
        }
    }
    match (k, j) {
        (1, _) => Ok(bodies[0].intrinsic_volumes()?[entries[0]]),
        (2, 0) => mixed_functional_pair(entries[0], bodies[0], bodies[1]),
        (3, 0) if d == 3 && entries == [2, 2, 2] => {
            let s: Vec<_> = bodies.iter().map(|b| b.area_measure_top()).collect();
            Ok(angle_integral_3d(&s[0], &s[1], &s[2]))
        }
        _ => Err(Error::Unsupported(format!(
            "no closed form for the mixed functional with index {entries:?} in dimension {d}"
        ))),
    }
}

/// Expectation of γ^k·V_𝐦(X, …, X, extra) over independent grains from the
/// grain law (no rotations). Slot i carries the scaling moment E[ξ^{mᵢ}].
fn mean_functional(model: &GrainModel, entries: &[usize], extra: Option<&Polytope>) -> Result<f64> {
    let shapes: Vec<(&Polytope, f64)> = model.shapes().collect();
    let k = entries.len() - extra.is_some() as usize;
    let mut total = 0.0;
    let mut idx = vec![0usize; k];
    loop {
        let mut bodies: Vec<&Polytope> = idx.iter().map(|&i| shapes[i].0).collect();
        let prob: f64 = idx.iter().map(|&i| shapes[i].1).product();
        if let Some(e) = extra {
            bodies.push(e);
        }
        if prob > 0.0 {
            total += prob * mixed_functional(entries, &bodies)?;
        }
        let mut pos = 0;
        while pos < k {
            idx[pos] += 1;
            if idx[pos] < shapes.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    let moments: f64 = entries[..k].iter().map(|&m| model.scaling().moment(m)).product();
    Ok(model.gamma().powi(k as i32) * moments * total)
}

fn index_id(entries: &[usize]) -> String {
    let parts: Vec<String> = entries.iter().map(|m| m.to_string()).collect();
    format!("X:V_{}", parts.join("_"))
}

/// Intrinsic volume densities V̄_j(X), j = 0..d.
pub fn intrinsic_densities(model: &GrainModel) -> Result<Vec<f64>> {
    let d = model.dim();
    let mut v = vec![0.0; d + 1];
    for (shape, p) in model.shapes() {
        let iv = shape.intrinsic_volumes()?;
        for j in 0..=d {
            v[j] += p * iv[j];
        }
    }
    Ok((0..=d)
        .map(|j| model.gamma() * model.scaling().moment(j) * v[j])
        .collect())
}

/// E over a uniform rotation ρ of V(ρK[j], M[d−j]) divided by
/// V_j(K)V_{d−j}(M).
pub fn rotation_mean_factor(d: usize, j: usize) -> f64 {
    kappa(j) * kappa(d - j) / (binomial(d, j).powi(2) * kappa(d))
}

/// Right-hand sides of the density formulas for the union set and the
/// underlying particle densities.
///
/// With uniform rotations the intrinsic volume densities of the union follow
/// from those of the particles, and mixed volumes with a test body K factor
/// through the rotation mean. Without rotations the mixed functionals of the
/// particle process are exact expectations over tuples of grains and the
/// union densities V̄(Z[j], K[d−j]) and V̄₀(Z) come from the translative
/// system.
pub fn forward_densities(model: &GrainModel, tests: &[TestBody]) -> Result<DensityTable> {
    let d = model.dim();
    let mut t = DensityTable::default();
    let vx = intrinsic_densities(model)?;
    let q = (-vx[d]).exp();
    for (j, v) in vx.iter().enumerate() {
        t.push(format!("X:V{j}"), None, *v, 0.0, 1);
    }
    match model.rotation() {
        RotationLaw::Uniform => {
            let vz = milesdavy_forward(&vx);
            for (j, v) in vz.iter().enumerate() {
                t.push(format!("Z:V{j}"), None, *v, 0.0, 1);
            }
            for tb in tests {
                let iv = tb.body.intrinsic_volumes()?;
                for j in 1..d {
                    let f = rotation_mean_factor(d, j) * iv[d - j];
                    t.push(format!("X:VK{j}"), Some(&tb.id), f * vx[j], 0.0, 1);
                    t.push(format!("Z:VK{j}"), Some(&tb.id), f * vz[j], 0.0, 1);
                }
            }
        }
        RotationLaw::None => {
            t.push(format!("Z:V{d}"), None, 1.0 - q, 0.0, 1);
            t.push(format!("Z:V{}", d - 1), None, q * vx[d - 1], 0.0, 1);
            let mut euler = vx[0];
            for k in 2..=d {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                for m in mix(0, k, d) {
                    let v = mean_functional(model, m.entries(), None)?;
                    t.push(index_id(m.entries()), None, v, 0.0, 1);
                    euler += sign / factorial(k) * v;
                }
            }
            t.push("Z:V0", None, q * euler, 0.0, 1);
            for tb in tests {
                let reflected = tb.body.reflect();
                for j in 1..d {
                    let mut sum = 0.0;
                    for k in 1..=d - j {
                        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                        for m in mix(j, k, d) {
                            let mut e = m.entries().to_vec();
                            e.push(d - j);
                            let v = mean_functional(model, &e, Some(&reflected))?;
                            if k == 1 {
                                t.push(format!("X:VK{j}"), Some(&tb.id), v / binomial(d, j), 0.0, 1);
                            }
                            sum += sign / factorial(k) * v;
                        }
                    }
                    t.push(format!("Z:VK{j}"), Some(&tb.id), q * sum / binomial(d, j), 0.0, 1);
                }
            }
        }
    }
    Ok(t)
}
