//! Mixed volumes of polytopes.

use nalgebra::{DMatrix, DVector};

use super::Polytope;
use crate::error::{Error, Result};

/// Largest tolerated magnitude, relative to the largest genuine coefficient,
/// of a coefficient that must vanish by homogeneity.
const SPURIOUS_TOL: f64 = 1e-7;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Volume of λ₁K₁ ⊕ … ⊕ λ_kK_k.
fn combination_volume(bodies: &[&Polytope], lambdas: &[f64]) -> Result<f64> {
    let mut acc = bodies[0].scale(lambdas[0]);
    for (b, &l) in bodies.iter().zip(lambdas).skip(1) {
        acc = acc.minkowski_sum(&b.scale(l))?;
    }
    Ok(acc.volume())
}

/// V(K₁[n₁], …, K_k[n_k]) extracted from the polynomial
/// λ ↦ vol(K₁ ⊕ λ₂K₂ ⊕ … ⊕ λ_kK_k) sampled on the grid {1, …, d+1}^{k-1}.
///
/// Every coefficient with total degree above d must vanish; if one does not,
/// the extraction is reported as ill-conditioned.
pub fn mixed_volume(bodies: &[(&Polytope, usize)]) -> Result<f64> {
    let Some(first) = bodies.first() else {
        return Err(Error::InvalidPolytope("no bodies".into()));
    };
    let d = first.0.dim();
    if bodies.iter().any(|(b, _)| b.dim() != d) {
        return Err(Error::InvalidPolytope("dimension mismatch".into()));
    }
    if bodies.iter().map(|(_, n)| n).sum::<usize>() != d {
        return Err(Error::InvalidPolytope(format!(
            "multiplicities must sum to {d}"
        )));
    }
    let bodies: Vec<(&Polytope, usize)> = bodies.iter().copied().filter(|(_, n)| *n > 0).collect();
    let k = bodies.len();
    let shapes: Vec<&Polytope> = bodies.iter().map(|(b, _)| *b).collect();
    if k == 1 {
        return Ok(shapes[0].volume());
    }
    let vars = k - 1;
    let nodes = d + 1;
    let count = nodes.pow(vars as u32);
    let exponents: Vec<Vec<usize>> = (0..count)
        .map(|mut idx| {
            (0..vars)
                .map(|_| {
                    let e = idx % nodes;
                    idx /= nodes;
                    e
                })
                .collect()
        })
        .collect();
    let mut a = DMatrix::zeros(count, count);
    let mut rhs = DVector::zeros(count);
    for (row, grid) in exponents.iter().enumerate() {
        let lambdas: Vec<f64> = std::iter::once(1.0)
            .chain(grid.iter().map(|&g| (g + 1) as f64))
            .collect();
        rhs[row] = combination_volume(&shapes, &lambdas)?;
        for (col, e) in exponents.iter().enumerate() {
            a[(row, col)] = e
                .iter()
                .zip(&lambdas[1..])
                .map(|(&p, &l)| l.powi(p as i32))
                .product();
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    let ratio = sv.max() / sv.min();
    let coeffs = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericConditioning {
            detail: "singular monomial matrix".into(),
            ratio,
        })?;
    let scale = coeffs
        .iter()
        .zip(&exponents)
        .filter(|(_, e)| e.iter().sum::<usize>() <= d)
        .map(|(c, _)| c.abs())
        .fold(0.0, f64::max);
    for (c, e) in coeffs.iter().zip(&exponents) {
        if e.iter().sum::<usize>() > d && c.abs() > SPURIOUS_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericConditioning {
                detail: format!("coefficient of degree {:?} is {c:e}, expected 0", e),
                ratio,
            });
        }
    }
    let target: Vec<usize> = bodies[1..].iter().map(|(_, n)| *n).collect();
    let col = exponents.iter().position(|e| *e == target).expect("target in grid");
    let multinomial =
        factorial(d) / bodies.iter().map(|(_, n)| factorial(*n)).product::<f64>();
    Ok(coeffs[col] / multinomial)
}

/// V(K[1], M[d-1]) = (1/d) Σ_F h(K, u_F)·content(F) over the facets F of M.
/// A body M spanning a hyperplane is handled through its two-atom area
/// measure.
pub fn mixed_volume_by_facets(k: &Polytope, m: &Polytope) -> f64 {
    let d = m.dim() as f64;
    m.area_measure_top()
        .atoms
        .iter()
        .map(|a| k.support(&a.dir()) * a.weight)
        .sum::<f64>()
        / d
}
