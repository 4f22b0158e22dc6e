//! Densities of an isotropic Boolean model from those of its particle
//! process and back.

use crate::error::{Error, Result};
use crate::geom::sphere::kappa;
use crate::translative::mix;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// c_j^m = m!κ_m / (j!κ_j).
pub fn c(j: usize, m: usize) -> f64 {
    factorial(m) * kappa(m) / (factorial(j) * kappa(j))
}

/// Σ over mix(j, k), k ≥ 2, of (−1)^{k−1}/k! · c_j^d · Π c_d^{mᵢ} V̄_{mᵢ}.
/// Only entries above j occur, so the sum is known once V̄_{j+1..d−1} are.
fn higher_terms(j: usize, vbar_x: &[f64]) -> f64 {
    let d = vbar_x.len() - 1;
    let mut total = 0.0;
    // entries are at most d − 1, so (k−1)d + j ≤ k(d−1), i.e. k ≤ d − j
    for k in 2..=d.saturating_sub(j) {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        for m in mix(j, k, d) {
            let prod: f64 = m.entries().iter().map(|&mi| c(d, mi) * vbar_x[mi]).product();
            total += sign / factorial(k) * c(j, d) * prod;
        }
    }
    total
}

/// V̄_j(Z), j = 0..d, of an isotropic Boolean model with particle densities
/// V̄_j(X).
pub fn milesdavy_forward(vbar_x: &[f64]) -> Vec<f64> {
    let d = vbar_x.len() - 1;
    let q = (-vbar_x[d]).exp();
    (0..=d)
        .map(|j| {
            if j == d {
                1.0 - q
            } else {
                q * (vbar_x[j] + higher_terms(j, vbar_x))
            }
        })
        .collect()
}

/// Inverse of [`milesdavy_forward`], solved from j = d down to j = 0; the
/// last entry of the result is V̄₀(X) = γ.
pub fn milesdavy_invert(vbar_z: &[f64]) -> Result<Vec<f64>> {
    let d = vbar_z.len() - 1;
    let vd = vbar_z[d];
    if !(0.0..1.0).contains(&vd) {
        return Err(Error::InfeasibleDensity(vd));
    }
    let mut x = vec![0.0; d + 1];
    x[d] = -(1.0 - vd).ln();
    let inv_q = x[d].exp();
    for j in (0..d).rev() {
        x[j] = vbar_z[j] * inv_q - higher_terms(j, &x);
    }
    Ok(x)
}
