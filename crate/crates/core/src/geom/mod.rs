//! Convex-polytope kernel.

pub mod clip;
pub mod hull;
pub mod measure;
pub mod mixed;
pub mod polytope;
pub mod sphere;

use nalgebra::DVector;

pub use measure::{Atom, DiscreteSphericalMeasure};
pub use mixed::{mixed_volume, mixed_volume_by_facets};
pub use polytope::{Facet, Polytope};

pub type Vector = DVector<f64>;

/// Convenience constructor for a vector from a slice.
pub fn vector(x: &[f64]) -> Vector {
    DVector::from_column_slice(x)
}

/// A linear subspace given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub basis: Vec<Vector>,
}

impl Subspace {
    /// Orthonormalises the given spanning vectors (Gram–Schmidt); returns
    /// `None` when they are linearly dependent to 1e-12.
    pub fn from_spanning(vectors: &[Vector]) -> Option<Self> {
        let mut basis: Vec<Vector> = Vec::with_capacity(vectors.len());
        for v in vectors {
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    w -= b * b.dot(&w);
                }
            }
            let n = w.norm();
            if n <= 1e-12 * v.norm().max(1.0) {
                return None;
            }
            basis.push(w / n);
        }
        Some(Self { basis })
    }

    pub fn full(d: usize) -> Self {
        Self {
            basis: (0..d)
                .map(|i| {
                    let mut e = DVector::zeros(d);
                    e[i] = 1.0;
                    e
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.first().map_or(0, |b| b.len())
    }

    /// Coordinates of the orthogonal projection of `x`.
    pub fn coords(&self, x: &Vector) -> Vector {
        DVector::from_iterator(self.dim(), self.basis.iter().map(|b| b.dot(x)))
    }

    /// Ambient vector with the given coordinates.
    pub fn lift(&self, c: &Vector) -> Vector {
        let mut out = DVector::zeros(self.ambient_dim());
        for (b, x) in self.basis.iter().zip(c.iter()) {
            out += b * *x;
        }
        out
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        self.basis.iter().enumerate().all(|(i, a)| {
            self.basis.iter().enumerate().all(|(j, b)| {
                let target = if i == j { 1.0 } else { 0.0 };
                (a.dot(b) - target).abs() <= tol
            })
        })
    }
}

impl Polytope {
    /// Orthogonal projection onto `u`, expressed in the frame of `u`.
    pub fn project_onto(&self, u: &Subspace) -> crate::error::Result<Polytope> {
        self.project(&u.basis)
    }
}
