use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Vector;

/// A finite measure on the unit sphere given by weighted atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSphericalMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn dir(&self) -> Vector {
        DVector::from_column_slice(&self.direction)
    }
}

impl DiscreteSphericalMeasure {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            atoms: Vec::new(),
        }
    }

    /// Builds a measure from (direction, weight) pairs. Directions are
    /// normalised; zero weights are dropped.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (Vector, f64)>,
    {
        let atoms = pairs
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(u, w)| {
                let u = u.normalize();
                Atom {
                    direction: u.as_slice().to_vec(),
                    weight: w,
                }
            })
            .collect();
        Self { dim, atoms }
    }

    pub fn push(&mut self, direction: &Vector, weight: f64) {
        if weight != 0.0 {
            self.atoms.push(Atom {
                direction: direction.as_slice().to_vec(),
                weight,
            });
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Barycentre of the mass distribution, Σ wᵢuᵢ.
    pub fn resultant(&self) -> Vector {
        let mut r = DVector::zeros(self.dim);
        for a in &self.atoms {
            r += a.dir() * a.weight;
        }
        r
    }

    pub fn is_centred(&self, tol: f64) -> bool {
        self.resultant().norm() <= tol * self.total_mass().abs().max(f64::MIN_POSITIVE)
    }

    /// ∫ f(u) μ(du).
    pub fn integrate<F: Fn(&Vector) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|a| f(&a.dir()) * a.weight).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    direction: a.direction.clone(),
                    weight: a.weight * s,
                })
                .collect(),
        }
    }

    /// Image under u ↦ -u.
    pub fn reflected(&self) -> Self {
        Self {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    direction: a.direction.iter().map(|x| -x).collect(),
                    weight: a.weight,
                })
                .collect(),
        }
    }

    pub fn extend(&mut self, other: &Self) {
        self.atoms.extend(other.atoms.iter().cloned());
    }

    /// Merges atoms whose directions agree to within `tol` (Euclidean).
    pub fn merged(&self, tol: f64) -> Self {
        let mut out: Vec<Atom> = Vec::new();
        'next: for a in &self.atoms {
            for b in out.iter_mut() {
                let d: f64 = a
                    .direction
                    .iter()
                    .zip(&b.direction)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                if d <= tol {
                    b.weight += a.weight;
                    continue 'next;
                }
            }
            out.push(a.clone());
        }
        Self {
            dim: self.dim,
            atoms: out,
        }
    }

    /// Total weight of atoms within angular distance `radius` of `u`.
    pub fn mass_near(&self, u: &Vector, radius: f64) -> f64 {
        let c = radius.cos();
        self.atoms
            .iter()
            .filter(|a| a.dir().dot(u) >= c)
            .map(|a| a.weight)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resultant_and_reflection() {
        let m = DiscreteSphericalMeasure::from_pairs(
            2,
            [
                (DVector::from_vec(vec![1.0, 0.0]), 2.0),
                (DVector::from_vec(vec![0.0, 3.0]), 1.0),
            ],
        );
        let r = m.resultant();
        assert_eq!(r.as_slice(), &[2.0, 1.0]);
        assert_eq!(m.reflected().resultant().as_slice(), &[-2.0, -1.0]);
        assert_eq!(m.total_mass(), 3.0);
        assert!(!m.is_centred(1e-9));
    }

    #[test]
    fn merging_collapses_duplicates() {
        let e = DVector::from_vec(vec![0.0, 1.0]);
        let m = DiscreteSphericalMeasure::from_pairs(2, [(e.clone(), 1.0), (e, 0.5)]).merged(1e-9);
        assert_eq!(m.atoms.len(), 1);
        assert_eq!(m.total_mass(), 1.5);
    }
}
