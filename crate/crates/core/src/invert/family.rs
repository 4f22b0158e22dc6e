//! Families of test bodies whose facet normals lie on a direction grid.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::boolsim::TestBody;
use crate::error::{Error, Result};
use crate::geom::sphere::{circle_grid, icosahedral_grid};
use crate::geom::{Polytope, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Segment,
    Plate,
    AsymmetricProbe,
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub id: String,
    pub role: Role,
    /// Steiner point at the origin.
    pub body: Polytope,
}

#[derive(Debug, Clone)]
pub struct TestBodyFamily {
    pub dim: usize,
    pub grid: Vec<Vector>,
    pub members: Vec<FamilyMember>,
}

fn member(id: String, role: Role, body: Polytope) -> FamilyMember {
    let s = body.steiner_point();
    FamilyMember {
        id,
        role,
        body: body.translate(&-s),
    }
}

/// A unit vector orthogonal to `u` and one completing it to a right-handed
/// frame.
fn frame(u: &Vector) -> (Vector, Vector) {
    let axis = (0..3).min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap();
    let mut a = DVector::zeros(3);
    a[axis] = 1.0;
    let e1 = (&a - u * u.dot(&a)).normalize();
    let e2 = u.cross(&e1);
    (e1, e2)
}

impl TestBodyFamily {
    /// `n` equally spaced directions, a unit segment for each of the first
    /// n/2 and one triangle per direction with that direction as the normal
    /// of its longest edge.
    pub fn planar(n: usize) -> Result<Self> {
        if n < 6 || n % 2 != 0 {
            return Err(Error::InvalidModel("planar grid needs an even number ≥ 6 of angles".into()));
        }
        let grid = circle_grid(n);
        let mut members = Vec::new();
        for (k, u) in grid.iter().take(n / 2).enumerate() {
            let t = DVector::from_vec(vec![-u[1], u[0]]) * 0.5;
            members.push(member(format!("seg{k}"), Role::Segment, Polytope::segment(-&t, t)?));
        }
        // an asymmetric pair of offsets keeps every odd Fourier mode of the
        // probe support functions away from zero
        let (a, b) = ((28 * n + 32) / 64, (37 * n + 32) / 64);
        for g in 0..n {
            let normals: Vec<Vector> = [g, g + a, g + b].iter().map(|&i| grid[i % n].clone()).collect();
            let body = Polytope::from_halfspaces(&normals, &[1.0; 3])?;
            members.push(member(format!("tri{g}"), Role::AsymmetricProbe, body));
        }
        Ok(Self { dim: 2, grid, members })
    }

    /// The icosahedral grid refined `levels` times, a unit square plate
    /// orthogonal to each antipodal pair and one tetrahedron per direction
    /// with that direction as the normal of its largest facet.
    pub fn spatial(levels: usize) -> Result<Self> {
        let grid = icosahedral_grid(levels);
        let mut members = Vec::new();
        let mut seen = vec![false; grid.len()];
        for (g, u) in grid.iter().enumerate() {
            if seen[g] {
                continue;
            }
            seen[g] = true;
            if let Some(a) = nearest(&grid, &-u) {
                seen[a] = true;
            }
            let (e1, e2) = frame(u);
            let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
                .iter()
                .map(|&(x, y)| &e1 * x + &e2 * y)
                .collect();
            let k = members.len();
            members.push(member(format!("plate{k}"), Role::Plate, Polytope::from_points(3, corners)?));
        }
        for (g, u) in grid.iter().enumerate() {
            let (e1, e2) = frame(u);
            let mut normals = vec![u.clone()];
            for i in 0..3 {
                let phi = 2.0 * PI * i as f64 / 3.0;
                let target = u * -0.5 + (&e1 * phi.cos() + &e2 * phi.sin()) * (0.75f64).sqrt();
                normals.push(grid[nearest(&grid, &target).unwrap()].clone());
            }
            let body = Polytope::from_halfspaces(&normals, &[1.0; 4])?;
            if !body.is_full_dimensional() || body.facets().len() != 4 {
                return Err(Error::DegenerateBody(format!("probe tetrahedron for grid direction {g}")));
            }
            members.push(member(format!("tet{g}"), Role::AsymmetricProbe, body));
        }
        Ok(Self { dim: 3, grid, members })
    }

    /// The default family of the dimension: 64 angles in the plane, the
    /// 162-point icosahedral grid in space.
    pub fn standard(d: usize) -> Result<Self> {
        match d {
            2 => Self::planar(64),
            3 => Self::spatial(2),
            _ => Err(Error::Unsupported(format!("test-body family in dimension {d}"))),
        }
    }

    /// The members with one of the given roles.
    pub fn restricted(&self, roles: &[Role]) -> Self {
        Self {
            dim: self.dim,
            grid: self.grid.clone(),
            members: self.members.iter().filter(|m| roles.contains(&m.role)).cloned().collect(),
        }
    }

    pub fn test_bodies(&self) -> Vec<TestBody> {
        self.members.iter().map(|m| TestBody::new(m.id.clone(), &m.body)).collect()
    }

    /// Index of the grid direction closest to `u`.
    pub fn nearest(&self, u: &Vector) -> usize {
        nearest(&self.grid, u).unwrap()
    }

    /// Largest angle between a direction and its nearest grid direction,
    /// estimated on a finer grid.
    pub fn covering_radius(&self) -> f64 {
        let probes = if self.dim == 2 {
            circle_grid(16 * self.grid.len())
        } else {
            icosahedral_grid(5)
        };
        probes
            .iter()
            .map(|p| p.dot(&self.grid[self.nearest(p)]).clamp(-1.0, 1.0).acos())
            .fold(0.0, f64::max)
    }
}

fn nearest(grid: &[Vector], u: &Vector) -> Option<usize> {
    (0..grid.len()).max_by(|&a, &b| grid[a].dot(u).total_cmp(&grid[b].dot(u)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_grid(f: &TestBodyFamily, p: &Polytope) -> bool {
        p.area_measure_top()
            .atoms
            .iter()
            .all(|a| f.grid[f.nearest(&a.dir())].dot(&a.dir().normalize()) > 1.0 - 1e-12)
    }

    #[test]
    fn planar_family() {
        let f = TestBodyFamily::standard(2).unwrap();
        assert_eq!(f.grid.len(), 64);
        assert_eq!(f.restricted(&[Role::Segment]).members.len(), 32);
        assert_eq!(f.restricted(&[Role::AsymmetricProbe]).members.len(), 64);
        for m in &f.members {
            assert!(on_grid(&f, &m.body), "{}", m.id);
            assert!(m.body.steiner_point().norm() < 1e-12);
        }
        assert!((f.covering_radius() - PI / 64.0).abs() < 1e-3);
    }

    #[test]
    fn spatial_family() {
        let f = TestBodyFamily::standard(3).unwrap();
        assert_eq!(f.grid.len(), 162);
        assert_eq!(f.restricted(&[Role::Plate]).members.len(), 81);
        let probes = f.restricted(&[Role::AsymmetricProbe]);
        assert_eq!(probes.members.len(), 162);
        for (g, m) in probes.members.iter().enumerate() {
            assert!(on_grid(&f, &m.body), "{}", m.id);
            let s = m.body.area_measure_top();
            let top = s.atoms.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).unwrap();
            assert!(top.dir().dot(&f.grid[g]) > 1.0 - 1e-12, "{}", m.id);
        }
        for m in f.restricted(&[Role::Plate]).members {
            assert!(on_grid(&f, &m.body));
            assert!((m.body.hyperplane_content() - 1.0).abs() < 1e-12);
        }
        assert!(f.covering_radius() < 0.2);
    }
}
