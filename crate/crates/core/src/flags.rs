//! Monte Carlo flag measures: area measures of projections onto random
//! subspaces, lifted to flags (u, U).

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolsim::realization::stream;
use crate::boolsim::table::mean_and_stderr;
use crate::boolsim::GrainModel;
use crate::error::{Error, Result};
use crate::geom::{Polytope, Subspace, Vector};

/// Weighted flag: a unit vector u inside a (j+1)-dimensional subspace U.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagAtom {
    pub u: Vec<f64>,
    /// Orthonormal basis of U.
    pub basis: Vec<Vec<f64>>,
    pub weight: f64,
    /// Index of the Monte Carlo sample that produced the atom.
    pub sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagMeasureEstimate {
    pub j: usize,
    pub dim: usize,
    pub atoms: Vec<FlagAtom>,
    pub samples: usize,
    pub total_mass: f64,
    pub stderr: f64,
}

/// Haar-distributed k-dimensional subspace of ℝ^d from an orthonormalised
/// Gaussian frame.
pub fn sample_grassmannian(d: usize, k: usize, seed: u64) -> Subspace {
    grassmannian_from(d, k, &mut stream(seed, 0))
}

fn grassmannian_from<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Subspace {
    assert!(1 <= k && k <= d, "subspace dimension {k} not in 1..={d}");
    loop {
        let frame: Vec<Vector> = (0..k)
            .map(|_| DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        if let Some(s) = Subspace::from_spanning(&frame) {
            return s;
        }
    }
}

fn check(d: usize, j: usize) -> Result<()> {
    if !(1..d).contains(&j) {
        return Err(Error::InvalidIndex {
            entries: vec![j],
            dim: d,
            reason: "flag order must lie in 1..d−1".into(),
        });
    }
    Ok(())
}

/// ½ times the area measure of P|U inside U for one sampled U, lifted to
/// flags. Degenerate projections are redrawn.
fn projected_atoms<R: Rng + ?Sized>(p: &Polytope, j: usize, rng: &mut R, sample: usize) -> Result<Vec<FlagAtom>> {
    let d = p.dim();
    for _ in 0..100 {
        let u = grassmannian_from(d, j + 1, rng);
        let proj = p.project(&u.basis)?;
        if !proj.is_full_dimensional() {
            continue;
        }
        let basis: Vec<Vec<f64>> = u.basis.iter().map(|b| b.as_slice().to_vec()).collect();
        return Ok(proj
            .area_measure_top()
            .atoms
            .iter()
            .map(|a| FlagAtom {
                u: u.lift(&a.dir()).as_slice().to_vec(),
                basis: basis.clone(),
                weight: 0.5 * a.weight,
                sample,
            })
            .collect());
    }
    Err(Error::DegenerateBody("every sampled projection was degenerate".into()))
}

/// ½S_{d−1}(P, ·) paired with U = ℝ^d.
fn top_atoms(p: &Polytope, scale: f64, sample: usize) -> Vec<FlagAtom> {
    let d = p.dim();
    let basis: Vec<Vec<f64>> = Subspace::full(d).basis.iter().map(|b| b.as_slice().to_vec()).collect();
    p.area_measure_top()
        .atoms
        .iter()
        .map(|a| FlagAtom {
            u: a.direction.clone(),
            basis: basis.clone(),
            weight: 0.5 * scale * a.weight,
            sample,
        })
        .collect()
}

fn assemble(j: usize, dim: usize, per_sample: Vec<Vec<FlagAtom>>) -> FlagMeasureEstimate {
    let samples = per_sample.len();
    let masses: Vec<f64> = per_sample.iter().map(|a| a.iter().map(|x| x.weight).sum()).collect();
    let (total_mass, stderr) = mean_and_stderr(&masses);
    let n = samples as f64;
    let atoms = per_sample
        .into_iter()
        .flatten()
        .map(|mut a| {
            a.weight /= n;
            a
        })
        .collect();
    FlagMeasureEstimate {
        j,
        dim,
        atoms,
        samples,
        total_mass,
        stderr,
    }
}

/// ψ_j(P, ·) averaged over `samples` uniform subspaces of dimension j+1;
/// for j = d−1 the exact ½S_{d−1}(P, ·).
pub fn flag_measure(p: &Polytope, j: usize, samples: usize, seed: u64) -> Result<FlagMeasureEstimate> {
    let d = p.dim();
    check(d, j)?;
    if j == d - 1 {
        return Ok(assemble(j, d, vec![top_atoms(p, 1.0, 0)]));
    }
    if samples == 0 {
        return Err(Error::InvalidModel("at least one sample is needed".into()));
    }
    let per_sample = (0..samples)
        .into_par_iter()
        .map(|s| projected_atoms(p, j, &mut stream(seed, s as u64), s))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(j, d, per_sample))
}

/// γ·E ψ_j(X, ·): each sample draws a grain from the law and a subspace
/// from the same stream index as `flag_measure`.
pub fn mean_flag_measure(model: &GrainModel, j: usize, samples: usize, seed: u64) -> Result<FlagMeasureEstimate> {
    let d = model.dim();
    check(d, j)?;
    if samples == 0 {
        return Err(Error::InvalidModel("at least one sample is needed".into()));
    }
    let gamma = model.gamma();
    let per_sample = (0..samples)
        .into_par_iter()
        .map(|s| {
            let grain = model.sample_grain(&mut stream(seed ^ 0x5bd1_e995, s as u64));
            let mut atoms = if j == d - 1 {
                top_atoms(&grain, 1.0, s)
            } else {
                projected_atoms(&grain, j, &mut stream(seed, s as u64), s)?
            };
            for a in atoms.iter_mut() {
                a.weight *= gamma;
            }
            Ok(atoms)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(j, d, per_sample))
}

impl FlagMeasureEstimate {
    /// ∫ g dψ with its standard error over samples.
    pub fn pairing<G: Fn(&[f64], &[Vec<f64>]) -> f64>(&self, g: G) -> (f64, f64) {
        let mut per = vec![0.0; self.samples.max(1)];
        for a in &self.atoms {
            per[a.sample] += a.weight * g(&a.u, &a.basis) * self.samples as f64;
        }
        mean_and_stderr(&per)
    }

    /// One line per atom: `j,u_1..u_d,U_1_1..U_{j+1}_d,weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.dim;
        let k = self.atoms.first().map_or(self.j + 1, |a| a.basis.len());
        let mut header = vec!["j".to_string()];
        header.extend((1..=d).map(|c| format!("u_{c}")));
        for b in 1..=k {
            header.extend((1..=d).map(|c| format!("U{b}_{c}")));
        }
        header.push("weight".into());
        let io = |e: csv::Error| Error::Schema(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&header).map_err(io)?;
        for a in &self.atoms {
            let mut rec = vec![self.j.to_string()];
            rec.extend(a.u.iter().map(|x| x.to_string()));
            rec.extend(a.basis.iter().flatten().map(|x| x.to_string()));
            rec.push(a.weight.to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Schema(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vector;

    #[test]
    fn full_subspace() {
        let s = sample_grassmannian(3, 3, 1);
        assert_eq!(s.dim(), 3);
        for (i, a) in s.basis.iter().enumerate() {
            for (k, b) in s.basis.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((a.dot(b) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproducible() {
        assert_eq!(sample_grassmannian(4, 2, 9), sample_grassmannian(4, 2, 9));
        let c = Polytope::centered_box(&[1.0, 2.0, 3.0]);
        assert_eq!(flag_measure(&c, 1, 50, 3).unwrap(), flag_measure(&c, 1, 50, 3).unwrap());
    }

    #[test]
    fn unit_square_top_order() {
        let f = flag_measure(&Polytope::centered_box(&[1.0, 1.0]), 1, 10, 0).unwrap();
        assert_eq!(f.atoms.len(), 4);
        assert!(f.atoms.iter().all(|a| (a.weight - 0.5).abs() < 1e-15));
        assert_eq!(f.total_mass, 2.0);
        assert_eq!(f.stderr, 0.0);
    }

    #[test]
    fn atoms_lie_in_their_subspace() {
        let c = Polytope::centered_box(&[1.0, 2.0, 3.0]);
        let f = flag_measure(&c, 1, 20, 5).unwrap();
        for a in &f.atoms {
            let u = vector(&a.u);
            let inside: f64 = a.basis.iter().map(|b| vector(b).dot(&u).powi(2)).sum();
            assert!((u.norm() - 1.0).abs() < 1e-10 && (inside - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_order() {
        assert!(flag_measure(&Polytope::centered_box(&[1.0, 1.0]), 2, 10, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let f = flag_measure(&Polytope::centered_box(&[1.0, 1.0, 1.0]), 1, 2, 0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "j,u_1,u_2,u_3,U1_1,U1_2,U1_3,U2_1,U2_2,U2_3,weight");
        assert_eq!(lines.count(), f.atoms.len());
    }
}
