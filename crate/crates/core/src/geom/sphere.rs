//! Small spherical-geometry helpers shared by several modules.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Vector;

/// Volume of the unit ball in ℝᵐ.
pub fn kappa(m: usize) -> f64 {
    // κ_m = π^{m/2} / Γ(1 + m/2), via the recursion κ_m = 2π/m · κ_{m-2}
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / m as f64 * kappa(m - 2),
    }
}

/// Angle between two unit vectors in [0, π].
pub fn angle(u: &[f64], v: &[f64]) -> f64 {
    let c: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    c.clamp(-1.0, 1.0).acos()
}

/// Area of the spherical triangle with unit vertices u, v, w by the
/// Van Oosterom–Strackee formula. Degenerate triangles give 0.
pub fn spherical_triangle_area(u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let det = det3(u, v, w);
    if det == 0.0 {
        return 0.0;
    }
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    2.0 * det.atan2(1.0 + dot(u, v) + dot(v, w) + dot(w, u))
}

/// |det(u, v)| in the plane.
pub fn det2(u: &[f64], v: &[f64]) -> f64 {
    (u[0] * v[1] - u[1] * v[0]).abs()
}

/// |det(u, v, w)| in space.
pub fn det3(u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]))
        .abs()
}

/// Haar-distributed rotation (determinant +1) from a Gaussian frame.
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> nalgebra::DMatrix<f64> {
    let g = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Uniform random unit vector.
pub fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    loop {
        let v = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Equally spaced directions on the circle.
pub fn circle_grid(n: usize) -> Vec<Vector> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            DVector::from_vec(vec![t.cos(), t.sin()])
        })
        .collect()
}

/// Vertices of the icosahedron refined `levels` times by edge bisection and
/// projected to the sphere: 12, 42, 162, 642, … points. The grid is
/// antipodally symmetric and contains ±e₁, ±e₂, ±e₃ from level 1 on.
pub fn icosahedral_grid(levels: usize) -> Vec<Vector> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let norm = |p: [f64; 3]| {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / n, p[1] / n, p[2] / n]
    };
    for p in pts.iter_mut() {
        *p = norm(*p);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid = std::collections::BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (pts[a], pts[b]);
                pts.push(norm([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                pts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    pts.into_iter()
        .map(|p| DVector::from_vec(p.to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ball_volumes() {
        assert!((kappa(2) - PI).abs() < 1e-15);
        assert!((kappa(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((kappa(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn octant_triangle() {
        let a = spherical_triangle_area(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]);
        assert!((a - PI / 2.0).abs() < 1e-12);
        let z = spherical_triangle_area(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]);
        assert_eq!(z, 0.0);
    }

    #[test]
    fn icosahedral_grid_sizes_and_axes() {
        assert_eq!(icosahedral_grid(0).len(), 12);
        assert_eq!(icosahedral_grid(1).len(), 42);
        let g = icosahedral_grid(2);
        assert_eq!(g.len(), 162);
        for c in 0..3 {
            for s in [1.0, -1.0] {
                assert!(g.iter().any(|u| (u[c] - s).abs() < 1e-12));
            }
        }
        for u in &g {
            assert!(g.iter().any(|v| (u + v).norm() < 1e-12));
        }
    }

    #[test]
    fn rotations_are_proper() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let q = random_rotation(d, &mut rng);
            assert!((q.determinant() - 1.0).abs() < 1e-12);
            let e = &q.transpose() * &q - nalgebra::DMatrix::identity(d, d);
            assert!(e.norm() < 1e-12);
        }
    }
}
