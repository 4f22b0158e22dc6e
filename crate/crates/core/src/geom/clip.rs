//! Halfspace clipping of convex polyhedra stored as facet polygons.

use super::Polytope;

type P3 = [f64; 3];

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn lerp(a: &P3, b: &P3, t: f64) -> P3 {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// A convex polyhedron as a list of planar facet polygons.
#[derive(Debug, Clone)]
pub struct FacePoly {
    faces: Vec<Vec<P3>>,
}

impl FacePoly {
    /// Facet polygons of a full-dimensional polytope in ℝ³.
    pub fn from_polytope(p: &Polytope) -> Option<Self> {
        if p.dim() != 3 || !p.is_full_dimensional() {
            return None;
        }
        let faces = p
            .facet_polygons()
            .into_iter()
            .map(|f| f.iter().map(|v| [v[0], v[1], v[2]]).collect())
            .collect();
        Some(Self { faces })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &P3> {
        self.faces.iter().flatten()
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        let u = [u[0], u[1], u[2]];
        self.vertices()
            .map(|v| dot(v, &u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Keeps the part with ⟨n, x⟩ ≤ b. `tol` absorbs rounding at the plane.
    pub fn clip(&mut self, n: &[f64], b: f64, tol: f64) {
        let n = [n[0], n[1], n[2]];
        let mut cap: Vec<P3> = Vec::new();
        let mut out = Vec::with_capacity(self.faces.len() + 1);
        let mut any_cut = false;
        for face in &self.faces {
            let vals: Vec<f64> = face.iter().map(|p| dot(p, &n) - b).collect();
            if vals.iter().all(|&v| v <= tol) {
                for (p, v) in face.iter().zip(&vals) {
                    if v.abs() <= tol {
                        cap.push(*p);
                    }
                }
                out.push(face.clone());
                continue;
            }
            any_cut = true;
            if vals.iter().all(|&v| v > tol) {
                continue;
            }
            let m = face.len();
            let mut poly = Vec::with_capacity(m + 1);
            for i in 0..m {
                let (a, c) = (&face[i], &face[(i + 1) % m]);
                let (va, vc) = (vals[i], vals[(i + 1) % m]);
                if va <= tol {
                    poly.push(*a);
                    if va.abs() <= tol {
                        cap.push(*a);
                    }
                }
                if (va <= tol) != (vc <= tol) {
                    let t = va / (va - vc);
                    let x = lerp(a, c, t.clamp(0.0, 1.0));
                    poly.push(x);
                    cap.push(x);
                }
            }
            if poly.len() >= 3 {
                out.push(poly);
            }
        }
        if !any_cut {
            return;
        }
        self.faces = out;
        if self.faces.is_empty() {
            return;
        }
        if let Some(face) = order_on_plane(cap, &n, tol) {
            self.faces.push(face);
        }
    }
}

/// Deduplicates coplanar points and orders them counter-clockwise about `n`.
fn order_on_plane(mut pts: Vec<P3>, n: &P3, tol: f64) -> Option<Vec<P3>> {
    let mut kept: Vec<P3> = Vec::with_capacity(pts.len());
    for p in pts.drain(..) {
        if !kept.iter().any(|q| (0..3).all(|c| (q[c] - p[c]).abs() <= tol)) {
            kept.push(p);
        }
    }
    if kept.len() < 3 {
        return None;
    }
    let k = kept.len() as f64;
    let c = kept.iter().fold([0.0; 3], |acc, p| {
        [acc[0] + p[0] / k, acc[1] + p[1] / k, acc[2] + p[2] / k]
    });
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(cross(n, &helper));
    let e2 = cross(n, &e1);
    let mut keyed: Vec<(f64, P3)> = kept
        .into_iter()
        .map(|p| {
            let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            (dot(&d, &e2).atan2(dot(&d, &e1)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(keyed.into_iter().map(|(_, p)| p).collect())
}

fn cross(a: &P3, b: &P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: P3) -> P3 {
    let n = dot(&a, &a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}
