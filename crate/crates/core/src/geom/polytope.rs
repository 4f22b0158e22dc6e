use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::hull::{hull2, hull3, side3, Hull3};
use super::measure::DiscreteSphericalMeasure;
use super::sphere::spherical_triangle_area;
use super::Vector;
use crate::error::{Error, Result};

/// Relative tolerance used for floating comparisons in the kernel.
pub const REL_TOL: f64 = 1e-9;

/// A facet of a full-dimensional polytope: {x : ⟨normal, x⟩ = offset}.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vector,
    pub offset: f64,
    /// (d-1)-dimensional content.
    pub area: f64,
}

/// Orthonormal frame of the affine hull of a lower-dimensional body.
#[derive(Debug, Clone, PartialEq)]
struct Frame {
    origin: Vector,
    basis: Vec<Vector>,
}

/// A convex polytope in ℝᵈ, d ∈ {2, 3, 4}, stored by its extreme points and,
/// when full-dimensional, its facets. In ℝ⁴ only axis-aligned boxes are
/// supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeJson", into = "PolytopeJson")]
pub struct Polytope {
    dim: usize,
    affine_dim: usize,
    vertices: Vec<Vector>,
    facets: Vec<Facet>,
    /// Boundary triangulation in ℝ³: vertex indices plus owning facet.
    triangles: Vec<([usize; 3], usize)>,
    frame: Option<Frame>,
    axis_box: Option<(Vec<f64>, Vec<f64>)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// On-disk form: facets are always derived, never read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl TryFrom<PolytopeJson> for Polytope {
    type Error = Error;
    fn try_from(j: PolytopeJson) -> Result<Self> {
        let pts = j
            .vertices
            .into_iter()
            .map(DVector::from_vec)
            .collect::<Vec<_>>();
        Polytope::from_points(j.dim, pts)
    }
}

impl From<Polytope> for PolytopeJson {
    fn from(p: Polytope) -> Self {
        PolytopeJson {
            dim: p.dim,
            vertices: p.vertices.iter().map(|v| v.as_slice().to_vec()).collect(),
        }
    }
}

fn to2(v: &Vector) -> [f64; 2] {
    [v[0], v[1]]
}

fn to3(v: &Vector) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn bounds(dim: usize, vertices: &[Vector]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for v in vertices {
        for c in 0..dim {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    (lo, hi)
}

fn detect_axis_box(dim: usize, vertices: &[Vector], lo: &[f64], hi: &[f64]) -> bool {
    let spread = (0..dim).filter(|&c| hi[c] > lo[c]).count();
    if vertices.len() != 1 << spread {
        return false;
    }
    vertices
        .iter()
        .all(|v| (0..dim).all(|c| v[c] == lo[c] || v[c] == hi[c]))
}

/// Points in ℝ³ within 1e-12 of their diameter from a common plane, such as
/// a planar polygon whose corners were rounded off the plane.
fn is_flat(points: &[Vector]) -> bool {
    if points.len() < 4 {
        return false;
    }
    let n = points.len() as f64;
    let c = points.iter().fold(DVector::zeros(3), |a, p| a + p) / n;
    let m = DMatrix::from_fn(3, points.len(), |r, k| points[k][r] - c[r]);
    let svd = m.svd(true, false);
    let (i, _) = svd.singular_values.argmin();
    let normal = svd.u.unwrap().column(i).into_owned();
    let (lo, hi) = bounds(3, points);
    let diameter = (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt();
    diameter > 0.0 && points.iter().all(|p| (p - &c).dot(&normal).abs() <= 1e-12 * diameter)
}

/// Elementary symmetric polynomials e₀, …, eₙ of the given values.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (i, &a) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += e[j - 1] * a;
        }
    }
    e
}

impl Polytope {
    /// Convex hull of a finite point set.
    pub fn from_points(dim: usize, points: Vec<Vector>) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(Error::InvalidPolytope(format!("dimension {dim} not in 2..=4")));
        }
        if points.is_empty() {
            return Err(Error::InvalidPolytope("empty vertex list".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::InvalidPolytope(format!(
                    "point of length {} in dimension {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPolytope("non-finite coordinate".into()));
            }
        }
        match dim {
            2 => Ok(Self::hull_2d(points)),
            3 => Ok(Self::hull_3d(points)),
            _ => {
                let (lo, hi) = bounds(dim, &points);
                let corners_only = points
                    .iter()
                    .all(|v| (0..dim).all(|c| v[c] == lo[c] || v[c] == hi[c]));
                let spread = (0..dim).filter(|&c| hi[c] > lo[c]).count();
                let mut distinct = points.clone();
                distinct.sort_by(|a, b| {
                    a.iter()
                        .zip(b.iter())
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                distinct.dedup();
                if corners_only && distinct.len() == 1 << spread {
                    Ok(Self::axis_box(lo, hi))
                } else {
                    Err(Error::Unsupported(
                        "only axis-aligned boxes are supported in dimension 4".into(),
                    ))
                }
            }
        }
    }

    /// Axis-aligned box [lo, hi]; degenerate edges are allowed.
    pub fn axis_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let dim = lo.len();
        assert_eq!(dim, hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "box with lo > hi");
        let spread: Vec<usize> = (0..dim).filter(|&c| hi[c] > lo[c]).collect();
        let mut vertices = Vec::with_capacity(1 << spread.len());
        for mask in 0..(1usize << spread.len()) {
            let mut v = DVector::from_column_slice(&lo);
            for (bit, &c) in spread.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    v[c] = hi[c];
                }
            }
            vertices.push(v);
        }
        if dim <= 3 {
            let mut p = Self::from_points(dim, vertices).expect("box corners are valid");
            p.axis_box = Some((lo, hi));
            return p;
        }
        let edges: Vec<f64> = (0..dim).map(|c| hi[c] - lo[c]).collect();
        let mut facets = Vec::new();
        if spread.len() == dim {
            for c in 0..dim {
                let area: f64 = (0..dim).filter(|&k| k != c).map(|k| edges[k]).product();
                let mut n = DVector::zeros(dim);
                n[c] = 1.0;
                facets.push(Facet {
                    normal: n.clone(),
                    offset: hi[c],
                    area,
                });
                facets.push(Facet {
                    normal: -n,
                    offset: -lo[c],
                    area,
                });
            }
        }
        let frame = (spread.len() < dim).then(|| Frame {
            origin: DVector::from_column_slice(&lo),
            basis: spread
                .iter()
                .map(|&c| {
                    let mut e = DVector::zeros(dim);
                    e[c] = 1.0;
                    e
                })
                .collect(),
        });
        Self {
            dim,
            affine_dim: spread.len(),
            vertices,
            facets,
            triangles: Vec::new(),
            frame,
            axis_box: Some((lo.clone(), hi.clone())),
            lo,
            hi,
        }
    }

    /// Centred axis-aligned box with the given edge lengths.
    pub fn centered_box(edges: &[f64]) -> Self {
        let lo = edges.iter().map(|e| -0.5 * e).collect();
        let hi = edges.iter().map(|e| 0.5 * e).collect();
        Self::axis_box(lo, hi)
    }

    /// Segment between two points.
    pub fn segment(a: Vector, b: Vector) -> Result<Self> {
        let d = a.len();
        Self::from_points(d, vec![a, b])
    }

    /// Polytope {x : ⟨uᵢ, x⟩ ≤ hᵢ} for d ∈ {2, 3}, assuming it is bounded and
    /// has the origin in its interior (all hᵢ > 0).
    pub fn from_halfspaces(normals: &[Vector], offsets: &[f64]) -> Result<Self> {
        let d = normals
            .first()
            .ok_or_else(|| Error::InvalidPolytope("no halfspaces".into()))?
            .len();
        if offsets.iter().any(|&h| h <= 0.0) {
            return Err(Error::InvalidPolytope(
                "origin must be interior to the halfspace system".into(),
            ));
        }
        // polar duality: facets of conv{uᵢ/hᵢ} correspond to vertices
        let dual: Vec<Vector> = normals.iter().zip(offsets).map(|(u, &h)| u / h).collect();
        let dp = Self::from_points(d, dual)?;
        if dp.affine_dim < d {
            return Err(Error::InvalidPolytope("unbounded halfspace system".into()));
        }
        if dp.facets.iter().any(|f| f.offset <= 0.0) {
            return Err(Error::InvalidPolytope("unbounded halfspace system".into()));
        }
        // a vertex on more than d facets shows up as a cluster of nearly
        // equal points; keep one of each
        let scale = dp.facets.iter().map(|f| 1.0 / f.offset).fold(0.0, f64::max);
        let mut verts: Vec<Vector> = Vec::new();
        for f in dp.facets.iter() {
            let v = &f.normal / f.offset;
            if verts.iter().all(|w| (w - &v).norm() > 1e-9 * scale) {
                verts.push(v);
            }
        }
        Self::from_points(d, verts)
    }

    fn hull_2d(points: Vec<Vector>) -> Self {
        let pts: Vec<[f64; 2]> = points.iter().map(to2).collect();
        let idx = hull2(&pts);
        let vertices: Vec<Vector> = idx.iter().map(|&i| points[i].clone()).collect();
        let (lo, hi) = bounds(2, &vertices);
        let mut p = Self {
            dim: 2,
            affine_dim: vertices.len().min(3) - 1,
            vertices,
            facets: Vec::new(),
            triangles: Vec::new(),
            frame: None,
            axis_box: None,
            lo,
            hi,
        };
        match p.affine_dim {
            2 => {
                let n = p.vertices.len();
                for i in 0..n {
                    let a = &p.vertices[i];
                    let b = &p.vertices[(i + 1) % n];
                    let e = b - a;
                    let len = e.norm();
                    let normal = DVector::from_vec(vec![e[1] / len, -e[0] / len]);
                    let offset = normal.dot(a).max(normal.dot(b));
                    p.facets.push(Facet {
                        normal,
                        offset,
                        area: len,
                    });
                }
            }
            1 => {
                let dir = (&p.vertices[1] - &p.vertices[0]).normalize();
                p.frame = Some(Frame {
                    origin: p.vertices[0].clone(),
                    basis: vec![dir],
                });
            }
            _ => {
                p.frame = Some(Frame {
                    origin: p.vertices[0].clone(),
                    basis: vec![],
                })
            }
        }
        p.finish()
    }

    fn hull_3d(points: Vec<Vector>) -> Self {
        let pts: Vec<[f64; 3]> = points.iter().map(to3).collect();
        let kind = if is_flat(&points) { Hull3::Planar } else { hull3(&pts) };
        match kind {
            Hull3::Solid { triangles } => {
                let mut remap = BTreeMap::new();
                let mut vertices = Vec::new();
                let mut tris = Vec::with_capacity(triangles.len());
                for t in &triangles {
                    let mut r = [0usize; 3];
                    for k in 0..3 {
                        r[k] = *remap.entry(t[k]).or_insert_with(|| {
                            vertices.push(points[t[k]].clone());
                            vertices.len() - 1
                        });
                    }
                    tris.push(r);
                }
                Self::solid_3d(vertices, tris)
            }
            Hull3::Planar => {
                let p0 = points[0].clone();
                let p1 = points
                    .iter()
                    .max_by(|a, b| (*a - &p0).norm().total_cmp(&(*b - &p0).norm()))
                    .unwrap()
                    .clone();
                let e1 = (&p1 - &p0).normalize();
                let far = points
                    .iter()
                    .max_by(|a, b| {
                        let da = (*a - &p0).cross(&e1).norm();
                        let db = (*b - &p0).cross(&e1).norm();
                        da.total_cmp(&db)
                    })
                    .unwrap();
                let normal = e1.cross(&(far - &p0)).normalize();
                let e2 = normal.cross(&e1);
                let local: Vec<[f64; 2]> = points
                    .iter()
                    .map(|p| {
                        let q = p - &p0;
                        [q.dot(&e1), q.dot(&e2)]
                    })
                    .collect();
                let idx = hull2(&local);
                let vertices: Vec<Vector> = idx.iter().map(|&i| points[i].clone()).collect();
                let (lo, hi) = bounds(3, &vertices);
                Self {
                    dim: 3,
                    affine_dim: 2,
                    vertices,
                    facets: Vec::new(),
                    triangles: Vec::new(),
                    frame: Some(Frame {
                        origin: p0,
                        basis: vec![e1, e2],
                    }),
                    axis_box: None,
                    lo,
                    hi,
                }
                .finish()
            }
            Hull3::Linear => {
                let p0 = points[0].clone();
                let far = points
                    .iter()
                    .max_by(|a, b| (*a - &p0).norm().total_cmp(&(*b - &p0).norm()))
                    .unwrap();
                let dir = (far - &p0).normalize();
                let a = points
                    .iter()
                    .min_by(|x, y| x.dot(&dir).total_cmp(&y.dot(&dir)))
                    .unwrap()
                    .clone();
                let b = points
                    .iter()
                    .max_by(|x, y| x.dot(&dir).total_cmp(&y.dot(&dir)))
                    .unwrap()
                    .clone();
                let vertices = vec![a.clone(), b];
                let (lo, hi) = bounds(3, &vertices);
                Self {
                    dim: 3,
                    affine_dim: 1,
                    vertices,
                    facets: Vec::new(),
                    triangles: Vec::new(),
                    frame: Some(Frame {
                        origin: a,
                        basis: vec![dir],
                    }),
                    axis_box: None,
                    lo,
                    hi,
                }
                .finish()
            }
            Hull3::Point => {
                let vertices = vec![points[0].clone()];
                let (lo, hi) = bounds(3, &vertices);
                Self {
                    dim: 3,
                    affine_dim: 0,
                    vertices,
                    facets: Vec::new(),
                    triangles: Vec::new(),
                    frame: Some(Frame {
                        origin: points[0].clone(),
                        basis: vec![],
                    }),
                    axis_box: None,
                    lo,
                    hi,
                }
                .finish()
            }
        }
    }

    /// Groups boundary triangles into facets.
    fn solid_3d(vertices: Vec<Vector>, tris: Vec<[usize; 3]>) -> Self {
        let pts: Vec<[f64; 3]> = vertices.iter().map(to3).collect();
        let normals: Vec<(Vector, f64)> = tris
            .iter()
            .map(|t| {
                let a = &vertices[t[0]];
                let n = (&vertices[t[1]] - a).cross(&(&vertices[t[2]] - a));
                let area = 0.5 * n.norm();
                (n.normalize(), area)
            })
            .collect();
        let (lo, hi) = bounds(3, &vertices);
        let diameter = (0..3).map(|c| (hi[c] - lo[c]).powi(2)).sum::<f64>().sqrt();
        let sliver = 1e-14 * diameter * diameter;
        let mut edge_owner = BTreeMap::new();
        for (i, t) in tris.iter().enumerate() {
            for k in 0..3 {
                edge_owner.insert((t[k], t[(k + 1) % 3]), i);
            }
        }
        // region growing from the largest triangles: a neighbour joins when
        // all its vertices lie on the seed plane, so skinny triangles with
        // inaccurate normals are still absorbed
        let mut parent: Vec<usize> = (0..tris.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut order: Vec<usize> = (0..tris.len()).collect();
        order.sort_by(|&a, &b| normals[b].1.total_cmp(&normals[a].1).then(a.cmp(&b)));
        let mut assigned = vec![false; tris.len()];
        let tol = REL_TOL * diameter;
        for &seed in &order {
            if assigned[seed] || normals[seed].1 <= sliver {
                continue;
            }
            assigned[seed] = true;
            let n = &normals[seed].0;
            let off = n.dot(&vertices[tris[seed][0]]);
            let mut stack = vec![seed];
            while let Some(i) = stack.pop() {
                let t = tris[i];
                for k in 0..3 {
                    let Some(&j) = edge_owner.get(&(t[(k + 1) % 3], t[k])) else {
                        continue;
                    };
                    if assigned[j] {
                        continue;
                    }
                    let other = tris[j].iter().copied().find(|&v| v != t[k] && v != t[(k + 1) % 3]).unwrap();
                    let on_plane = side3(pts[tris[seed][0]], pts[tris[seed][1]], pts[tris[seed][2]], pts[other]) == 0.0
                        || (n.dot(&vertices[other]) - off).abs() <= tol
                        || (&normals[j].0 - n).norm() < REL_TOL;
                    if on_plane {
                        assigned[j] = true;
                        parent[j] = seed;
                        stack.push(j);
                    }
                }
            }
        }
        // a sliver left unreached joins the triangle across its longest edge
        for (i, t) in tris.iter().enumerate() {
            if assigned[i] {
                continue;
            }
            let k = (0..3)
                .max_by(|&x, &y| {
                    let lx = (&vertices[t[(x + 1) % 3]] - &vertices[t[x]]).norm();
                    let ly = (&vertices[t[(y + 1) % 3]] - &vertices[t[y]]).norm();
                    lx.total_cmp(&ly)
                })
                .unwrap();
            if let Some(&j) = edge_owner.get(&(t[(k + 1) % 3], t[k])) {
                parent[i] = j;
            }
        }
        let mut facet_of_root = BTreeMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut triangles = Vec::with_capacity(tris.len());
        let mut weighted: Vec<Vector> = Vec::new();
        for (i, t) in tris.iter().enumerate() {
            let r = find(&mut parent, i);
            let fid = *facet_of_root.entry(r).or_insert_with(|| {
                facets.push(Facet {
                    normal: DVector::zeros(3),
                    offset: 0.0,
                    area: 0.0,
                });
                weighted.push(DVector::zeros(3));
                facets.len() - 1
            });
            if normals[i].1 > sliver {
                weighted[fid] += &normals[i].0 * normals[i].1;
            }
            facets[fid].area += normals[i].1;
            triangles.push((*t, fid));
        }
        for (f, w) in facets.iter_mut().zip(&weighted) {
            f.normal = w.normalize();
        }
        for f in facets.iter_mut() {
            f.offset = f64::NEG_INFINITY;
        }
        for (t, fid) in &triangles {
            let f = &mut facets[*fid];
            for &v in t {
                f.offset = f.offset.max(f.normal.dot(&vertices[v]));
            }
        }
        Self {
            dim: 3,
            affine_dim: 3,
            vertices,
            facets,
            triangles,
            frame: None,
            axis_box: None,
            lo,
            hi,
        }
        .finish()
    }

    fn finish(mut self) -> Self {
        if detect_axis_box(self.dim, &self.vertices, &self.lo, &self.hi) {
            self.axis_box = Some((self.lo.clone(), self.hi.clone()));
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim == self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Boundary polygons of a solid in ℝ³, one per facet, ordered
    /// counter-clockwise seen from outside.
    pub fn facet_polygons(&self) -> Vec<Vec<Vector>> {
        let mut boundary: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.facets.len()];
        let mut owner = BTreeMap::new();
        for (t, f) in &self.triangles {
            for k in 0..3 {
                owner.insert((t[k], t[(k + 1) % 3]), *f);
            }
        }
        for (t, f) in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if owner.get(&(b, a)) != Some(f) {
                    boundary[*f].insert(a, b);
                }
            }
        }
        boundary
            .into_iter()
            .map(|next| {
                let Some(&start) = next.keys().min() else {
                    return Vec::new();
                };
                let mut poly = vec![self.vertices[start].clone()];
                let mut cur = next[&start];
                while cur != start && poly.len() <= next.len() {
                    poly.push(self.vertices[cur].clone());
                    cur = next[&cur];
                }
                poly
            })
            .collect()
    }

    /// Pairs of adjacent facets of a solid in ℝ³ with the length of their
    /// common edge.
    pub fn facet_adjacency(&self) -> Vec<(usize, usize, f64)> {
        let mut owner = BTreeMap::new();
        for (t, f) in &self.triangles {
            for k in 0..3 {
                owner.insert((t[k], t[(k + 1) % 3]), *f);
            }
        }
        let mut edges: Vec<(&(usize, usize), &usize)> = owner.iter().collect();
        edges.sort();
        let mut len: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for (&(a, b), &f) in edges {
            if let Some(&g) = owner.get(&(b, a)) {
                if f < g {
                    *len.entry((f, g)).or_default() += (&self.vertices[a] - &self.vertices[b]).norm();
                }
            }
        }
        len.into_iter().map(|((f, g), l)| (f, g, l)).collect()
    }

    /// Edges as pairs of vertex indices.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.vertices.len();
        if let Some((lo, hi)) = &self.axis_box {
            // box corners differing in exactly one coordinate
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let diff = (0..self.dim)
                        .filter(|&c| self.vertices[i][c] != self.vertices[j][c])
                        .count();
                    if diff == 1 {
                        out.push((i, j));
                    }
                }
            }
            let _ = (lo, hi);
            return out;
        }
        match (self.dim, self.affine_dim) {
            (3, 3) => {
                let mut owner = BTreeMap::new();
                for (t, f) in &self.triangles {
                    for k in 0..3 {
                        owner.insert((t[k], t[(k + 1) % 3]), *f);
                    }
                }
                let mut out: Vec<(usize, usize)> = owner
                    .iter()
                    .filter(|(&(a, b), &f)| a < b && owner.get(&(b, a)).is_some_and(|&g| g != f))
                    .map(|(&e, _)| e)
                    .collect();
                out.sort_unstable();
                out
            }
            (_, 2) => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            (_, 1) => vec![(0, 1)],
            _ => Vec::new(),
        }
    }

    /// Corners (lo, hi) when the body is an axis-aligned box.
    pub fn as_axis_box(&self) -> Option<(&[f64], &[f64])> {
        self.axis_box
            .as_ref()
            .map(|(l, h)| (l.as_slice(), h.as_slice()))
    }

    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn support(&self, u: &Vector) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Support function of the translate with Steiner point at the origin.
    pub fn centered_support(&self, u: &Vector) -> f64 {
        self.support(u) - self.steiner_point().dot(u)
    }

    /// Lebesgue volume; zero for lower-dimensional bodies.
    pub fn volume(&self) -> f64 {
        if !self.is_full_dimensional() {
            return 0.0;
        }
        if let Some((lo, hi)) = &self.axis_box {
            return lo.iter().zip(hi).map(|(a, b)| b - a).product();
        }
        self.facets.iter().map(|f| f.offset * f.area).sum::<f64>() / self.dim as f64
    }

    /// (d-1)-content of a body whose affine hull is a hyperplane.
    pub fn hyperplane_content(&self) -> f64 {
        if self.affine_dim + 1 != self.dim {
            return 0.0;
        }
        let local = self.local_polytope();
        match local {
            Some(p) => p.volume_local(),
            None => 0.0,
        }
    }

    fn volume_local(&self) -> f64 {
        match self.dim {
            1 => self.hi[0] - self.lo[0],
            _ => self.volume(),
        }
    }

    /// The body expressed in the coordinates of its affine hull.
    fn local_polytope(&self) -> Option<Polytope> {
        let frame = self.frame.as_ref()?;
        let k = frame.basis.len();
        let coords: Vec<Vector> = self
            .vertices
            .iter()
            .map(|v| {
                let q = v - &frame.origin;
                DVector::from_iterator(k, frame.basis.iter().map(|b| b.dot(&q)))
            })
            .collect();
        match k {
            0 => None,
            1 => {
                let (lo, hi) = bounds(1, &coords);
                Some(Polytope {
                    dim: 1,
                    affine_dim: 1,
                    vertices: coords,
                    facets: Vec::new(),
                    triangles: Vec::new(),
                    frame: None,
                    axis_box: Some((lo.clone(), hi.clone())),
                    lo,
                    hi,
                })
            }
            _ => Polytope::from_points(k, coords).ok(),
        }
    }

    /// Unit normal of the affine hull when it is a hyperplane.
    pub fn hyperplane_normal(&self) -> Option<Vector> {
        if self.affine_dim + 1 != self.dim {
            return None;
        }
        let frame = self.frame.as_ref()?;
        match self.dim {
            2 => {
                let b = &frame.basis[0];
                Some(DVector::from_vec(vec![b[1], -b[0]]))
            }
            3 => Some(frame.basis[0].cross(&frame.basis[1]).normalize()),
            _ => {
                let (lo, hi) = self.as_axis_box()?;
                let c = (0..self.dim).find(|&c| hi[c] == lo[c])?;
                let mut n = DVector::zeros(self.dim);
                n[c] = 1.0;
                Some(n)
            }
        }
    }

    /// Steiner point: Σ_v (normalised external angle at v)·v.
    pub fn steiner_point(&self) -> Vector {
        if let Some((lo, hi)) = &self.axis_box {
            return DVector::from_iterator(self.dim, lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)));
        }
        if !self.is_full_dimensional() {
            let frame = self.frame.as_ref().expect("lower-dimensional body has a frame");
            return match self.local_polytope() {
                None => self.vertices[0].clone(),
                Some(local) => {
                    let s = if local.dim == 1 {
                        DVector::from_vec(vec![0.5 * (local.lo[0] + local.hi[0])])
                    } else {
                        local.steiner_point()
                    };
                    let mut out = frame.origin.clone();
                    for (c, b) in s.iter().zip(&frame.basis) {
                        out += b * *c;
                    }
                    out
                }
            };
        }
        match self.dim {
            2 => {
                let n = self.vertices.len();
                let mut s = DVector::zeros(2);
                for i in 0..n {
                    let prev = &self.facets[(i + n - 1) % n].normal;
                    let next = &self.facets[i].normal;
                    let cross = prev[0] * next[1] - prev[1] * next[0];
                    let theta = cross.atan2(prev.dot(next));
                    s += &self.vertices[i] * theta;
                }
                s / (2.0 * PI)
            }
            3 => {
                let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
                for (t, f) in &self.triangles {
                    for &v in t {
                        if !incident[v].contains(f) {
                            incident[v].push(*f);
                        }
                    }
                }
                let mut s = DVector::zeros(3);
                let mut total = 0.0;
                for (v, fs) in incident.iter().enumerate() {
                    let angle = self.normal_cone_angle(fs);
                    total += angle;
                    s += &self.vertices[v] * angle;
                }
                s / total
            }
            _ => unreachable!("non-box bodies are not constructed in dimension 4"),
        }
    }

    /// Solid angle of the cone spanned by the given facet normals.
    fn normal_cone_angle(&self, fs: &[usize]) -> f64 {
        if fs.len() < 3 {
            return 0.0;
        }
        let mut m = DVector::zeros(3);
        for &f in fs {
            m += &self.facets[f].normal;
        }
        let m = m.normalize();
        let helper = if m[0].abs() < 0.9 {
            DVector::from_vec(vec![1.0, 0.0, 0.0])
        } else {
            DVector::from_vec(vec![0.0, 1.0, 0.0])
        };
        let e1 = m.cross(&helper).normalize();
        let e2 = m.cross(&e1);
        let mut ordered: Vec<(f64, &Vector)> = fs
            .iter()
            .map(|&f| {
                let n = &self.facets[f].normal;
                (n.dot(&e2).atan2(n.dot(&e1)), n)
            })
            .collect();
        ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n0 = ordered[0].1.as_slice();
        (1..ordered.len() - 1)
            .map(|i| spherical_triangle_area(n0, ordered[i].1.as_slice(), ordered[i + 1].1.as_slice()))
            .sum::<f64>()
            / (4.0 * PI)
    }

    /// Intrinsic volumes (V₀, …, V_d).
    pub fn intrinsic_volumes(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        if let Some((lo, hi)) = &self.axis_box {
            let edges: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
            return Ok(elementary_symmetric(&edges));
        }
        let mut v = vec![0.0; d + 1];
        v[0] = 1.0;
        if d == 4 {
            return Err(Error::Unsupported(
                "intrinsic volumes in dimension 4 are available for boxes only".into(),
            ));
        }
        if !self.is_full_dimensional() {
            if let Some(local) = self.local_polytope() {
                let lv = if local.dim == 1 {
                    vec![1.0, local.hi[0] - local.lo[0]]
                } else {
                    local.intrinsic_volumes()?
                };
                v[..lv.len()].copy_from_slice(&lv);
            }
            return Ok(v);
        }
        let surface: f64 = self.facets.iter().map(|f| f.area).sum();
        v[d] = self.volume();
        v[d - 1] = 0.5 * surface;
        if d == 3 {
            v[1] = self.mean_width_term();
        }
        Ok(v)
    }

    /// V₁ of a solid in ℝ³: Σ over edges of length × external angle / 2π.
    fn mean_width_term(&self) -> f64 {
        let mut owner = BTreeMap::new();
        for (t, f) in &self.triangles {
            for k in 0..3 {
                owner.insert((t[k], t[(k + 1) % 3]), *f);
            }
        }
        let mut sum = 0.0;
        for (&(a, b), &f) in &owner {
            if a > b {
                continue;
            }
            let Some(&g) = owner.get(&(b, a)) else {
                continue;
            };
            if f == g {
                continue;
            }
            let len = (&self.vertices[a] - &self.vertices[b]).norm();
            let ext = self.facets[f]
                .normal
                .dot(&self.facets[g].normal)
                .clamp(-1.0, 1.0)
                .acos();
            sum += len * ext;
        }
        sum / (2.0 * PI)
    }

    /// Top-order area measure S_{d-1}(P, ·). A body spanning a hyperplane
    /// contributes two opposite atoms of weight equal to its content; bodies
    /// of lower dimension have zero measure.
    pub fn area_measure_top(&self) -> DiscreteSphericalMeasure {
        let mut m = DiscreteSphericalMeasure::zero(self.dim);
        if self.is_full_dimensional() {
            for f in &self.facets {
                m.push(&f.normal, f.area);
            }
        } else if let Some(n) = self.hyperplane_normal() {
            let c = self.hyperplane_content();
            m.push(&n, c);
            m.push(&(-n.clone()), c);
        }
        m
    }

    /// Maximal distance from `c` to the body.
    pub fn radius_about(&self, c: &Vector) -> f64 {
        self.vertices
            .iter()
            .map(|v| (v - c).norm())
            .fold(0.0, f64::max)
    }

    pub fn translate(&self, t: &Vector) -> Self {
        let mut p = self.clone();
        for v in p.vertices.iter_mut() {
            *v += t;
        }
        for f in p.facets.iter_mut() {
            f.offset += f.normal.dot(t);
        }
        if let Some(fr) = p.frame.as_mut() {
            fr.origin += t;
        }
        if let Some((lo, hi)) = p.axis_box.as_mut() {
            for c in 0..p.dim {
                lo[c] += t[c];
                hi[c] += t[c];
            }
        }
        for c in 0..p.dim {
            p.lo[c] += t[c];
            p.hi[c] += t[c];
        }
        p
    }

    /// Image under x ↦ s·x for s ≥ 0.
    pub fn scale(&self, s: f64) -> Self {
        assert!(s >= 0.0, "negative scale; use reflect");
        if s == 0.0 {
            let z = DVector::zeros(self.dim);
            return Self::from_points(self.dim, vec![z]).expect("point");
        }
        let mut p = self.clone();
        for v in p.vertices.iter_mut() {
            *v *= s;
        }
        for f in p.facets.iter_mut() {
            f.offset *= s;
            f.area *= s.powi(self.dim as i32 - 1);
        }
        if let Some(fr) = p.frame.as_mut() {
            fr.origin *= s;
        }
        if let Some((lo, hi)) = p.axis_box.as_mut() {
            lo.iter_mut().for_each(|x| *x *= s);
            hi.iter_mut().for_each(|x| *x *= s);
        }
        p.lo.iter_mut().for_each(|x| *x *= s);
        p.hi.iter_mut().for_each(|x| *x *= s);
        p
    }

    /// Image under a proper rotation (orthogonal, determinant +1).
    pub fn rotate(&self, q: &DMatrix<f64>) -> Self {
        assert_eq!(q.nrows(), self.dim);
        if let Some((lo, hi)) = &self.axis_box {
            let identity = (q - DMatrix::identity(self.dim, self.dim)).norm() == 0.0;
            if identity {
                return Self::axis_box(lo.clone(), hi.clone());
            }
        }
        let mut p = self.clone();
        for v in p.vertices.iter_mut() {
            *v = q * &*v;
        }
        for f in p.facets.iter_mut() {
            f.normal = q * &f.normal;
        }
        if let Some(fr) = p.frame.as_mut() {
            fr.origin = q * &fr.origin;
            for b in fr.basis.iter_mut() {
                *b = q * &*b;
            }
        }
        let (lo, hi) = bounds(self.dim, &p.vertices);
        p.lo = lo;
        p.hi = hi;
        p.axis_box = None;
        p.finish()
    }

    /// Reflection K* = -K.
    pub fn reflect(&self) -> Self {
        if let Some((lo, hi)) = &self.axis_box {
            return Self::axis_box(
                hi.iter().map(|x| -x).collect(),
                lo.iter().map(|x| -x).collect(),
            );
        }
        Self::from_points(self.dim, self.vertices.iter().map(|v| -v).collect())
            .expect("reflection of a valid body")
    }

    /// Minkowski sum via the hull of pairwise vertex sums.
    pub fn minkowski_sum(&self, other: &Polytope) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidPolytope("dimension mismatch".into()));
        }
        if let (Some((l1, h1)), Some((l2, h2))) = (&self.axis_box, &other.axis_box) {
            return Ok(Self::axis_box(
                l1.iter().zip(l2).map(|(a, b)| a + b).collect(),
                h1.iter().zip(h2).map(|(a, b)| a + b).collect(),
            ));
        }
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(a + b);
            }
        }
        Self::from_points(self.dim, pts)
    }

    /// Whether `x` lies in the interior (strictly inside every facet).
    pub fn contains_interior(&self, x: &Vector) -> bool {
        self.is_full_dimensional() && self.facets.iter().all(|f| f.normal.dot(x) < f.offset)
    }

    /// Whether `x` lies in the body up to a relative tolerance.
    pub fn contains(&self, x: &Vector) -> bool {
        if !self.is_full_dimensional() {
            return false;
        }
        let scale = self.scale_hint();
        self.facets
            .iter()
            .all(|f| f.normal.dot(x) <= f.offset + REL_TOL * scale)
    }

    fn scale_hint(&self) -> f64 {
        (0..self.dim)
            .map(|c| self.lo[c].abs().max(self.hi[c].abs()))
            .fold(1.0, f64::max)
    }

    /// Intersection with a full-dimensional body; `None` when empty.
    pub fn intersect(&self, other: &Polytope) -> Option<Polytope> {
        assert!(other.is_full_dimensional(), "clipping body must be full-dimensional");
        for c in 0..self.dim {
            if self.lo[c] > other.hi[c] || other.lo[c] > self.hi[c] {
                return None;
            }
        }
        if let (Some((l1, h1)), Some((l2, h2))) = (&self.axis_box, &other.axis_box) {
            let lo: Vec<f64> = l1.iter().zip(l2).map(|(a, b)| a.max(*b)).collect();
            let hi: Vec<f64> = h1.iter().zip(h2).map(|(a, b)| a.min(*b)).collect();
            return Some(Self::axis_box(lo, hi));
        }
        if self.dim == 2 && self.is_full_dimensional() {
            return self.clip_polygon(other);
        }
        let pts = self.intersection_points(other)?;
        Polytope::from_points(self.dim, pts).ok()
    }

    /// A point set whose convex hull is self ∩ other (other full-dimensional),
    /// or `None` when the intersection is empty. Cheaper than
    /// [`Polytope::intersect`] when only support values are needed.
    pub fn intersection_points(&self, other: &Polytope) -> Option<Vec<Vector>> {
        for c in 0..self.dim {
            if self.lo[c] > other.hi[c] || other.lo[c] > self.hi[c] {
                return None;
            }
        }
        let tol = REL_TOL * self.scale_hint().max(other.scale_hint());
        if let Some(mut fp) = super::clip::FacePoly::from_polytope(self) {
            for f in &other.facets {
                fp.clip(f.normal.as_slice(), f.offset, tol);
                if fp.is_empty() {
                    return None;
                }
            }
            let mut pts: Vec<Vector> = fp.vertices().map(|p| DVector::from_column_slice(p)).collect();
            dedup_points(&mut pts, tol);
            return Some(pts);
        }
        let mut pts = self.vertices.clone();
        let cap = 2 * (self.vertices.len() + other.vertices.len()).max(8);
        for f in &other.facets {
            pts = clip_points(pts, &f.normal, f.offset, tol)?;
            if pts.len() > cap {
                // crossing points multiply quickly; keep only extreme ones
                dedup_points(&mut pts, tol);
                if let Ok(h) = Polytope::from_points(self.dim, pts.clone()) {
                    pts = h.vertices;
                }
            }
        }
        dedup_points(&mut pts, tol);
        Some(pts)
    }

    /// Sutherland–Hodgman clipping of a convex polygon.
    fn clip_polygon(&self, other: &Polytope) -> Option<Polytope> {
        let tol = REL_TOL * self.scale_hint().max(other.scale_hint());
        let mut poly: Vec<Vector> = self.vertices.clone();
        for f in &other.facets {
            let n = poly.len();
            if n == 0 {
                return None;
            }
            let mut out = Vec::with_capacity(n + 1);
            for i in 0..n {
                let a = &poly[i];
                let b = &poly[(i + 1) % n];
                let da = f.normal.dot(a) - f.offset;
                let db = f.normal.dot(b) - f.offset;
                let ina = da <= tol;
                let inb = db <= tol;
                if ina {
                    out.push(a.clone());
                }
                if ina != inb && (da - db).abs() > 0.0 {
                    let t = da / (da - db);
                    if t > 0.0 && t < 1.0 {
                        out.push(a + (b - a) * t);
                    }
                }
            }
            poly = out;
        }
        if poly.is_empty() {
            return None;
        }
        dedup_points(&mut poly, tol);
        Polytope::from_points(2, poly).ok()
    }

    /// Orthogonal projection into the coordinate frame of a subspace.
    pub fn project(&self, basis: &[Vector]) -> Result<Polytope> {
        let k = basis.len();
        if k == self.dim {
            let identity = basis
                .iter()
                .enumerate()
                .all(|(i, b)| b.iter().enumerate().all(|(j, x)| *x == if i == j { 1.0 } else { 0.0 }));
            if identity {
                return Ok(self.clone());
            }
        }
        let pts: Vec<Vector> = self
            .vertices
            .iter()
            .map(|v| DVector::from_iterator(k, basis.iter().map(|b| b.dot(v))))
            .collect();
        Polytope::from_points(k, pts)
    }
}

/// Clips a point set describing a convex body to {x : ⟨n, x⟩ ≤ b}. The hull
/// of the result equals the clipped body.
fn clip_points(points: Vec<Vector>, n: &Vector, b: f64, tol: f64) -> Option<Vec<Vector>> {
    let vals: Vec<f64> = points.iter().map(|p| n.dot(p) - b).collect();
    let inside: Vec<usize> = (0..points.len()).filter(|&i| vals[i] <= tol).collect();
    if inside.is_empty() {
        return None;
    }
    if inside.len() == points.len() {
        return Some(points);
    }
    let outside: Vec<usize> = (0..points.len()).filter(|&i| vals[i] > tol).collect();
    let mut out: Vec<Vector> = inside.iter().map(|&i| points[i].clone()).collect();
    for &i in &inside {
        for &o in &outside {
            let t = vals[i] / (vals[i] - vals[o]);
            if t > 0.0 {
                out.push(&points[i] + (&points[o] - &points[i]) * t);
            }
        }
    }
    Some(out)
}

fn dedup_points(points: &mut Vec<Vector>, tol: f64) {
    let mut kept: Vec<Vector> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if !kept.iter().any(|q| (q - &p).amax() <= tol) {
            kept.push(p);
        }
    }
    *points = kept;
}
