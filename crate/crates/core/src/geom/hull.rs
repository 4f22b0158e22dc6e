//! Convex hulls in the plane and in space.
//!
//! Both constructions take their combinatorial decisions with Shewchuk's
//! adaptive-precision orientation predicates, so the returned structure is
//! consistent for any finite input, including exactly degenerate ones.

use std::collections::BTreeMap;

use robust::{orient2d, orient3d, Coord, Coord3D};

fn c2(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn c3(p: [f64; 3]) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

/// Sign of the turn a -> b -> c: positive for a left turn.
pub fn turn(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    orient2d(c2(a), c2(b), c2(c))
}

/// Positive when `p` lies on the side of the oriented plane (a, b, c) that the
/// normal (b - a) x (c - a) points to.
pub fn side3(a: [f64; 3], b: [f64; 3], c: [f64; 3], p: [f64; 3]) -> f64 {
    -orient3d(c3(a), c3(b), c3(c), c3(p))
}

/// Andrew's monotone chain. Returns the indices of the strictly convex hull
/// vertices in counter-clockwise order. Collinear inputs yield the two
/// endpoints; a single distinct point yields one index.
pub fn hull2(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in &idx {
        while lower.len() >= 2
            && turn(
                points[lower[lower.len() - 2]],
                points[lower[lower.len() - 1]],
                points[i],
            ) <= 0.0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && turn(
                points[upper[upper.len() - 2]],
                points[upper[upper.len() - 1]],
                points[i],
            ) <= 0.0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    lower
}

/// Result of a spatial hull computation.
#[derive(Debug, Clone)]
pub enum Hull3 {
    /// Full-dimensional hull: outward oriented boundary triangles.
    Solid { triangles: Vec<[usize; 3]> },
    /// All points lie in a common plane.
    Planar,
    /// All points lie on a common line.
    Linear,
    /// Only one distinct point.
    Point,
}

fn collinear3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> bool {
    let xy = |p: [f64; 3]| [p[0], p[1]];
    let yz = |p: [f64; 3]| [p[1], p[2]];
    let xz = |p: [f64; 3]| [p[0], p[2]];
    turn(xy(a), xy(b), xy(c)) == 0.0
        && turn(yz(a), yz(b), yz(c)) == 0.0
        && turn(xz(a), xz(b), xz(c)) == 0.0
}

/// Incremental hull with exact visibility tests.
pub fn hull3(points: &[[f64; 3]]) -> Hull3 {
    let n = points.len();
    if n == 0 {
        return Hull3::Point;
    }
    let i0 = 0;
    let Some(i1) = (0..n).find(|&i| points[i] != points[i0]) else {
        return Hull3::Point;
    };
    let Some(i2) = (0..n).find(|&i| !collinear3(points[i0], points[i1], points[i])) else {
        return Hull3::Linear;
    };
    let Some(i3) =
        (0..n).find(|&i| side3(points[i0], points[i1], points[i2], points[i]) != 0.0)
    else {
        return Hull3::Planar;
    };

    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    let push = |f: [usize; 3],
                    faces: &mut Vec<[usize; 3]>,
                    alive: &mut Vec<bool>,
                    edges: &mut BTreeMap<(usize, usize), usize>| {
        let id = faces.len();
        faces.push(f);
        alive.push(true);
        edges.insert((f[0], f[1]), id);
        edges.insert((f[1], f[2]), id);
        edges.insert((f[2], f[0]), id);
    };

    // orient the seed tetrahedron so that i3 is behind the base triangle
    let (a, b, c) = if side3(points[i0], points[i1], points[i2], points[i3]) > 0.0 {
        (i0, i2, i1)
    } else {
        (i0, i1, i2)
    };
    for f in [[a, b, c], [a, i3, b], [b, i3, c], [c, i3, a]] {
        push(f, &mut faces, &mut alive, &mut edges);
    }

    for p in 0..n {
        if p == i0 || p == i1 || p == i2 || p == i3 {
            continue;
        }
        let pp = points[p];
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| {
                alive[f] && {
                    let [x, y, z] = faces[f];
                    side3(points[x], points[y], points[z], pp) > 0.0
                }
            })
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut is_visible = vec![false; faces.len()];
        for &f in &visible {
            is_visible[f] = true;
        }
        let mut horizon = Vec::new();
        for &f in &visible {
            let [x, y, z] = faces[f];
            for (u, v) in [(x, y), (y, z), (z, x)] {
                let twin = edges.get(&(v, u)).copied();
                match twin {
                    Some(t) if is_visible[t] => {}
                    _ => horizon.push((u, v)),
                }
            }
        }
        for &f in &visible {
            alive[f] = false;
            let [x, y, z] = faces[f];
            for e in [(x, y), (y, z), (z, x)] {
                if edges.get(&e) == Some(&f) {
                    edges.remove(&e);
                }
            }
        }
        for (u, v) in horizon {
            push([u, v, p], &mut faces, &mut alive, &mut edges);
        }
    }

    let triangles = faces
        .into_iter()
        .zip(alive)
        .filter_map(|(f, a)| a.then_some(f))
        .collect();
    Hull3::Solid { triangles }
}
