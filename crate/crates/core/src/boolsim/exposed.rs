//! The part of the particle boundaries not covered by other particles,
//! collected by outer normal direction.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;

use super::realization::{stream, Realization, Window};
use super::union::{bbox, boxes_overlap, overlap_graph};
use crate::geom::{DiscreteSphericalMeasure, Polytope, Vector};

/// Default number of coverage test points per facet in ℝ³.
pub const DEFAULT_FACET_POINTS: usize = 10_000;

/// Density (per unit window volume) of the exposed boundary of the union,
/// by outer normal. Boxes and polygons are handled exactly; general
/// polytopes in ℝ³ by stratified coverage tests with `facet_points` points
/// per facet.
pub fn exposed_boundary_measure(real: &Realization, facet_points: usize) -> DiscreteSphericalMeasure {
    let d = real.window.dim();
    let (lo, hi): (Vec<_>, Vec<_>) = real.particles.iter().map(bbox).unzip();
    let adj = overlap_graph(&lo, &hi);
    let mut acc = Accumulator::default();
    if real.particles.iter().all(|p| p.as_axis_box().is_some()) {
        boxes(real, &lo, &hi, &adj, &mut acc);
    } else if d == 2 {
        polygons(real, &adj, &mut acc);
    } else {
        let mut rng = stream(real.seed ^ 0x9e37_79b9_7f4a_7c15, real.replication);
        solids(real, &adj, facet_points.max(1), &mut rng, &mut acc);
    }
    acc.finish(d, real.window.volume())
}

/// Weights per exact direction; sums are formed in insertion order so the
/// result is reproducible.
#[derive(Default)]
struct Accumulator {
    index: BTreeMap<Vec<u64>, usize>,
    atoms: Vec<(Vec<f64>, f64)>,
}

impl Accumulator {
    fn add(&mut self, u: &[f64], w: f64) {
        if w <= 0.0 {
            return;
        }
        let key: Vec<u64> = u.iter().map(|x| (x + 0.0).to_bits()).collect();
        match self.index.get(&key) {
            Some(&i) => self.atoms[i].1 += w,
            None => {
                self.index.insert(key, self.atoms.len());
                self.atoms.push((u.to_vec(), w));
            }
        }
    }

    fn finish(self, d: usize, volume: f64) -> DiscreteSphericalMeasure {
        let mut m = DiscreteSphericalMeasure::zero(d);
        for (u, w) in self.atoms {
            m.push(&DVector::from_vec(u), w / volume);
        }
        m
    }
}

fn boxes(real: &Realization, lo: &[Vec<f64>], hi: &[Vec<f64>], adj: &[Vec<usize>], acc: &mut Accumulator) {
    let d = real.window.dim();
    let wl = real.window.lo();
    let wh = real.window.hi();
    for i in 0..lo.len() {
        for c in 0..d {
            for (x, sign) in [(lo[i][c], -1.0), (hi[i][c], 1.0)] {
                if !(x >= wl[c] && x < wh[c]) {
                    continue;
                }
                let fl: Vec<f64> = (0..d).filter(|&k| k != c).map(|k| lo[i][k].max(wl[k])).collect();
                let fh: Vec<f64> = (0..d).filter(|&k| k != c).map(|k| hi[i][k].min(wh[k])).collect();
                if fl.iter().zip(&fh).any(|(a, b)| a >= b) {
                    continue;
                }
                let covers: Vec<(Vec<f64>, Vec<f64>)> = adj[i]
                    .iter()
                    .filter(|&&j| lo[j][c] < x && x < hi[j][c])
                    .map(|&j| {
                        let l: Vec<f64> = (0..d).filter(|&k| k != c).map(|k| lo[j][k]).collect();
                        let h: Vec<f64> = (0..d).filter(|&k| k != c).map(|k| hi[j][k]).collect();
                        (l, h)
                    })
                    .filter(|(l, h)| (0..d - 1).all(|k| l[k] < fh[k] && fl[k] < h[k]))
                    .collect();
                let area: f64 = fl.iter().zip(&fh).map(|(a, b)| b - a).product();
                let exposed = area - covered_measure(&fl, &fh, &covers);
                let mut u = vec![0.0; d];
                u[c] = sign;
                acc.add(&u, exposed.max(0.0));
            }
        }
    }
}

/// Measure of [fl, fh] ∩ ∪ covers by coordinate compression.
fn covered_measure(fl: &[f64], fh: &[f64], covers: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    if covers.is_empty() {
        return 0.0;
    }
    let m = fl.len();
    let cuts: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut v = vec![fl[k], fh[k]];
            for (l, h) in covers {
                v.push(l[k].clamp(fl[k], fh[k]));
                v.push(h[k].clamp(fl[k], fh[k]));
            }
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    'cells: loop {
        let mut vol = 1.0;
        let mut mid = vec![0.0; m];
        for k in 0..m {
            vol *= cuts[k][idx[k] + 1] - cuts[k][idx[k]];
            mid[k] = 0.5 * (cuts[k][idx[k] + 1] + cuts[k][idx[k]]);
        }
        if covers
            .iter()
            .any(|(l, h)| (0..m).all(|k| l[k] < mid[k] && mid[k] < h[k]))
        {
            total += vol;
        }
        for k in 0..m {
            idx[k] += 1;
            if idx[k] + 1 < cuts[k].len() {
                continue 'cells;
            }
            idx[k] = 0;
        }
        break;
    }
    total
}

/// Parameter range t ∈ [0, 1] of a + t(b − a) inside the window.
fn clip_to_window(a: &Vector, b: &Vector, w: &Window) -> Option<(f64, f64)> {
    let wl = w.lo();
    let wh = w.hi();
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for c in 0..a.len() {
        let dx = b[c] - a[c];
        if dx == 0.0 {
            if a[c] < wl[c] || a[c] > wh[c] {
                return None;
            }
            continue;
        }
        let (s0, s1) = ((wl[c] - a[c]) / dx, (wh[c] - a[c]) / dx);
        t0 = t0.max(s0.min(s1));
        t1 = t1.min(s0.max(s1));
    }
    (t0 < t1).then_some((t0, t1))
}

/// Open parameter interval of a + t(b − a) inside the interior of `p`.
fn interior_interval(a: &Vector, b: &Vector, p: &Polytope) -> Option<(f64, f64)> {
    let e = b - a;
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for f in p.facets() {
        let num = f.offset - f.normal.dot(a);
        let den = f.normal.dot(&e);
        if den == 0.0 {
            if num <= 0.0 {
                return None;
            }
        } else if den > 0.0 {
            t1 = t1.min(num / den);
        } else {
            t0 = t0.max(num / den);
        }
    }
    (t0 < t1).then_some((t0, t1))
}

/// Length of [t0, t1] ∩ ∪ intervals.
fn covered_length(t0: f64, t1: f64, mut iv: Vec<(f64, f64)>) -> f64 {
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut reach = t0;
    for (a, b) in iv {
        let a = a.max(reach);
        let b = b.min(t1);
        if b > a {
            total += b - a;
            reach = b;
        }
    }
    total
}

fn polygons(real: &Realization, adj: &[Vec<usize>], acc: &mut Accumulator) {
    for (i, p) in real.particles.iter().enumerate() {
        for f in p.facets() {
            let tol = 1e-9 * (1.0 + f.offset.abs());
            let ends: Vec<&Vector> = p
                .vertices()
                .iter()
                .filter(|v| (f.normal.dot(v) - f.offset).abs() <= tol)
                .collect();
            if ends.len() < 2 {
                continue;
            }
            let (a, b) = (ends[0], ends[ends.len() - 1]);
            let Some((t0, t1)) = clip_to_window(a, b, &real.window) else {
                continue;
            };
            let iv: Vec<(f64, f64)> = adj[i]
                .iter()
                .filter_map(|&j| interior_interval(a, b, &real.particles[j]))
                .collect();
            let len = (b - a).norm();
            let exposed = (t1 - t0 - covered_length(t0, t1, iv)) * len;
            acc.add(f.normal.as_slice(), exposed);
        }
    }
}

type P3 = [f64; 3];

fn p3(v: &Vector) -> P3 {
    [v[0], v[1], v[2]]
}

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn solids<R: Rng>(real: &Realization, adj: &[Vec<usize>], points: usize, rng: &mut R, acc: &mut Accumulator) {
    let wl = real.window.lo();
    let wh = real.window.hi();
    let halfspaces: Vec<Vec<(P3, f64)>> = real
        .particles
        .iter()
        .map(|p| p.facets().iter().map(|f| (p3(&f.normal), f.offset)).collect())
        .collect();
    for (i, p) in real.particles.iter().enumerate() {
        let (pl, ph) = p.bounding_box();
        if !boxes_overlap(pl, ph, &wl, &wh) {
            continue;
        }
        let polys = p.facet_polygons();
        for (f, poly) in p.facets().iter().zip(&polys) {
            if poly.len() < 3 {
                continue;
            }
            let pts: Vec<P3> = poly.iter().map(p3).collect();
            let fl: Vec<f64> = (0..3).map(|c| pts.iter().map(|q| q[c]).fold(f64::INFINITY, f64::min)).collect();
            let fh: Vec<f64> = (0..3).map(|c| pts.iter().map(|q| q[c]).fold(f64::NEG_INFINITY, f64::max)).collect();
            if !boxes_overlap(&fl, &fh, &wl, &wh) {
                continue;
            }
            let covers: Vec<&[(P3, f64)]> = adj[i]
                .iter()
                .filter(|&&j| {
                    let (jl, jh) = real.particles[j].bounding_box();
                    boxes_overlap(&fl, &fh, jl, jh)
                })
                .map(|&j| halfspaces[j].as_slice())
                .collect();
            let inside = (0..3).all(|c| fl[c] >= wl[c] && fh[c] < wh[c]);
            if covers.is_empty() && inside {
                acc.add(f.normal.as_slice(), f.area);
                continue;
            }
            let exposed_at = |q: P3| {
                (0..3).all(|c| q[c] >= wl[c] && q[c] < wh[c])
                    && !covers.iter().any(|h| h.iter().all(|(n, o)| dot(*n, q) < *o))
            };
            // fan triangles, each split into s² congruent cells with one
            // uniform point per cell
            let ntri = pts.len() - 2;
            let s = ((points as f64 / ntri as f64).sqrt().ceil() as usize).max(1);
            let mut exposed = 0.0;
            for k in 1..pts.len() - 1 {
                let (a, b, c) = (pts[0], pts[k], pts[k + 1]);
                let (u, v) = (sub(b, a), sub(c, a));
                let cr = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let cell = 0.5 * dot(cr, cr).sqrt() / (s * s) as f64;
                let at = |x: f64, y: f64| {
                    let (x, y) = (x / s as f64, y / s as f64);
                    [a[0] + x * u[0] + y * v[0], a[1] + x * u[1] + y * v[1], a[2] + x * u[2] + y * v[2]]
                };
                let mut hits = 0usize;
                for r in 0..s {
                    for q in 0..s - r {
                        let (x, y) = unit_triangle(rng);
                        hits += exposed_at(at(r as f64 + x, q as f64 + y)) as usize;
                        if q + r + 1 < s {
                            let (x, y) = unit_triangle(rng);
                            hits += exposed_at(at(r as f64 + 1.0 - x, q as f64 + 1.0 - y)) as usize;
                        }
                    }
                }
                exposed += hits as f64 * cell;
            }
            acc.add(f.normal.as_slice(), exposed);
        }
    }
}

fn unit_triangle<R: Rng>(rng: &mut R) -> (f64, f64) {
    let (x, y): (f64, f64) = (rng.gen(), rng.gen());
    if x + y > 1.0 {
        (1.0 - x, 1.0 - y)
    } else {
        (x, y)
    }
}
