//! Enumeration of the nonempty intersections of particles by depth-first
//! search over the intersection graph, and the Euler characteristic of the
//! union by inclusion–exclusion.

use super::realization::{Realization, Window};
use crate::error::{Error, Result};
use crate::geom::Polytope;

/// Default cap on the number of visited subsets per realization.
pub const DEFAULT_SUBSET_BUDGET: u64 = 20_000_000;

/// A nonempty intersection ∩_{i∈I} Kᵢ handed to a visitor.
pub enum Cell<'a> {
    /// Intersection of axis-aligned boxes.
    Box { lo: &'a [f64], hi: &'a [f64] },
    Poly(&'a Polytope),
}

impl Cell<'_> {
    pub fn steiner_point(&self) -> Vec<f64> {
        match self {
            Cell::Box { lo, hi } => lo.iter().zip(hi.iter()).map(|(a, b)| 0.5 * (a + b)).collect(),
            Cell::Poly(p) => p.steiner_point().as_slice().to_vec(),
        }
    }

    /// Support value h(cell, u).
    pub fn support(&self, u: &[f64]) -> f64 {
        match self {
            Cell::Box { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(x, (a, b))| (x * a).max(x * b))
                .sum(),
            Cell::Poly(p) => p
                .vertices()
                .iter()
                .map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Volume of the part inside the window.
    pub fn volume_in(&self, w: &Window) -> f64 {
        match self {
            Cell::Box { lo, hi } => {
                let wl = w.lo();
                let wh = w.hi();
                (0..lo.len())
                    .map(|c| (hi[c].min(wh[c]) - lo[c].max(wl[c])).max(0.0))
                    .product()
            }
            Cell::Poly(p) => {
                if !p.is_full_dimensional() {
                    return 0.0;
                }
                p.intersect(&w.to_polytope()).map_or(0.0, |q| q.volume())
            }
        }
    }
}

pub(crate) fn bbox(p: &Polytope) -> (Vec<f64>, Vec<f64>) {
    let (l, h) = p.bounding_box();
    (l.to_vec(), h.to_vec())
}

pub(crate) fn boxes_overlap(al: &[f64], ah: &[f64], bl: &[f64], bh: &[f64]) -> bool {
    (0..al.len()).all(|c| al[c] <= bh[c] && bl[c] <= ah[c])
}

/// For every box, the other boxes overlapping it (closed overlap).
pub(crate) fn overlap_graph(lo: &[Vec<f64>], hi: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = lo.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lo[a][0].total_cmp(&lo[b][0]).then(a.cmp(&b)));
    let mut adj = vec![Vec::new(); n];
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if lo[j][0] > hi[i][0] {
                break;
            }
            if boxes_overlap(&lo[i], &hi[i], &lo[j], &hi[j]) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Order by lower x-coordinate and list, for each particle, the later
/// particles whose bounding boxes overlap it.
fn neighbour_lists(lo: &[Vec<f64>], hi: &[Vec<f64>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = lo.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lo[a][0].total_cmp(&lo[b][0]).then(a.cmp(&b)));
    let mut nbrs = vec![Vec::new(); n];
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if lo[j][0] > hi[i][0] {
                break;
            }
            if boxes_overlap(&lo[i], &hi[i], &lo[j], &hi[j]) {
                nbrs[pos].push(j);
            }
        }
    }
    // store neighbours as positions in `order`
    let mut rank = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }
    let nbrs = nbrs
        .into_iter()
        .map(|v| {
            let mut v: Vec<usize> = v.into_iter().map(|j| rank[j]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    (order, nbrs)
}

/// Calls `visit(cell, |I|)` once for every index set I with ∩_{i∈I} Kᵢ
/// nonempty and meeting the closed window. Returns the number of visits.
pub fn visit_intersections<F>(particles: &[Polytope], window: &Window, budget: u64, mut visit: F) -> Result<u64>
where
    F: FnMut(&Cell<'_>, usize),
{
    let wl = window.lo();
    let wh = window.hi();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut keep = Vec::new();
    for p in particles {
        let (l, h) = bbox(p);
        if boxes_overlap(&l, &h, &wl, &wh) {
            lo.push(l);
            hi.push(h);
            keep.push(p);
        }
    }
    let (order, nbrs) = neighbour_lists(&lo, &hi);
    let mut count = 0u64;
    let all_boxes = keep.iter().all(|p| p.as_axis_box().is_some());
    if all_boxes {
        let blo: Vec<&Vec<f64>> = order.iter().map(|&i| &lo[i]).collect();
        let bhi: Vec<&Vec<f64>> = order.iter().map(|&i| &hi[i]).collect();
        let d = window.dim();
        for first in 0..blo.len() {
            let mut cur_lo = blo[first].clone();
            let mut cur_hi = bhi[first].clone();
            box_dfs(
                &blo, &bhi, &nbrs[first], 0, &mut cur_lo, &mut cur_hi, 1, d, &mut count, budget, &mut visit,
            )?;
        }
    } else {
        let w = window.to_polytope();
        let sorted: Vec<&Polytope> = order.iter().map(|&i| keep[i]).collect();
        for first in 0..sorted.len() {
            let cur = sorted[first].clone();
            if !meets_window(&cur, &w) {
                continue;
            }
            poly_dfs(&sorted, &nbrs[first], 0, &cur, 1, &w, &mut count, budget, &mut visit)?;
        }
    }
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn box_dfs<F: FnMut(&Cell<'_>, usize)>(
    lo: &[&Vec<f64>],
    hi: &[&Vec<f64>],
    cands: &[usize],
    start: usize,
    cur_lo: &mut Vec<f64>,
    cur_hi: &mut Vec<f64>,
    size: usize,
    d: usize,
    count: &mut u64,
    budget: u64,
    visit: &mut F,
) -> Result<()> {
    *count += 1;
    if *count > budget {
        return Err(Error::BudgetExceeded { budget });
    }
    visit(&Cell::Box { lo: cur_lo, hi: cur_hi }, size);
    for (k, &j) in cands.iter().enumerate().skip(start) {
        let mut nl = cur_lo.clone();
        let mut nh = cur_hi.clone();
        let mut ok = true;
        for c in 0..d {
            nl[c] = nl[c].max(lo[j][c]);
            nh[c] = nh[c].min(hi[j][c]);
            if nl[c] > nh[c] {
                ok = false;
                break;
            }
        }
        if ok {
            box_dfs(lo, hi, cands, k + 1, &mut nl, &mut nh, size + 1, d, count, budget, visit)?;
        }
    }
    Ok(())
}

fn meets_window(p: &Polytope, w: &Polytope) -> bool {
    let (pl, ph) = p.bounding_box();
    let (wl, wh) = w.bounding_box();
    if !boxes_overlap(pl, ph, wl, wh) {
        return false;
    }
    if (0..pl.len()).all(|c| pl[c] >= wl[c] && ph[c] <= wh[c]) {
        return true;
    }
    p.intersect(w).is_some()
}

#[allow(clippy::too_many_arguments)]
fn poly_dfs<F: FnMut(&Cell<'_>, usize)>(
    sorted: &[&Polytope],
    cands: &[usize],
    start: usize,
    cur: &Polytope,
    size: usize,
    w: &Polytope,
    count: &mut u64,
    budget: u64,
    visit: &mut F,
) -> Result<()> {
    *count += 1;
    if *count > budget {
        return Err(Error::BudgetExceeded { budget });
    }
    visit(&Cell::Poly(cur), size);
    let (cl, ch) = cur.bounding_box();
    for (k, &j) in cands.iter().enumerate().skip(start) {
        let (jl, jh) = sorted[j].bounding_box();
        if !boxes_overlap(cl, ch, jl, jh) {
            continue;
        }
        if let Some(next) = cur.intersect(sorted[j]) {
            if meets_window(&next, w) {
                poly_dfs(sorted, cands, k + 1, &next, size + 1, w, count, budget, visit)?;
            }
        }
    }
    Ok(())
}

/// Euler characteristic of (∪ particles) ∩ window:
/// Σ over nonempty intersections of (−1)^{|I|+1}.
pub fn union_euler(real: &Realization, budget: u64) -> Result<i64> {
    let mut chi = 0i64;
    visit_intersections(&real.particles, &real.window, budget, |_, size| {
        chi += if size % 2 == 1 { 1 } else { -1 };
    })?;
    Ok(chi)
}
