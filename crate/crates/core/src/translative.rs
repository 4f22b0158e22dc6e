//! Translative mixed functionals V_{m₁,…,m_k}: closed forms for boxes,
//! the pair relation to mixed volumes, grid oracles for the iterated
//! translative integral, and the angle-integral representations in d = 2, 3.

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::sphere::{det2, det3, spherical_triangle_area};
use crate::geom::{mixed_volume, DiscreteSphericalMeasure, Polytope, Vector};

/// Normalisation of the planar angle integral. Calibrated on rectangle pairs
/// against V_{1,1}(K, M) = a₁b₂ + a₂b₁; see `calibration` tests.
pub const KAPPA2: f64 = 1.0 / (2.0 * std::f64::consts::PI);

/// Normalisation of the spatial angle integral. Calibrated on box triples
/// against the closed form for V_{2,2,2} and the dilation oracle.
pub const KAPPA3: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// Relative error above which a grid oracle refuses to return a value.
pub const ORACLE_MAX_REL_ERROR: f64 = 0.1;

/// A tuple (m₁, …, m_k) of homogeneity degrees with Σmᵢ = (k−1)d + j.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MixedIndex {
    entries: Vec<usize>,
    j: usize,
    d: usize,
}

impl MixedIndex {
    /// Validates the degree balance and that every mᵢ lies in [j, d].
    pub fn new(entries: Vec<usize>, j: usize, d: usize) -> Result<Self> {
        let k = entries.len();
        let fail = |reason: String| Error::InvalidIndex {
            entries: entries.clone(),
            dim: d,
            reason,
        };
        if k == 0 {
            return Err(fail("empty index".into()));
        }
        if j > d {
            return Err(fail(format!("j = {j} exceeds d = {d}")));
        }
        let sum: usize = entries.iter().sum();
        if sum != (k - 1) * d + j {
            return Err(fail(format!(
                "sum {sum} differs from (k-1)d + j = {}",
                (k - 1) * d + j
            )));
        }
        if let Some(&m) = entries.iter().find(|&&m| m < j || m > d) {
            return Err(fail(format!("entry {m} outside [{j}, {d}]")));
        }
        Ok(Self { entries, j, d })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Membership in mix(j, k): either the singleton (j), or k ≥ 2 with all
    /// entries in {j+1, …, d−1}.
    pub fn in_mix(&self) -> bool {
        match self.k() {
            1 => self.entries[0] == self.j,
            _ => self.entries.iter().all(|&m| m > self.j && m < self.d),
        }
    }
}

/// All tuples of mix(j, k) in lexicographic order.
pub fn mix(j: usize, k: usize, d: usize) -> Vec<MixedIndex> {
    if k == 0 || j > d {
        return Vec::new();
    }
    if k == 1 {
        return vec![MixedIndex::new(vec![j], j, d).unwrap()];
    }
    let target = (k - 1) * d + j;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(
        cur: &mut Vec<usize>,
        k: usize,
        remaining: usize,
        lo: usize,
        hi: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for m in lo..=hi {
            if m > remaining {
                break;
            }
            cur.push(m);
            rec(cur, k, remaining - m, lo, hi, out);
            cur.pop();
        }
    }
    if j + 1 <= d.saturating_sub(1) {
        rec(&mut cur, k, target, j + 1, d - 1, &mut out);
    }
    out.into_iter()
        .map(|e| MixedIndex::new(e, j, d).unwrap())
        .collect()
}

/// Edge lengths of an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub edges: Vec<f64>,
}

impl BoxSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidPolytope(format!(
                "box edges must be positive, got {edges:?}"
            )));
        }
        Ok(Self { edges })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            edges: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn to_polytope(&self) -> Polytope {
        Polytope::centered_box(&self.edges)
    }

    /// Edge lengths of an axis-aligned polytope, if it is one.
    pub fn of(p: &Polytope) -> Option<Self> {
        let (lo, hi) = p.as_axis_box()?;
        Some(Self {
            edges: lo.iter().zip(hi).map(|(a, b)| b - a).collect(),
        })
    }
}

/// V_{m,d−m}(K, M) = C(d, m)·V(K[m], M*[d−m]).
pub fn mixed_functional_pair(m: usize, k: &Polytope, mbody: &Polytope) -> Result<f64> {
    let d = k.dim();
    if m > d {
        return Err(Error::InvalidIndex {
            entries: vec![m, 0],
            dim: d,
            reason: format!("m = {m} exceeds d"),
        });
    }
    let reflected = mbody.reflect();
    let v = mixed_volume(&[(k, m), (&reflected, d - m)])?;
    Ok(binomial(d, m) as f64 * v)
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Exact value of V_{m₁,…,m_k}(B₁, …, B_k) for axis-aligned boxes.
///
/// Per coordinate, ∫ 1{k intervals meet} over k−1 translations equals
/// e_{k−1}(a₁, …, a_k) and the integrated overlap length equals Πaᵢ.
/// Expanding V_j of the intersection as Σ_S Π_{c∈S} length_c and sorting
/// the terms by their degree in each body gives a sum over j-subsets S of
/// coordinates and assignments ε of the remaining coordinates to bodies with
/// exactly d − mᵢ coordinates assigned to body i.
pub fn mixed_functional_boxes_exact(m: &MixedIndex, boxes: &[BoxSpec]) -> Result<BigRational> {
    let d = m.dim();
    let k = m.k();
    if boxes.len() != k {
        return Err(Error::InvalidIndex {
            entries: m.entries.clone(),
            dim: d,
            reason: format!("{} boxes for an index of length {k}", boxes.len()),
        });
    }
    if boxes.iter().any(|b| b.dim() != d) {
        return Err(Error::InvalidPolytope("box dimension mismatch".into()));
    }
    let a: Vec<Vec<BigRational>> = boxes
        .iter()
        .map(|b| {
            b.edges
                .iter()
                .map(|&e| BigRational::from_float(e).expect("finite edge"))
                .collect()
        })
        .collect();
    let free: Vec<usize> = m.entries.iter().map(|&mi| d - mi).collect();
    let mut total = BigRational::zero();
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize != m.j() {
            continue;
        }
        let mut base = BigRational::from_integer(BigInt::from(1));
        let mut rest = Vec::new();
        for c in 0..d {
            if mask >> c & 1 == 1 {
                for row in &a {
                    base *= &row[c];
                }
            } else {
                rest.push(c);
            }
        }
        let mut counts = free.clone();
        total += base * assign(&rest, 0, &mut counts, &a);
    }
    Ok(total)
}

/// Σ over assignments of `coords[pos..]` to bodies respecting `counts` of
/// Π_c Π_{l ≠ ε(c)} a_{l,c}.
fn assign(coords: &[usize], pos: usize, counts: &mut [usize], a: &[Vec<BigRational>]) -> BigRational {
    if pos == coords.len() {
        return if counts.iter().all(|&c| c == 0) {
            BigRational::from_integer(BigInt::from(1))
        } else {
            BigRational::zero()
        };
    }
    let c = coords[pos];
    let mut sum = BigRational::zero();
    for i in 0..counts.len() {
        if counts[i] == 0 {
            continue;
        }
        counts[i] -= 1;
        let sub = assign(coords, pos + 1, counts, a);
        counts[i] += 1;
        if sub.is_zero() {
            continue;
        }
        let mut f = BigRational::from_integer(BigInt::from(1));
        for (l, row) in a.iter().enumerate() {
            if l != i {
                f *= &row[c];
            }
        }
        sum += f * sub;
    }
    sum
}

/// Floating-point value of [`mixed_functional_boxes_exact`].
pub fn mixed_functional_boxes(m: &MixedIndex, boxes: &[BoxSpec]) -> Result<f64> {
    let v = mixed_functional_boxes_exact(m, boxes)?;
    Ok(v.to_f64().unwrap_or(f64::NAN))
}

/// A numerically integrated value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub error: f64,
}

/// Midpoint rule over a box domain with about `h` cell size per axis.
/// The outer axis is split into chunks evaluated in parallel and summed in
/// order, so the result does not depend on the thread count.
fn midpoint_grid<F>(lo: &[f64], hi: &[f64], h: f64, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dims = lo.len();
    let n: Vec<usize> = (0..dims)
        .map(|c| (((hi[c] - lo[c]) / h).ceil() as usize).max(1))
        .collect();
    let step: Vec<f64> = (0..dims).map(|c| (hi[c] - lo[c]) / n[c] as f64).collect();
    let cell: f64 = step.iter().product();
    let inner: usize = n[1..].iter().product();
    let partial: Vec<f64> = (0..n[0])
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; dims];
            x[0] = lo[0] + (i0 as f64 + 0.5) * step[0];
            let mut s = 0.0;
            for mut idx in 0..inner {
                for c in 1..dims {
                    x[c] = lo[c] + ((idx % n[c]) as f64 + 0.5) * step[c];
                    idx /= n[c];
                }
                s += f(&x);
            }
            s
        })
        .collect();
    partial.iter().sum::<f64>() * cell
}

/// Midpoint rule on [min, max] of `breaks` with the breakpoints as cell
/// boundaries, so piecewise linear integrands with those kinks are
/// integrated exactly.
fn piecewise_midpoint<F: Fn(f64) -> f64>(breaks: &[f64], h: f64, f: F) -> f64 {
    let mut b = breaks.to_vec();
    b.sort_by(f64::total_cmp);
    b.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            let step = (w[1] - w[0]) / n as f64;
            (0..n).map(|i| f(w[0] + (i as f64 + 0.5) * step)).sum::<f64>() * step
        })
        .sum()
}

/// Evaluates at resolutions h and h/2 and extrapolates assuming second-order
/// convergence.
fn richardson<F: Fn(f64) -> f64>(h: f64, eval: F) -> Result<OracleValue> {
    let coarse = eval(h);
    let fine = eval(0.5 * h);
    let value = (4.0 * fine - coarse) / 3.0;
    let error = (fine - coarse).abs();
    if error > ORACLE_MAX_REL_ERROR * value.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::PrecisionFailure {
            estimate: value,
            error,
        });
    }
    Ok(OracleValue { value, error })
}

/// Separating-axis test for K ∩ (M + x) ≠ ∅ with precomputed support values.
struct SeparatingAxes {
    axes: Vec<Vector>,
    hk_plus: Vec<f64>,
    hk_minus: Vec<f64>,
    hm_plus: Vec<f64>,
    hm_minus: Vec<f64>,
}

impl SeparatingAxes {
    fn new(k: &Polytope, m: &Polytope) -> Self {
        let d = k.dim();
        let mut axes: Vec<Vector> = Vec::new();
        let mut push = |a: Vector| {
            let n = a.norm();
            if n > 1e-12 {
                axes.push(a / n);
            }
        };
        for p in [k, m] {
            for f in p.facets() {
                push(f.normal.clone());
            }
            if let Some(n) = p.hyperplane_normal() {
                push(n);
            }
        }
        if d == 3 {
            let ek = edge_directions(k);
            let em = edge_directions(m);
            for a in &ek {
                for b in &em {
                    push(a.cross(b));
                }
            }
            // lower-dimensional bodies need their in-plane normals too
            for (p, es) in [(k, &ek), (m, &em)] {
                if let Some(n) = p.hyperplane_normal() {
                    for e in es.iter() {
                        push(n.cross(e));
                    }
                }
            }
        }
        if d == 2 {
            for p in [k, m] {
                if p.affine_dim() == 1 {
                    let e = &p.vertices()[1] - &p.vertices()[0];
                    push(DVector::from_vec(vec![-e[1], e[0]]));
                }
            }
        }
        let hk_plus = axes.iter().map(|a| k.support(a)).collect();
        let hk_minus = axes.iter().map(|a| k.support(&(-a))).collect();
        let hm_plus = axes.iter().map(|a| m.support(a)).collect();
        let hm_minus = axes.iter().map(|a| m.support(&(-a))).collect();
        Self {
            axes,
            hk_plus,
            hk_minus,
            hm_plus,
            hm_minus,
        }
    }

    fn meet(&self, x: &[f64]) -> bool {
        for (i, a) in self.axes.iter().enumerate() {
            let t: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
            // M + x projects onto [−h_M(−a) + t, h_M(a) + t]
            if self.hm_plus[i] + t < -self.hk_minus[i] || -self.hm_minus[i] + t > self.hk_plus[i] {
                return false;
            }
        }
        true
    }
}

fn edge_directions(p: &Polytope) -> Vec<Vector> {
    let v = p.vertices();
    p.edges().into_iter().map(|(i, j)| &v[j] - &v[i]).collect()
}

/// Support-based bounding box of {x : K ∩ (M + x) ≠ ∅} = K ⊕ M*.
fn translation_domain(k: &Polytope, m: &Polytope) -> (Vec<f64>, Vec<f64>) {
    let (kl, kh) = k.bounding_box();
    let (ml, mh) = m.bounding_box();
    let lo = kl.iter().zip(mh).map(|(a, b)| a - b).collect();
    let hi = kh.iter().zip(ml).map(|(a, b)| a - b).collect();
    (lo, hi)
}

/// Numerical value of ∫…∫ V_j(K₁ ∩ (K₂ + x₂) ∩ … ∩ (K_k + x_k)) dx₂…dx_k by
/// midpoint grids with cell size `resolution` and h/2, extrapolated.
pub fn translative_oracle(j: usize, bodies: &[Polytope], resolution: f64) -> Result<OracleValue> {
    let k = bodies.len();
    if k < 2 {
        return Err(Error::Unsupported("at least two bodies are required".into()));
    }
    let d = bodies[0].dim();
    if bodies.iter().any(|b| b.dim() != d) {
        return Err(Error::InvalidPolytope("dimension mismatch".into()));
    }
    if j > d {
        return Err(Error::Unsupported(format!("j = {j} exceeds d = {d}")));
    }
    if let Some(boxes) = bodies.iter().map(BoxSpec::of).collect::<Option<Vec<_>>>() {
        return richardson(resolution, |h| box_oracle(j, &boxes, h));
    }
    if d == 4 {
        return Err(Error::Unsupported(
            "grid oracle in dimension 4 requires boxes".into(),
        ));
    }
    if k > 2 && j > 0 {
        return Err(Error::Unsupported("j > 0 needs exactly two bodies".into()));
    }
    match (k, j) {
        (2, 0) => {
            let axes = SeparatingAxes::new(&bodies[0], &bodies[1]);
            let (lo, hi) = translation_domain(&bodies[0], &bodies[1]);
            richardson(resolution, |h| {
                midpoint_grid(&lo, &hi, h, |x| if axes.meet(x) { 1.0 } else { 0.0 })
            })
        }
        (2, _) => {
            let (lo, hi) = translation_domain(&bodies[0], &bodies[1]);
            let (a, b) = (&bodies[0], &bodies[1]);
            if !b.is_full_dimensional() && !a.is_full_dimensional() {
                return Err(Error::Unsupported(
                    "at least one body must be full-dimensional".into(),
                ));
            }
            richardson(resolution, |h| {
                midpoint_grid(&lo, &hi, h, |x| {
                    let shifted = b.translate(&DVector::from_column_slice(x));
                    let cut = if shifted.is_full_dimensional() {
                        a.intersect(&shifted)
                    } else {
                        shifted.intersect(a)
                    };
                    cut.map_or(0.0, |c| c.intrinsic_volumes().map_or(0.0, |v| v[j]))
                })
            })
        }
        _ => {
            // integrate the first k−2 translations on the grid; the last one
            // is done exactly via ∫1{N ∩ (K + x) ≠ ∅} dx = vol(N ⊕ K*)
            let last = bodies[k - 1].reflect();
            let (mut lo, mut hi) = (Vec::new(), Vec::new());
            for b in &bodies[1..k - 1] {
                let (l, h) = translation_domain(&bodies[0], b);
                lo.extend(l);
                hi.extend(h);
            }
            richardson(resolution, |h| {
                midpoint_grid(&lo, &hi, h, |x| {
                    let mut cur = Some(bodies[0].clone());
                    for (i, b) in bodies[1..k - 1].iter().enumerate() {
                        let t = DVector::from_column_slice(&x[i * d..(i + 1) * d]);
                        cur = cur.and_then(|c| c.intersect(&b.translate(&t)));
                    }
                    cur.and_then(|c| c.minkowski_sum(&last).ok())
                        .map_or(0.0, |s| s.volume())
                })
            })
        }
    }
}

/// Box inputs: V_j(∩) = Σ_{|S|=j} Π_{c∈S} len_c Π_{c∉S} 1{meet_c} and the
/// translation integral factorises over coordinates.
fn box_oracle(j: usize, boxes: &[BoxSpec], h: f64) -> f64 {
    let d = boxes[0].dim();
    let k = boxes.len();
    let mut len_int = vec![0.0; d];
    let mut meet_int = vec![0.0; d];
    for c in 0..d {
        let a: Vec<f64> = boxes.iter().map(|b| b.edges[c]).collect();
        // translations of intervals [0, a_i] by t_i ∈ [−a_i, a_0]
        let lo: Vec<f64> = a[1..].iter().map(|x| -x).collect();
        let hi = vec![a[0]; k - 1];
        let overlap = |t: &[f64]| {
            let mut l = 0.0f64;
            let mut r = a[0];
            for (i, ti) in t.iter().enumerate() {
                l = l.max(*ti);
                r = r.min(ti + a[i + 1]);
            }
            r - l
        };
        len_int[c] = midpoint_grid(&lo, &hi, h, |t| overlap(t).max(0.0));
        meet_int[c] = midpoint_grid(&lo, &hi, h, |t| if overlap(t) >= 0.0 { 1.0 } else { 0.0 });
    }
    (0u32..1 << d)
        .filter(|mask| mask.count_ones() as usize == j)
        .map(|mask| {
            (0..d)
                .map(|c| if mask >> c & 1 == 1 { len_int[c] } else { meet_int[c] })
                .product::<f64>()
        })
        .sum()
}

/// κ₂ Σᵢ Σⱼ α(uᵢ, vⱼ)·|det(uᵢ, vⱼ)|·wᵢw'ⱼ with α the angle between the atoms.
/// Fed with S₁(K, ·) and S₁(M, ·) this is V_{1,1}(K, M).
pub fn angle_integral_2d(mu: &DiscreteSphericalMeasure, nu: &DiscreteSphericalMeasure) -> f64 {
    let mut s = 0.0;
    for a in &mu.atoms {
        for b in &nu.atoms {
            let alpha = crate::geom::sphere::angle(&a.direction, &b.direction);
            s += alpha * det2(&a.direction, &b.direction) * a.weight * b.weight;
        }
    }
    KAPPA2 * s
}

/// κ₃ ΣΣΣ α(u, v, w)·|det(u, v, w)|·weights with α the spherical triangle
/// area. Fed with S₂ of K, L, M this is V_{2,2,2}(K, L, M).
pub fn angle_integral_3d(
    mu: &DiscreteSphericalMeasure,
    nu: &DiscreteSphericalMeasure,
    rho: &DiscreteSphericalMeasure,
) -> f64 {
    let mut s = 0.0;
    for a in &mu.atoms {
        for b in &nu.atoms {
            for c in &rho.atoms {
                let det = det3(&a.direction, &b.direction, &c.direction);
                if det == 0.0 {
                    continue;
                }
                let alpha = spherical_triangle_area(&a.direction, &b.direction, &c.direction);
                s += alpha * det * a.weight * b.weight * c.weight;
            }
        }
    }
    KAPPA3 * s
}

/// Σᵢ h(−uᵢ)·wᵢ. With h the support function of K and mu = S₂(M, ·) in
/// d = 3 this is V_{1,2}(K, M).
pub fn support_area_integral<F: Fn(&Vector) -> f64>(h: F, mu: &DiscreteSphericalMeasure) -> f64 {
    mu.atoms.iter().map(|a| h(&(-a.dir())) * a.weight).sum()
}

/// Coefficients of the dilation expansion
/// ∫ V_{2,d−2}(L, (αK) ∩ (βM + x)) dx = Σ_{p+q = 2d−2} α^p β^q c_{p,q}.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationFit {
    /// (p, q, c_{p,q}) for q = d−2, d−1, d.
    pub coefficients: Vec<(usize, usize, f64)>,
    /// Largest fit residual over the sampled β values, relative to the
    /// largest sampled integral.
    pub residual: f64,
}

impl DilationFit {
    pub fn coefficient(&self, p: usize, q: usize) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.0 == p && c.1 == q)
            .map(|c| c.2)
    }

    /// The balanced coefficient c_{d−1,d−1}, i.e. V_{2,d−1,d−1}(L, K, M).
    pub fn balanced(&self) -> f64 {
        let q = self.coefficients[1].1;
        self.coefficient(q, q).expect("balanced term present")
    }
}

const DILATION_BETAS: [f64; 5] = [0.5, 0.75, 1.0, 1.5, 2.0];
const DILATION_MAX_RESIDUAL: f64 = 1e-3;

/// Extracts V_{2,d−1,d−1}(L, K, M) from the (α, β) expansion of
/// ∫ V_{2,d−2}(L, (αK) ∩ (βM + x)) dx. By homogeneity α is fixed to 1 and
/// the three coefficients in β are fitted by least squares on several β.
///
/// d = 4 requires boxes; the translation integral then factorises over
/// coordinates. d = 3 accepts polytopes with L full-dimensional, evaluating
/// V_{2,1}(L, N) = Σ_F h(N, −u_F)·area(F) on a spatial grid.
pub fn dilation_extract(
    l: &Polytope,
    k: &Polytope,
    m: &Polytope,
    resolution: f64,
) -> Result<DilationFit> {
    let d = l.dim();
    if k.dim() != d || m.dim() != d {
        return Err(Error::InvalidPolytope("dimension mismatch".into()));
    }
    let boxes = (BoxSpec::of(l), BoxSpec::of(k), BoxSpec::of(m));
    let integral = |beta: f64| -> Result<f64> {
        match &boxes {
            (Some(lb), Some(kb), Some(mb)) => Ok(dilation_boxes(lb, kb, mb, beta, resolution)),
            _ if d == 3 => dilation_polytopes_3d(l, k, m, beta, resolution),
            _ => Err(Error::Unsupported(
                "dilation extraction needs boxes or d = 3".into(),
            )),
        }
    };
    let qs = [d - 2, d - 1, d];
    let mut a = nalgebra::DMatrix::zeros(DILATION_BETAS.len(), 3);
    let mut rhs = DVector::zeros(DILATION_BETAS.len());
    for (r, &beta) in DILATION_BETAS.iter().enumerate() {
        rhs[r] = integral(beta)?;
        for (c, &q) in qs.iter().enumerate() {
            a[(r, c)] = beta.powi(q as i32);
        }
    }
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NumericConditioning {
            detail: e.to_string(),
            ratio: f64::INFINITY,
        })?;
    let fitted = &a * &sol;
    let scale = rhs.amax();
    let residual = if scale == 0.0 {
        0.0
    } else {
        (&fitted - &rhs).amax() / scale
    };
    if residual > DILATION_MAX_RESIDUAL {
        return Err(Error::PrecisionFailure {
            estimate: sol[1],
            error: residual,
        });
    }
    let p_total = 2 * d - 2;
    Ok(DilationFit {
        coefficients: qs
            .iter()
            .zip(sol.iter())
            .map(|(&q, &c)| (p_total - q, q, c))
            .collect(),
        residual,
    })
}

/// Box case. V_{2,d−2}(L, N) = Σ_{|A|=2} Π_{c∈A} l_c Π_{c∉A} n_c (the pair
/// closed form), and each factor integrates over its own coordinate: a
/// constant l_c against the indicator that the c-th intervals meet, n_c
/// against itself.
fn dilation_boxes(l: &BoxSpec, k: &BoxSpec, m: &BoxSpec, beta: f64, h: f64) -> f64 {
    let d = l.dim();
    let mut meet = vec![0.0; d];
    let mut len = vec![0.0; d];
    for c in 0..d {
        let a = k.edges[c];
        let b = beta * m.edges[c];
        let overlap = |t: f64| (a.min(t + b) - t.max(0.0)).max(0.0);
        let breaks = [-b, a - b, 0.0, a];
        len[c] = piecewise_midpoint(&breaks, h, overlap);
        meet[c] = piecewise_midpoint(&breaks, h, |t| {
            if a.min(t + b) >= t.max(0.0) {
                1.0
            } else {
                0.0
            }
        });
    }
    (0u32..1 << d)
        .filter(|mask| mask.count_ones() == 2)
        .map(|mask| {
            (0..d)
                .map(|c| {
                    if mask >> c & 1 == 1 {
                        l.edges[c] * meet[c]
                    } else {
                        len[c]
                    }
                })
                .product::<f64>()
        })
        .sum()
}

fn dilation_polytopes_3d(l: &Polytope, k: &Polytope, m: &Polytope, beta: f64, h: f64) -> Result<f64> {
    if !l.is_full_dimensional() || !k.is_full_dimensional() || !m.is_full_dimensional() {
        return Err(Error::Unsupported(
            "dilation extraction in d = 3 needs full-dimensional bodies".into(),
        ));
    }
    let mb = m.scale(beta);
    let facets: Vec<(Vector, f64)> = l
        .facets()
        .iter()
        .map(|f| (-f.normal.clone(), f.area))
        .collect();
    let (lo, hi) = translation_domain(k, &mb);
    Ok(midpoint_grid(&lo, &hi, h, |x| {
        let shifted = mb.translate(&DVector::from_column_slice(x));
        match k.intersection_points(&shifted) {
            Some(pts) => facets
                .iter()
                .map(|(u, a)| {
                    let h = pts.iter().map(|p| p.dot(u)).fold(f64::NEG_INFINITY, f64::max);
                    h * a
                })
                .sum(),
            None => 0.0,
        }
    }))
}
