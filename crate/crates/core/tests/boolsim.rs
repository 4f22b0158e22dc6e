mod common;

use boolmodel::boolsim::*;
use boolmodel::geom::{vector, Polytope};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Euler characteristic of (∪ boxes) ∩ window from the cell complex induced
/// by all box and window coordinates: every open cell (a product of grid
/// points and open grid intervals) is either inside the union or disjoint
/// from it, and χ = Σ (−1)^{dim cell} over the covered cells.
fn cubical_euler(boxes: &[(Vec<f64>, Vec<f64>)], wlo: &[f64], whi: &[f64]) -> i64 {
    let d = wlo.len();
    let grid: Vec<Vec<f64>> = (0..d)
        .map(|c| {
            let mut v = vec![wlo[c], whi[c]];
            for (l, h) in boxes {
                v.extend([l[c], h[c]]);
            }
            v.retain(|x| *x >= wlo[c] && *x <= whi[c]);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    // position 2i is grid point i, 2i+1 the open interval after it
    let sizes: Vec<usize> = grid.iter().map(|g| 2 * g.len() - 1).collect();
    let mut chi = 0;
    let mut idx = vec![0usize; d];
    loop {
        let mid: Vec<f64> = (0..d)
            .map(|c| {
                let g = &grid[c];
                let i = idx[c] / 2;
                if idx[c] % 2 == 0 {
                    g[i]
                } else {
                    0.5 * (g[i] + g[i + 1])
                }
            })
            .collect();
        let covered = boxes
            .iter()
            .any(|(l, h)| (0..d).all(|c| l[c] <= mid[c] && mid[c] <= h[c]));
        if covered {
            let dim = idx.iter().filter(|&&i| i % 2 == 1).count();
            chi += if dim % 2 == 0 { 1 } else { -1 };
        }
        let mut c = 0;
        while c < d {
            idx[c] += 1;
            if idx[c] < sizes[c] {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
        if c == d {
            return chi;
        }
    }
}

fn boxes_of(real: &Realization) -> Vec<(Vec<f64>, Vec<f64>)> {
    real.particles
        .iter()
        .map(|p| {
            let (l, h) = p.as_axis_box().unwrap();
            (l.to_vec(), h.to_vec())
        })
        .collect()
}

fn within(est: &DensityRow, expect: f64, k: f64) -> bool {
    (est.estimate - expect).abs() <= k * est.stderr.max(1e-12)
}

fn rotation2(t: f64) -> DMatrix<f64> {
    let (s, c) = t.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[test]
fn poisson_count_mean() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let model = GrainModel::deterministic(sq, 1.0).unwrap();
    let w = Window::cube(2, 2.0);
    let n = 10_000;
    let counts: Vec<f64> = (0..n)
        .map(|r| sample_realization(&model, &w, 3, r).unwrap().particles.len() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let expect = w.dilated(model.max_radius()).volume();
    // Poisson variance equals the mean
    assert!((mean - expect).abs() < 3.0 * (expect / n as f64).sqrt(), "{mean} vs {expect}");
}

#[test]
fn tiny_intensity_is_empty_and_sampling_is_reproducible() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let w = Window::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let empty = GrainModel::deterministic(sq.clone(), 1e-9).unwrap();
    assert!(sample_realization(&empty, &w, 1, 0).unwrap().particles.is_empty());
    let model = GrainModel::new(
        vec![(sq, 1.0)],
        RotationLaw::Uniform,
        ScalingLaw::LogNormal { mu: 0.0, sigma: 0.2 },
        3.0,
    )
    .unwrap();
    let a = sample_realization(&model, &w, 9, 4).unwrap();
    let b = sample_realization(&model, &w, 9, 4).unwrap();
    assert_eq!(a.particles, b.particles);
    let sw = &a.sampling_window;
    for p in &a.particles {
        let (l, h) = p.bounding_box();
        assert!((0..2).all(|c| l[c] <= sw.hi()[c] && h[c] >= sw.lo()[c]));
    }
}

#[test]
fn three_turned_squares_enclose_a_hole() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let ring: Vec<Polytope> = (0..3)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 3.0;
            sq.translate(&vector(&[0.75, 0.0]))
                .rotate(&rotation2(t))
                .translate(&vector(&[5.0, 5.0]))
        })
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(ring[i].intersect(&ring[j]).is_some());
        }
    }
    assert!(ring[0].intersect(&ring[1]).unwrap().intersect(&ring[2]).is_none());
    let w = Window::cube(2, 10.0);
    let real = Realization {
        particles: ring,
        sampling_window: w.clone(),
        window: w,
        seed: 0,
        replication: 0,
    };
    assert_eq!(union_euler(&real, 1000).unwrap(), 0);
}

#[test]
fn euler_matches_cubical_complex_on_simulated_boxes() {
    let shapes = vec![
        (Polytope::centered_box(&[1.0, 1.0]), 0.5),
        (Polytope::centered_box(&[2.0, 0.4]), 0.3),
        (Polytope::centered_box(&[0.3, 1.5]), 0.2),
    ];
    let model = GrainModel::new(shapes, RotationLaw::None, ScalingLaw::Fixed, 0.8).unwrap();
    let w = Window::cube(2, 5.0);
    for rep in 0..25 {
        let real = sample_realization(&model, &w, 21, rep).unwrap();
        let chi = union_euler(&real, 1 << 24).unwrap();
        assert_eq!(chi, cubical_euler(&boxes_of(&real), &w.lo(), &w.hi()), "replication {rep}");
    }
    let cubes = GrainModel::new(
        vec![(Polytope::centered_box(&[1.0, 0.5, 1.0]), 1.0)],
        RotationLaw::None,
        ScalingLaw::Discrete { values: vec![0.5, 1.5], probabilities: vec![0.5, 0.5] },
        0.6,
    )
    .unwrap();
    let w3 = Window::cube(3, 2.5);
    for rep in 0..6 {
        let real = sample_realization(&cubes, &w3, 22, rep).unwrap();
        let chi = union_euler(&real, 1 << 24).unwrap();
        assert_eq!(chi, cubical_euler(&boxes_of(&real), &w3.lo(), &w3.hi()), "replication {rep}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn euler_of_random_boxes(raw in prop::collection::vec((0u8..12, 0u8..12, 1u8..6, 1u8..6), 1..14)) {
        // integer coordinates make shared edges and touching corners common
        let particles: Vec<Polytope> = raw
            .iter()
            .map(|&(x, y, a, b)| Polytope::axis_box(vec![x as f64, y as f64], vec![(x + a) as f64, (y + b) as f64]))
            .collect();
        let w = Window::new(vec![1.0, 1.0], vec![10.0, 10.0]).unwrap();
        let real = Realization { particles, sampling_window: w.clone(), window: w.clone(), seed: 0, replication: 0 };
        let chi = union_euler(&real, 1 << 24).unwrap();
        prop_assert_eq!(chi, cubical_euler(&boxes_of(&real), &w.lo(), &w.hi()));
    }
}

#[test]
fn exposed_boundary_of_a_lone_square() {
    let sq = Polytope::axis_box(vec![2.0, 2.0], vec![3.0, 3.0]);
    let w = Window::cube(2, 10.0);
    let real = Realization {
        particles: vec![sq.clone(), sq.translate(&vector(&[0.2, 0.1]))],
        sampling_window: w.clone(),
        window: w.clone(),
        seed: 0,
        replication: 0,
    };
    let lone = Realization { particles: vec![sq], ..real.clone() };
    let m = exposed_boundary_measure(&lone, 0);
    assert_eq!(m.atoms.len(), 4);
    assert!(m.atoms.iter().all(|a| (a.weight - 1.0 / w.volume()).abs() < 1e-15));
    let pair = exposed_boundary_measure(&real, 0);
    assert!(pair.total_mass() < 8.0 / w.volume());
}

#[test]
fn volume_fraction_is_unbiased() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let tri = Polytope::from_points(2, vec![vector(&[0.0, 0.0]), vector(&[2.0, 0.0]), vector(&[0.0, 1.0])]).unwrap();
    let models = vec![
        (GrainModel::deterministic(sq, 0.5).unwrap(), 12.0),
        (
            GrainModel::new(vec![(tri, 1.0)], RotationLaw::Uniform, ScalingLaw::Fixed, 0.7).unwrap(),
            12.0,
        ),
        (
            GrainModel::new(
                vec![(Polytope::centered_box(&[1.0, 1.0, 1.0]), 0.5), (Polytope::centered_box(&[2.0, 1.0, 0.5]), 0.5)],
                RotationLaw::None,
                ScalingLaw::Fixed,
                0.3,
            )
            .unwrap(),
            5.0,
        ),
    ];
    let mut settings = EstimatorSettings::new(200, 31);
    settings.boundary = false;
    for (model, side) in models {
        let d = model.dim();
        let t = estimate_densities(&model, &Window::cube(d, side), &[], &settings).unwrap();
        let row = t.get(&format!("Z:V{d}"), None).unwrap();
        let vd = boolmodel::boolsim::forward::intrinsic_densities(&model).unwrap()[d];
        let expect = 1.0 - (-vd).exp();
        assert!(within(row, expect, 3.0), "{} ± {} vs {expect}", row.estimate, row.stderr);
    }
}

#[test]
fn planar_estimates_match_forward_formulas() {
    let tri = Polytope::from_points(2, vec![vector(&[0.0, 0.0]), vector(&[2.0, 0.0]), vector(&[0.0, 1.0])]).unwrap();
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let tests = vec![TestBody::new("sq", &sq), TestBody::new("tri", &tri)];
    let fixed = GrainModel::deterministic(tri.clone(), 0.5).unwrap();
    let turning = GrainModel::new(vec![(sq.clone(), 1.0)], RotationLaw::Uniform, ScalingLaw::Fixed, 0.5).unwrap();
    for model in [fixed, turning] {
        let est = estimate_densities(&model, &Window::cube(2, 16.0), &tests, &EstimatorSettings::new(120, 8)).unwrap();
        let fwd = forward_densities(&model, &tests).unwrap();
        for row in &est.rows {
            let f = fwd.value(&row.quantity, row.test_body.as_deref()).unwrap();
            assert!(within(row, f, 3.5), "{row:?} vs {f}");
        }
    }
}

#[test]
fn isotropic_planar_euler_density() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let g = 0.4;
    let model = GrainModel::new(vec![(sq, 1.0)], RotationLaw::Uniform, ScalingLaw::Fixed, g).unwrap();
    let est = estimate_densities(&model, &Window::cube(2, 16.0), &[], &EstimatorSettings::new(120, 12)).unwrap();
    // V̄₁(X) = 2γ and V̄₂(X) = γ for unit squares
    let expect = (-g).exp() * (g - (2.0 * g).powi(2) / std::f64::consts::PI);
    assert!(within(est.get("Z:V0", None).unwrap(), expect, 3.0));
}

#[test]
fn spatial_estimates_match_forward_formulas() {
    let c = Polytope::centered_box(&[1.0, 1.0, 1.0]);
    let tet = Polytope::from_points(
        3,
        vec![vector(&[0.0, 0.0, 0.0]), vector(&[1.0, 0.0, 0.0]), vector(&[0.0, 1.0, 0.0]), vector(&[0.0, 0.0, 1.0])],
    )
    .unwrap();
    let tests = vec![TestBody::new("c", &c), TestBody::new("tet", &tet)];
    let boxes = GrainModel::new(
        vec![(c.clone(), 0.5), (Polytope::centered_box(&[2.0, 1.0, 0.5]), 0.5)],
        RotationLaw::None,
        ScalingLaw::Fixed,
        0.3,
    )
    .unwrap();
    let tets = GrainModel::deterministic(tet.scale(1.5), 0.4).unwrap();
    let mut settings = EstimatorSettings::new(80, 5);
    for (model, side, reps) in [(boxes, 8.0, 80), (tets, 6.0, 8)] {
        settings.reps = reps;
        let est = estimate_densities(&model, &Window::cube(3, side), &tests, &settings).unwrap();
        let fwd = forward_densities(&model, &tests).unwrap();
        for row in &est.rows {
            let f = fwd.value(&row.quantity, row.test_body.as_deref()).unwrap();
            assert!(within(row, f, 3.5), "{row:?} vs {f}");
        }
    }
}

#[test]
fn halving_the_window_keeps_the_euler_density() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let model = GrainModel::new(vec![(sq, 1.0)], RotationLaw::Uniform, ScalingLaw::Fixed, 0.6).unwrap();
    let mut s = EstimatorSettings::new(100, 40);
    s.boundary = false;
    let big = estimate_densities(&model, &Window::cube(2, 16.0), &[], &s).unwrap();
    s.reps = 400;
    let small = estimate_densities(&model, &Window::cube(2, 8.0), &[], &s).unwrap();
    let (a, b) = (big.get("Z:V0", None).unwrap(), small.get("Z:V0", None).unwrap());
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.estimate - b.estimate).abs() < 3.0 * se, "{a:?} vs {b:?}");
}

#[test]
fn zero_intensity_and_reproducible_tables() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let tests = vec![TestBody::new("sq", &sq)];
    let zero = GrainModel::deterministic(sq.clone(), 0.0).unwrap();
    let t = estimate_densities(&zero, &Window::cube(2, 6.0), &tests, &EstimatorSettings::new(2, 1)).unwrap();
    assert!(t.rows.iter().all(|r| r.estimate == 0.0));
    let model = GrainModel::deterministic(sq, 0.9).unwrap();
    let s = EstimatorSettings::new(6, 77);
    let a = estimate_densities(&model, &Window::cube(2, 6.0), &tests, &s).unwrap();
    let b = estimate_densities(&model, &Window::cube(2, 6.0), &tests, &s).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_eq!(DensityTable::read_csv(a.to_csv_string().as_bytes()).unwrap(), a);
}

#[test]
fn forward_one_point_law_and_scaling_moments() {
    let mut rng = common::rng(4);
    let k0 = common::random_polytope3(&mut rng, 9);
    let g = 0.7;
    let one = GrainModel::deterministic(k0.clone(), g).unwrap();
    let t = forward_densities(&one, &[]).unwrap();
    let iv = k0.intrinsic_volumes().unwrap();
    for j in 0..=3 {
        let v = t.value(&format!("X:V{j}"), None).unwrap();
        assert!((v - g * iv[j]).abs() < 1e-12 * (1.0 + v.abs()));
    }
    let law = ScalingLaw::Discrete { values: vec![0.5, 2.0], probabilities: vec![0.25, 0.75] };
    let scaled = GrainModel::new(vec![(k0.clone(), 1.0)], RotationLaw::None, law.clone(), g).unwrap();
    let ts = forward_densities(&scaled, &[]).unwrap();
    for (id, entries) in [("X:V_1_2", vec![1, 2]), ("X:V_2_2_2", vec![2, 2, 2])] {
        let base = t.value(id, None).unwrap() / g.powi(entries.len() as i32);
        let factor: f64 = entries.iter().map(|&m| law.moment(m)).product();
        let expect = base * factor * g.powi(entries.len() as i32);
        let got = ts.value(id, None).unwrap();
        assert!((got - expect).abs() < 1e-9 * expect.abs(), "{id}: {got} vs {expect}");
    }
}

#[test]
fn forward_hypercube_system() {
    let g = 0.4;
    let model = GrainModel::deterministic(Polytope::centered_box(&[1.0; 4]), g).unwrap();
    let t = forward_densities(&model, &[]).unwrap();
    let m = |e: Vec<usize>| {
        let idx = boolmodel::translative::MixedIndex::new(e, 0, 4).unwrap();
        let b = vec![boolmodel::translative::BoxSpec::unit(4); idx.k()];
        boolmodel::translative::mixed_functional_boxes(&idx, &b).unwrap()
    };
    let expect = (-g).exp()
        * (g - 4.0 * g * g - 0.5 * 6.0 * g * g + 0.5 * g.powi(3) * m(vec![2, 3, 3])
            - g.powi(4) * m(vec![3, 3, 3, 3]) / 24.0);
    assert!((t.value("Z:V0", None).unwrap() - expect).abs() < 1e-12);
}
