mod common;

use boolmodel::geom::{mixed_volume, Polytope};
use boolmodel::translative::*;
use common::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn pair_decomposition_exact_route_polygons() {
    let mut r = rng(11);
    for _ in 0..20 {
        let k = random_polygon(&mut r, 6);
        let m = random_polygon(&mut r, 5);
        let sum: f64 = (0..=2).map(|i| mixed_functional_pair(i, &k, &m).unwrap()).sum();
        let direct = k.minkowski_sum(&m.reflect()).unwrap().volume();
        assert!(rel(sum, direct) < 1e-9, "{sum} vs {direct}");
    }
}

#[test]
fn pair_decomposition_grid_oracle_polygons() {
    let mut r = rng(12);
    for _ in 0..5 {
        let k = random_polygon(&mut r, 6);
        let m = random_polygon(&mut r, 4);
        let sum: f64 = (0..=2).map(|i| mixed_functional_pair(i, &k, &m).unwrap()).sum();
        let o = translative_oracle(0, &[k, m], 0.02).unwrap();
        assert!(rel(o.value, sum) < 1e-2, "{} vs {sum}", o.value);
    }
}

#[test]
fn pair_decomposition_polytopes_3d() {
    let mut r = rng(13);
    for i in 0..10 {
        let k = random_polytope3(&mut r, 9);
        let m = random_polytope3(&mut r, 7);
        let sum: f64 = (0..=3).map(|i| mixed_functional_pair(i, &k, &m).unwrap()).sum();
        let direct = k.minkowski_sum(&m.reflect()).unwrap().volume();
        assert!(rel(sum, direct) < 1e-9, "{sum} vs {direct}");
        if i < 2 {
            let o = translative_oracle(0, &[k, m], 0.08).unwrap();
            assert!(rel(o.value, sum) < 1e-2, "{} vs {sum}", o.value);
        }
    }
}

#[test]
fn symmetry_of_pair_functionals() {
    let mut r = rng(14);
    for _ in 0..5 {
        let k = random_polygon(&mut r, 5);
        let m = random_polygon(&mut r, 7);
        let a = mixed_functional_pair(1, &k, &m).unwrap();
        let b = mixed_functional_pair(1, &m, &k).unwrap();
        assert!(rel(a, b) < 1e-9);
    }
}

#[test]
fn planar_calibration_holds_on_unrelated_polygons() {
    let mut r = rng(15);
    for _ in 0..6 {
        let k = random_polygon(&mut r, 5);
        let m = random_polygon(&mut r, 8);
        let exact = mixed_functional_pair(1, &k, &m).unwrap();
        let angle = angle_integral_2d(&k.area_measure_top(), &m.area_measure_top());
        assert!(rel(angle, exact) < 1e-6, "{angle} vs {exact}");
    }
}

#[test]
fn planar_j1_oracle_matches_pair_functional() {
    // ∫V₁(K ∩ (M + x))dx = V_{1,2} + V_{2,1} = V₁(K)V₂(M) + V₂(K)V₁(M)
    let mut r = rng(16);
    let k = random_polygon(&mut r, 5);
    let m = random_polygon(&mut r, 6);
    let vk = k.intrinsic_volumes().unwrap();
    let vm = m.intrinsic_volumes().unwrap();
    let expect = vk[1] * vm[2] + vk[2] * vm[1];
    let o = translative_oracle(1, &[k, m], 0.05).unwrap();
    assert!(rel(o.value, expect) < 1e-2, "{} vs {expect}", o.value);
}

#[test]
fn triple_oracle_on_unit_squares() {
    let sq = Polytope::centered_box(&[1.0, 1.0]);
    let closed: f64 = [vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1], vec![2, 2, 0], vec![2, 0, 2], vec![0, 2, 2]]
        .into_iter()
        .map(|e| {
            let idx = MixedIndex::new(e, 0, 2).unwrap();
            mixed_functional_boxes(&idx, &[BoxSpec::unit(2), BoxSpec::unit(2), BoxSpec::unit(2)]).unwrap()
        })
        .sum();
    let o = translative_oracle(0, &[sq.clone(), sq.clone(), sq], 0.05).unwrap();
    assert!(rel(o.value, closed) < 1e-2, "{} vs {closed}", o.value);
    assert!((closed - 9.0).abs() < 1e-12);
}

#[test]
fn triple_oracle_on_polygons() {
    // j = 0, k = 3 in the plane: the six degree patterns summing to 4 are
    // (2,2,0)-type products of areas and (2,1,1)-type area × pair terms
    let mut r = rng(17);
    let k = random_polygon(&mut r, 5);
    let l = random_polygon(&mut r, 4);
    let m = random_polygon(&mut r, 6);
    let (a, b, c) = (k.volume(), l.volume(), m.volume());
    let p = |x: &Polytope, y: &Polytope| mixed_functional_pair(1, x, y).unwrap();
    let expect = a * b + a * c + b * c + a * p(&l, &m) + b * p(&k, &m) + c * p(&k, &l);
    let o = translative_oracle(0, &[k, l, m], 0.1).unwrap();
    assert!(rel(o.value, expect) < 1e-2, "{} vs {expect}", o.value);
}

#[test]
fn spatial_calibration_on_boxes() {
    let boxes = [
        BoxSpec::new(vec![1.0, 2.0, 0.5]).unwrap(),
        BoxSpec::new(vec![0.7, 1.1, 1.3]).unwrap(),
        BoxSpec::new(vec![2.0, 0.4, 0.9]).unwrap(),
    ];
    let idx = MixedIndex::new(vec![2, 2, 2], 0, 3).unwrap();
    let closed = mixed_functional_boxes(&idx, &boxes).unwrap();
    let m: Vec<_> = boxes.iter().map(|b| b.to_polytope().area_measure_top()).collect();
    let angle = angle_integral_3d(&m[0], &m[1], &m[2]);
    assert!(rel(angle, closed) < 1e-9, "{angle} vs {closed}");
    let p: Vec<_> = boxes.iter().map(|b| b.to_polytope()).collect();
    let fit = dilation_extract(&p[0], &p[1], &p[2], 0.05).unwrap();
    assert!(rel(fit.balanced(), closed) < 1e-6, "{} vs {closed}", fit.balanced());
}

#[test]
fn spatial_angle_integral_matches_dilation_oracle_on_polytopes() {
    let mut r = rng(18);
    let l = random_polytope3(&mut r, 8);
    let k = random_polytope3(&mut r, 6);
    let m = random_polytope3(&mut r, 6);
    let angle = angle_integral_3d(
        &l.area_measure_top(),
        &k.area_measure_top(),
        &m.area_measure_top(),
    );
    let fit = dilation_extract(&l, &k, &m, 0.1).unwrap();
    assert!(rel(fit.balanced(), angle) < 2e-2, "{} vs {angle}", fit.balanced());
    // the β³ coefficient factorises as V_{2,1}(L, K)·V₃(M)
    let v21 = mixed_functional_pair(2, &l, &k).unwrap();
    let c = fit.coefficient(1, 3).unwrap();
    assert!(rel(c, v21 * m.volume()) < 2e-2, "{c} vs {}", v21 * m.volume());
}

#[test]
fn support_area_integral_matches_mixed_volume() {
    let mut r = rng(19);
    let k = random_polytope3(&mut r, 8);
    let m = random_polytope3(&mut r, 8);
    let via = support_area_integral(|u| k.support(u), &m.area_measure_top());
    let exact = mixed_functional_pair(1, &k, &m).unwrap();
    assert!(rel(via, exact) < 1e-9, "{via} vs {exact}");
    let mv = mixed_volume(&[(&k, 1), (&m.reflect(), 2)]).unwrap();
    assert!(rel(via, 3.0 * mv) < 1e-9);
}

#[test]
fn dilation_with_point_body_vanishes() {
    let c = Polytope::centered_box(&[1.0; 4]);
    let pt = Polytope::axis_box(vec![0.0; 4], vec![0.0; 4]);
    for fit in [
        dilation_extract(&c, &c, &pt, 0.05).unwrap(),
        dilation_extract(&c, &pt, &c, 0.05).unwrap(),
    ] {
        for (_, _, v) in fit.coefficients {
            assert!(v.abs() < 1e-9);
        }
    }
}

fn box_strategy(d: usize) -> impl Strategy<Value = BoxSpec> {
    proptest::collection::vec(0.1f64..3.0, d).prop_map(|e| BoxSpec::new(e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invalid_indices_are_rejected(e in proptest::collection::vec(0usize..6, 1..5), j in 0usize..5) {
        let d = 4;
        let k = e.len();
        let ok = e.iter().sum::<usize>() == (k - 1) * d + j && e.iter().all(|&m| m >= j && m <= d);
        prop_assert_eq!(MixedIndex::new(e, j, d).is_ok(), ok);
    }

    #[test]
    fn mix_members_validate(j in 0usize..4, k in 1usize..6) {
        for m in mix(j, k, 4) {
            prop_assert!(m.in_mix());
            prop_assert_eq!(m.entries().iter().sum::<usize>(), (k - 1) * 4 + j);
        }
    }

    #[test]
    fn box_homogeneity(a in box_strategy(4), b in box_strategy(4), c in box_strategy(4),
                       l1 in 0.5f64..3.0, l2 in 0.5f64..3.0, l3 in 0.5f64..3.0) {
        let idx = MixedIndex::new(vec![2, 3, 3], 0, 4).unwrap();
        let base = mixed_functional_boxes(&idx, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let s = |x: &BoxSpec, l: f64| BoxSpec::new(x.edges.iter().map(|e| e * l).collect()).unwrap();
        let scaled = mixed_functional_boxes(&idx, &[s(&a, l1), s(&b, l2), s(&c, l3)]).unwrap();
        let expect = base * l1.powi(2) * l2.powi(3) * l3.powi(3);
        prop_assert!(rel(scaled, expect) < 1e-12);
    }

    #[test]
    fn box_pair_symmetry(a in box_strategy(3), b in box_strategy(3), m in 0usize..=3) {
        let i1 = MixedIndex::new(vec![m, 3 - m], 0, 3).unwrap();
        let i2 = MixedIndex::new(vec![3 - m, m], 0, 3).unwrap();
        let x = mixed_functional_boxes(&i1, &[a.clone(), b.clone()]).unwrap();
        let y = mixed_functional_boxes(&i2, &[b, a]).unwrap();
        prop_assert!(rel(x, y) < 1e-14 || (x == 0.0 && y == 0.0));
    }

    #[test]
    fn box_pair_sum_is_difference_body_volume(a in box_strategy(4), b in box_strategy(4)) {
        let total: f64 = (0..=4).map(|m| {
            let idx = MixedIndex::new(vec![m, 4 - m], 0, 4).unwrap();
            mixed_functional_boxes(&idx, &[a.clone(), b.clone()]).unwrap()
        }).sum();
        let vol: f64 = a.edges.iter().zip(&b.edges).map(|(x, y)| x + y).product();
        prop_assert!(rel(total, vol) < 1e-12);
    }
}
