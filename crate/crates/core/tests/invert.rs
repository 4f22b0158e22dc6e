mod common;

use boolmodel::boolsim::{forward_densities, GrainModel, RotationLaw, ScalingLaw};
use boolmodel::error::Error;
use boolmodel::geom::{vector, Polytope};
use boolmodel::invert::{recover_2d, recover_3d, recover_area_measure, RecoveredModel, Role, TestBodyFamily};

fn square_model(gamma: f64) -> GrainModel {
    GrainModel::deterministic(Polytope::centered_box(&[1.0, 1.0]), gamma).unwrap()
}

/// A triangle whose edge normals lie on the 64-angle grid.
fn grid_triangle() -> Polytope {
    let grid = boolmodel::geom::sphere::circle_grid(64);
    let normals = vec![grid[5].clone(), grid[27].clone(), grid[48].clone()];
    Polytope::from_halfspaces(&normals, &[0.4, 0.7, 0.5]).unwrap()
}

#[test]
fn area_measure_of_squares() {
    let gamma = 0.3;
    let family = TestBodyFamily::standard(2).unwrap();
    let table = forward_densities(&square_model(gamma), &family.test_bodies()).unwrap();
    let s = recover_area_measure(&table, &family).unwrap();
    for e in [vector(&[1.0, 0.0]), vector(&[0.0, 1.0]), vector(&[-1.0, 0.0]), vector(&[0.0, -1.0])] {
        let m = s.mass_near(&e, 0.05);
        assert!((m - gamma).abs() < 0.02 * gamma, "{m}");
    }
    assert!((s.total_mass() - 4.0 * gamma).abs() < 1e-6);
}

#[test]
fn empty_model_gives_zero_measure() {
    let family = TestBodyFamily::standard(2).unwrap();
    let table = forward_densities(&square_model(0.0), &family.test_bodies()).unwrap();
    let s = recover_area_measure(&table, &family).unwrap();
    assert!(s.total_mass().abs() < 1e-12);
    assert_eq!(recover_2d(&table, &family).unwrap().gamma_hat, 0.0);
}

#[test]
fn segments_see_only_the_even_part() {
    let family = TestBodyFamily::standard(2).unwrap();
    let segments = family.restricted(&[Role::Segment]);
    let model = GrainModel::deterministic(grid_triangle(), 0.5).unwrap();
    let table = forward_densities(&model, &family.test_bodies()).unwrap();
    let truth = recover_area_measure(&table, &family).unwrap();
    let Err(Error::IllPosed {
        nullity,
        partial: Some(partial),
        missing,
        ..
    }) = recover_area_measure(&table, &segments)
    else {
        panic!("segments alone must be ill-posed");
    };
    // odd functions on 64 angles minus the two centring constraints
    assert_eq!(nullity, 30);
    assert!(!missing.is_empty());
    let n = family.grid.len();
    let weight = |g: usize| truth.mass_near(&family.grid[g], 1e-9);
    for g in 0..n / 2 {
        let even = partial[g] + partial[g + n / 2];
        assert!((even - weight(g) - weight(g + n / 2)).abs() < 1e-9, "{g}");
    }
}

#[test]
fn planar_intensity_from_noiseless_table() {
    let model = GrainModel::new(
        vec![(Polytope::centered_box(&[1.0, 0.5]), 0.4), (grid_triangle(), 0.6)],
        RotationLaw::None,
        ScalingLaw::Discrete {
            values: vec![0.5, 1.5],
            probabilities: vec![0.5, 0.5],
        },
        0.3,
    )
    .unwrap();
    let family = TestBodyFamily::standard(2).unwrap();
    let table = forward_densities(&model, &family.test_bodies()).unwrap();
    let r = recover_2d(&table, &family).unwrap();
    assert!((r.gamma_hat - 0.3).abs() < 1e-9, "{}", r.gamma_hat);
    assert!(r.blaschke_body.is_some());
}

#[test]
fn area_mass_follows_the_scaling_moment() {
    let law = ScalingLaw::LogNormal { mu: 0.1, sigma: 0.3 };
    let model = GrainModel::new(vec![(grid_triangle(), 1.0)], RotationLaw::None, law.clone(), 0.2).unwrap();
    let family = TestBodyFamily::standard(2).unwrap();
    let table = forward_densities(&model, &family.test_bodies()).unwrap();
    let s = recover_area_measure(&table, &family).unwrap();
    let perimeter = grid_triangle().area_measure_top().total_mass();
    assert!((s.total_mass() - 0.2 * law.moment(1) * perimeter).abs() < 1e-9);
}

/// A tetrahedron whose facet normals lie on the 162-point grid.
fn grid_tetrahedron() -> Polytope {
    let grid = boolmodel::geom::sphere::icosahedral_grid(2);
    let picks = [vector(&[0.3, 0.2, 1.0]), vector(&[1.0, -0.4, -0.5]), vector(&[-1.0, -0.6, -0.3]), vector(&[0.1, 1.0, -0.4])];
    let normals: Vec<_> = picks
        .iter()
        .map(|p| {
            let p = p.normalize();
            grid.iter().max_by(|a, b| a.dot(&p).total_cmp(&b.dot(&p))).unwrap().clone()
        })
        .collect();
    Polytope::from_halfspaces(&normals, &[0.5, 0.6, 0.7, 0.4]).unwrap()
}

#[test]
fn spatial_intensity_from_noiseless_table() {
    let model = GrainModel::new(
        vec![(Polytope::centered_box(&[1.0, 0.6, 0.8]), 0.5), (grid_tetrahedron(), 0.5)],
        RotationLaw::None,
        ScalingLaw::Fixed,
        0.2,
    )
    .unwrap();
    let family = TestBodyFamily::standard(3).unwrap();
    let table = forward_densities(&model, &family.test_bodies()).unwrap();
    let r = recover_3d(&table, &family).unwrap();
    assert!((r.gamma_hat - 0.2).abs() < 1e-6, "{} {:?}", r.gamma_hat, r.diagnostics);
    let json = r.to_json();
    let back = RecoveredModel::from_json(&json).unwrap();
    assert_eq!(back.gamma_hat, r.gamma_hat);
    assert_eq!(back.area_measure, r.area_measure);
    assert_eq!(back.support_samples, r.support_samples);
    assert_eq!(back.diagnostics, r.diagnostics);
    let (a, b) = (back.blaschke_body.unwrap(), r.blaschke_body.unwrap());
    assert!((a.volume() - b.volume()).abs() < 1e-12);
}

#[test]
fn blaschke_body_of_cubes() {
    let gamma = 0.2;
    let model = GrainModel::deterministic(Polytope::centered_box(&[1.0, 1.0, 1.0]), gamma).unwrap();
    let family = TestBodyFamily::standard(3).unwrap();
    let table = forward_densities(&model, &family.test_bodies()).unwrap();
    let r = recover_3d(&table, &family).unwrap();
    let b = r.blaschke_body.unwrap();
    let s = b.area_measure_top();
    assert_eq!(s.atoms.len(), 6, "{:?} {:?}", s, r.area_measure);
    for a in &s.atoms {
        let u = a.dir();
        assert!(u.iter().map(|x| x.abs()).fold(0.0, f64::max) > 1.0 - 1e-3);
        assert!((a.weight - gamma).abs() < 1e-6);
    }
    assert!((r.gamma_hat - gamma).abs() < 1e-6);
}
