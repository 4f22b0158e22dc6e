#![allow(dead_code)]

use boolmodel::geom::{Polytope, Vector};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Hull of `n` points on a jittered circle; always a proper polygon.
pub fn random_polygon(rng: &mut impl Rng, n: usize) -> Polytope {
    let pts: Vec<Vector> = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * (i as f64 + rng.gen_range(0.0..0.8)) / n as f64;
            let r = rng.gen_range(0.4..1.2);
            DVector::from_vec(vec![r * t.cos(), r * t.sin()])
        })
        .collect();
    Polytope::from_points(2, pts).unwrap()
}

/// Hull of `n` uniform points in a cube of side 2, shifted randomly.
pub fn random_polytope3(rng: &mut impl Rng, n: usize) -> Polytope {
    let shift = DVector::from_fn(3, |_, _| rng.gen_range(-0.5..0.5));
    loop {
        let pts: Vec<Vector> = (0..n)
            .map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)) + &shift)
            .collect();
        let p = Polytope::from_points(3, pts).unwrap();
        if p.volume() > 0.3 {
            return p;
        }
    }
}
