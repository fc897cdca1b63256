//! Seeded field corpora shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinfilm::domain::{BoxRegion, Field, SmoothFn};

pub fn unit_interval() -> BoxRegion {
    BoxRegion::interval(0.0, 1.0).unwrap()
}

/// Fields on the unit film `(0,1)²`, cycling through the supported kinds.
pub fn corpus(seed: u64, n: usize) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| corpus_field(&mut rng, i % 6)).collect()
}

fn corpus_field(rng: &mut ChaCha8Rng, kind: usize) -> Field {
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    match kind {
        // x'-only smooth
        0 => Field::smooth(vec![SmoothFn::cos(u(0.5, 2.0), u(1.0, 6.0))], SmoothFn::constant(1.0)).unwrap(),
        // x_d-only polynomial
        1 => Field::smooth(
            vec![SmoothFn::constant(1.0)],
            SmoothFn::polynomial(vec![0.0, u(-2.0, 2.0), u(-2.0, 2.0)]),
        )
        .unwrap(),
        // separable product
        2 => Field::smooth(
            vec![SmoothFn::sin(1.0, u(1.0, 4.0))],
            SmoothFn::polynomial(vec![u(-1.0, 1.0), u(0.5, 2.0)]),
        )
        .unwrap(),
        // x_d-only trigonometric
        3 => Field::smooth(vec![SmoothFn::constant(u(0.5, 2.0))], SmoothFn::cos(1.0, u(1.0, 5.0))).unwrap(),
        // multilinear grid sample with genuine mixed dependence
        4 => {
            let values: Vec<f64> = (0..16).map(|_| u(-1.0, 1.0)).collect();
            Field::grid(BoxRegion::unit(2), vec![4, 4], values).unwrap()
        }
        // piecewise constant in x'
        _ => {
            let a = u(0.2, 0.45);
            let b = u(0.55, 0.8);
            Field::piecewise_constant(0.0, 1.0, vec![a, b], vec![u(-1.0, 1.0), u(-1.0, 1.0), u(-1.0, 1.0)]).unwrap()
        }
    }
}
