//! Helpers shared by the unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::state::{rho_from_poincare, DensityMatrix, PoincareVector};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the closed unit ball, by rejection from the cube.
pub(crate) fn sample_ball(rng: &mut ChaCha8Rng) -> PoincareVector {
    loop {
        let r = PoincareVector::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if r.norm_squared() <= 1.0 {
            return r;
        }
    }
}

/// Uniform direction on the unit sphere.
pub(crate) fn sample_sphere(rng: &mut ChaCha8Rng) -> PoincareVector {
    loop {
        let r = sample_ball(rng);
        let n = r.norm();
        if n > 1e-3 {
            return PoincareVector::new(r.r_h / n, r.r_d / n, r.r_r / n);
        }
    }
}

pub(crate) fn random_rho(rng: &mut ChaCha8Rng) -> (DensityMatrix, PoincareVector) {
    let r = sample_ball(rng);
    (rho_from_poincare(&r).unwrap(), r)
}

pub(crate) fn random_pure(rng: &mut ChaCha8Rng) -> (DensityMatrix, PoincareVector) {
    let r = sample_sphere(rng);
    (rho_from_poincare(&r).unwrap(), r)
}
