//! Seeded sampling helpers: deterministic RNG construction, random smooth
//! fields and random shell metrics for verification sweeps.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fields::ScalarField;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A bounded smooth random field over the given coordinates: a low-order
/// trigonometric/polynomial mix with O(1) derivatives.
pub fn smooth_field<R: Rng>(rng: &mut R, coords: &[usize], amplitude: f64) -> ScalarField {
    let mut acc = ScalarField::constant(rng.random_range(-amplitude..amplitude));
    for &c in coords {
        let a = rng.random_range(-amplitude..amplitude);
        let b = rng.random_range(0.4..1.3);
        let ph = rng.random_range(0.0..6.28);
        let term = ScalarField::constant(a)
            * (ScalarField::constant(b) * ScalarField::coord(c) + ScalarField::constant(ph)).sin();
        acc = acc + term;
    }
    if coords.len() >= 2 {
        let a = rng.random_range(-amplitude..amplitude);
        let term = ScalarField::constant(a)
            * ScalarField::coord(coords[0])
            * ScalarField::coord(coords[1]);
        acc = acc + term;
    }
    acc
}

/// Strictly sign-definite smooth field `sign * exp(small)`, bounded away
/// from zero (for metric block coefficients).
pub fn signed_coefficient<R: Rng>(rng: &mut R, coords: &[usize], sign: f64) -> ScalarField {
    let f = smooth_field(rng, coords, 0.35);
    ScalarField::constant(sign) * f.exp()
}

/// Random polynomial field (for frame / nonholonomy unit oracles).
pub fn poly_field<R: Rng>(rng: &mut R, coords: &[usize]) -> ScalarField {
    let mut acc = ScalarField::constant(rng.random_range(-0.5..0.5));
    for &c in coords {
        let a = rng.random_range(-0.5..0.5);
        acc = acc + ScalarField::constant(a) * ScalarField::coord(c);
        let b = rng.random_range(-0.3..0.3);
        acc = acc + ScalarField::constant(b) * ScalarField::coord(c).powi(2);
    }
    acc
}

/// Random interior point of a box domain.
pub fn point_in<R: Rng>(rng: &mut R, ranges: &[[f64; 2]]) -> Vec<f64> {
    ranges
        .iter()
        .map(|r| {
            let pad = 0.05 * (r[1] - r[0]);
            rng.random_range(r[0] + pad..r[1] - pad)
        })
        .collect()
}
