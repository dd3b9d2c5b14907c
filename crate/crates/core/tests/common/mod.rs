#![allow(dead_code)]

use convord::instances::LawShape;
use convord::{Distribution, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn q(p: i64, d: i64) -> Rational {
    Rational::new(p.into(), d.into())
}

pub fn z(n: i64) -> Rational {
    q(n, 1)
}

/// `(point, numerator, denominator)` triples.
pub fn law(atoms: &[(i64, i64, i64)]) -> Distribution {
    Distribution::new(atoms.iter().map(|&(x, p, d)| (z(x), q(p, d)))).unwrap()
}

pub fn figure1() -> (Distribution, Distribution) {
    (
        law(&[(2, 1, 4), (3, 1, 4), (4, 1, 4), (5, 1, 4)]),
        law(&[(1, 1, 4), (3, 1, 4), (4, 1, 6), (5, 1, 6), (6, 1, 6)]),
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn real_shape() -> LawShape {
    LawShape {
        max_atoms: 12,
        integer: false,
        lo: -4,
        hi: 6,
    }
}

pub fn jump_shape() -> LawShape {
    LawShape {
        max_atoms: 5,
        integer: false,
        lo: 0,
        hi: 3,
    }
}
