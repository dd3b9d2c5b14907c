//! Random generators of ordered pairs of laws.
//!
//! Convex-ordered pairs come from repeated mean-preserving spreads: an atom
//! `p δ_x` (or part of it) is replaced by `p α δ_a + p β δ_b` with
//! `a < x < b` and barycentric weights `α, β`. Increasing-convex pairs add a
//! stochastic upward shift before spreading.

use num_bigint::BigInt;
use rand::Rng;

use crate::distribution::{canonical_atoms, DiscreteDistribution};
use crate::orders::BarycentricWeights;
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Clone, Copy, Debug)]
pub struct LawShape {
    /// Upper bound on the number of atoms of generated laws.
    pub max_atoms: usize,
    /// Points are integers in `[lo, hi]`; otherwise multiples of 1/4 in that range.
    pub integer: bool,
    pub lo: i64,
    pub hi: i64,
}

impl LawShape {
    pub fn counts(max_atoms: usize, hi: i64) -> Self {
        Self {
            max_atoms,
            integer: true,
            lo: 0,
            hi,
        }
    }

    fn resolution(&self) -> i64 {
        if self.integer {
            1
        } else {
            4
        }
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, lo: i64, hi: i64) -> Rational {
        let k = self.resolution();
        Rational::new(BigInt::from(rng.random_range(lo * k..=hi * k)), BigInt::from(k))
    }
}

fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Law with between 1 and `shape.max_atoms` atoms and random weights in
/// multiples of `1/denominator`.
pub fn random_law<R: Rng + ?Sized>(rng: &mut R, shape: &LawShape) -> DiscreteDistribution<Rational> {
    let n_atoms = rng.random_range(1..=shape.max_atoms);
    let raw: Vec<i64> = (0..n_atoms).map(|_| rng.random_range(1..=6)).collect();
    let total: i64 = raw.iter().sum();
    let atoms = raw
        .into_iter()
        .map(|w| (shape.random_point(rng, shape.lo, shape.hi), Rational::new(w.into(), total.into())))
        .collect::<Vec<_>>();
    DiscreteDistribution::new(atoms).expect("weights sum to one")
}

/// One mean-preserving spread of a random atom, if one fits in the shape.
pub fn mean_preserving_spread<R: Rng + ?Sized>(
    rng: &mut R,
    law: &DiscreteDistribution<Rational>,
    shape: &LawShape,
) -> Option<DiscreteDistribution<Rational>> {
    let k = shape.resolution();
    let candidates: Vec<usize> = (0..law.len())
        .filter(|&i| {
            let x = &law.atoms()[i].0;
            *x > q(shape.lo) && *x < q(shape.hi)
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let (x, w) = law.atoms()[candidates[rng.random_range(0..candidates.len())]].clone();
    // a in [lo, x), b in (x, hi] on the grid.
    let x_steps = (x.clone() * q(k)).floor().to_integer();
    let x_on_grid = Rational::from_integer(x_steps.clone()) == x.clone() * q(k);
    let lo_steps = shape.lo * k;
    let hi_steps = shape.hi * k;
    let x_steps: i64 = x_steps.try_into().ok()?;
    let a_max = if x_on_grid { x_steps - 1 } else { x_steps };
    if a_max < lo_steps || x_steps + 1 > hi_steps {
        return None;
    }
    let a = Rational::new(rng.random_range(lo_steps..=a_max).into(), k.into());
    let b = Rational::new(rng.random_range(x_steps + 1..=hi_steps).into(), k.into());
    let portion = if rng.random_bool(0.5) {
        w.clone()
    } else {
        w.clone() * Rational::new(rng.random_range(1..=3).into(), 4.into())
    };
    let bw = BarycentricWeights::unchecked(&a, &b, &x);
    let mut raw: Vec<(Rational, Rational)> = law.atoms().to_vec();
    raw.push((x, -portion.clone()));
    raw.push((a, portion.clone() * bw.alpha));
    raw.push((b, portion * bw.beta));
    let atoms = canonical_atoms(raw);
    (atoms.len() <= shape.max_atoms).then(|| DiscreteDistribution::new(atoms).expect("mass preserved"))
}

/// `(mu, nu)` with `mu ≺cx nu`, `nu` obtained from `mu` by up to `spreads`
/// mean-preserving spreads (fewer if the shape bound blocks them).
pub fn random_cx_pair<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &LawShape,
    spreads: usize,
) -> (DiscreteDistribution<Rational>, DiscreteDistribution<Rational>) {
    let mu = random_law(rng, shape);
    let mut nu = mu.clone();
    for _ in 0..spreads {
        // Several tries per spread; spreads that would exceed the atom bound are skipped.
        for _ in 0..8 {
            if let Some(next) = mean_preserving_spread(rng, &nu, shape) {
                nu = next;
                break;
            }
        }
    }
    (mu, nu)
}

/// `(mu, nu)` with `mu ≺icx nu`: move some atoms of `mu` upward (a
/// stochastic increase), then apply mean-preserving spreads.
pub fn random_icx_pair<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &LawShape,
    spreads: usize,
) -> (DiscreteDistribution<Rational>, DiscreteDistribution<Rational>) {
    let mu = random_law(rng, shape);
    let ceiling = q(shape.hi);
    let shifted: Vec<(Rational, Rational)> = mu
        .atoms()
        .iter()
        .map(|(x, w)| {
            let up = x.clone() + q(rng.random_range(0..=2));
            (if up > ceiling { ceiling.clone() } else { up }, w.clone())
        })
        .collect();
    let mut nu = DiscreteDistribution::new(shifted).expect("mass preserved");
    for _ in 0..spreads {
        for _ in 0..8 {
            if let Some(next) = mean_preserving_spread(rng, &nu, shape) {
                nu = next;
                break;
            }
        }
    }
    (mu, nu)
}

/// Nonnegative law for jumps: up to `max_atoms` points in `{0, 1/2, ..., hi}`.
pub fn random_jump_law<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize, hi: i64) -> DiscreteDistribution<Rational> {
    let n_atoms = rng.random_range(1..=max_atoms);
    let raw: Vec<(Rational, i64)> = (0..n_atoms)
        .map(|_| (Rational::new(rng.random_range(0..=2 * hi).into(), 2.into()), rng.random_range(1..=4)))
        .collect();
    let total: i64 = raw.iter().map(|(_, w)| w).sum();
    DiscreteDistribution::new(raw.into_iter().map(|(x, w)| (x, Rational::new(w.into(), total.into()))))
        .expect("weights sum to one")
}

/// Variance of the law, as `f64`.
pub fn variance_f64<T: Scalar>(law: &DiscreteDistribution<T>) -> f64 {
    law.variance().to_f64_lossy()
}
