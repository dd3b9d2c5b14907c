//! Exact checks of the convex, increasing convex and usual stochastic orders.
//!
//! The stop-loss transform and the CDF of a finitely supported law are
//! piecewise linear (resp. piecewise constant) with breakpoints at support
//! points, so comparing them on the union of both supports is exhaustive.

use serde::{Serialize, Serializer};

use crate::distribution::{cmp_scalar, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normalized barycentric coordinates of `z` with respect to `[x, y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricWeights<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> BarycentricWeights<T> {
    /// Coordinates without the interval check. For `x = y` the result is
    /// `(1, 0)` whatever `z` is.
    pub fn unchecked(x: &T, y: &T, z: &T) -> Self {
        if x == y {
            return Self {
                alpha: T::one(),
                beta: T::zero(),
            };
        }
        let width = y.clone() - x.clone();
        let alpha = (y.clone() - z.clone()) / width.clone();
        let beta = T::one() - alpha.clone();
        Self { alpha, beta }
    }
}

/// `alpha = (y - z)/(y - x)`, `beta = (z - x)/(y - x)`; `(1, 0)` when `x = y`.
pub fn barycentric_weights<T: Scalar>(x: &T, y: &T, z: &T) -> Result<BarycentricWeights<T>> {
    if !(x <= z && z <= y) {
        return Err(Error::OutOfInterval {
            x: x.to_text(),
            y: y.to_text(),
            z: z.to_text(),
        });
    }
    Ok(BarycentricWeights::unchecked(x, y, z))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    MeanMismatch,
    StopLoss,
    Cdf,
}

/// Where an order check failed. For a mean mismatch `point` is absent and the
/// values are the two means.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub kind: WitnessKind,
    pub point: Option<T>,
    pub lhs_value: T,
    pub rhs_value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderVerdict<T> {
    pub holds: bool,
    pub witness: Option<Witness<T>>,
}

impl<T> OrderVerdict<T> {
    fn holds() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    fn fails(witness: Witness<T>) -> Self {
        Self {
            holds: false,
            witness: Some(witness),
        }
    }
}

#[derive(Serialize)]
struct WitnessJson {
    kind: WitnessKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<String>,
    lhs_value: String,
    rhs_value: String,
}

#[derive(Serialize)]
struct VerdictJson {
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessJson>,
}

impl<T: Scalar> Serialize for OrderVerdict<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        VerdictJson {
            holds: self.holds,
            witness: self.witness.as_ref().map(|w| WitnessJson {
                kind: w.kind,
                point: w.point.as_ref().map(Scalar::to_text),
                lhs_value: w.lhs_value.to_text(),
                rhs_value: w.rhs_value.to_text(),
            }),
        }
        .serialize(serializer)
    }
}

/// Sorted union of both supports.
pub fn checkpoints<T: Scalar>(mu: &DiscreteDistribution<T>, nu: &DiscreteDistribution<T>) -> Vec<T> {
    let mut pts: Vec<T> = mu.points().chain(nu.points()).cloned().collect();
    pts.sort_by(cmp_scalar);
    pts.dedup();
    pts
}

fn stop_loss_violation<T: Scalar>(
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
) -> Option<Witness<T>> {
    checkpoints(mu, nu).into_iter().find_map(|t| {
        let lhs = mu.stop_loss(&t);
        let rhs = nu.stop_loss(&t);
        (lhs > rhs).then(|| Witness {
            kind: WitnessKind::StopLoss,
            point: Some(t),
            lhs_value: lhs,
            rhs_value: rhs,
        })
    })
}

/// `mu ≺cx nu`: equal means and dominated stop-loss transforms.
pub fn check_cx<T: Scalar>(mu: &DiscreteDistribution<T>, nu: &DiscreteDistribution<T>) -> OrderVerdict<T> {
    let (m1, m2) = (mu.mean(), nu.mean());
    if m1 != m2 {
        return OrderVerdict::fails(Witness {
            kind: WitnessKind::MeanMismatch,
            point: None,
            lhs_value: m1,
            rhs_value: m2,
        });
    }
    match stop_loss_violation(mu, nu) {
        Some(w) => OrderVerdict::fails(w),
        None => OrderVerdict::holds(),
    }
}

/// `mu ≺icx nu`: `mean(mu) <= mean(nu)` and dominated stop-loss transforms.
pub fn check_icx<T: Scalar>(mu: &DiscreteDistribution<T>, nu: &DiscreteDistribution<T>) -> OrderVerdict<T> {
    let (m1, m2) = (mu.mean(), nu.mean());
    if m1 > m2 {
        return OrderVerdict::fails(Witness {
            kind: WitnessKind::MeanMismatch,
            point: None,
            lhs_value: m1,
            rhs_value: m2,
        });
    }
    match stop_loss_violation(mu, nu) {
        Some(w) => OrderVerdict::fails(w),
        None => OrderVerdict::holds(),
    }
}

/// `mu ≺st nu`: `F_mu >= F_nu` pointwise.
pub fn check_st<T: Scalar>(mu: &DiscreteDistribution<T>, nu: &DiscreteDistribution<T>) -> OrderVerdict<T> {
    let violation = checkpoints(mu, nu).into_iter().find_map(|x| {
        let lhs = mu.cdf(&x);
        let rhs = nu.cdf(&x);
        (lhs < rhs).then(|| Witness {
            kind: WitnessKind::Cdf,
            point: Some(x),
            lhs_value: lhs,
            rhs_value: rhs,
        })
    });
    match violation {
        Some(w) => OrderVerdict::fails(w),
        None => OrderVerdict::holds(),
    }
}

/// Split `mu ≺icx nu` through an integer-valued intermediate law `rho` with
/// `mu ≺st rho` and `rho ≺cx nu`.
///
/// `rho` mixes the laws of `max(M, k)` and `max(M, k + 1)` for the integer
/// threshold `k` at which `E max(M, t)` crosses `mean(nu)`, with the mixing
/// weight chosen so that `mean(rho) = mean(nu)`. Both order relations are
/// re-checked before returning.
pub fn icx_decompose<T: Scalar>(
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
) -> Result<DiscreteDistribution<T>> {
    for d in [mu, nu] {
        if let Some(x) = d.points().find(|x| !is_integer(*x)) {
            return Err(Error::NonIntegerSupport(x.to_text()));
        }
    }
    if !check_icx(mu, nu).holds {
        return Err(Error::NotIcxOrdered);
    }
    let target = nu.mean();
    if mu.mean() == target {
        return Ok(mu.clone());
    }

    let floor_at = |t: &T| mu.map(|m| T::max_of(m, t));
    let g = |t: &T| -> T {
        mu.atoms()
            .iter()
            .fold(T::zero(), |acc, (m, w)| acc + T::max_of(m, t) * w.clone())
    };

    // g(min support) = mean(mu) < target <= max(nu) <= g(max(nu)).
    let mut k = mu.min_point().clone();
    let mut g_k = g(&k);
    let mut g_next = g(&(k.clone() + T::one()));
    while g_next <= target {
        k = k + T::one();
        g_k = g_next;
        g_next = g(&(k.clone() + T::one()));
    }
    let theta = (g_next.clone() - target) / (g_next - g_k);
    let lower = floor_at(&k);
    let upper = floor_at(&(k + T::one()));
    let rho = DiscreteDistribution::mix([(theta.clone(), &lower), (T::one() - theta, &upper)])?;

    if !check_st(mu, &rho).holds {
        return Err(Error::ConstructionFailed(format!("mu is not st-below {rho:?}")));
    }
    if !check_cx(&rho, nu).holds {
        return Err(Error::ConstructionFailed(format!("{rho:?} is not cx-below nu")));
    }
    Ok(rho)
}

fn is_integer<T: Scalar>(x: &T) -> bool {
    x.abs().as_count().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    fn z(n: i64) -> Rational {
        q(n, 1)
    }

    fn law(atoms: &[(i64, i64, i64)]) -> DiscreteDistribution<Rational> {
        DiscreteDistribution::new(atoms.iter().map(|&(x, p, d)| (z(x), q(p, d)))).unwrap()
    }

    fn dirac(n: i64) -> DiscreteDistribution<Rational> {
        DiscreteDistribution::dirac(z(n))
    }

    #[test]
    fn barycentric() {
        let w = barycentric_weights(&z(0), &z(2), &z(1)).unwrap();
        assert_eq!((w.alpha, w.beta), (q(1, 2), q(1, 2)));
        let w = barycentric_weights(&z(3), &z(3), &z(3)).unwrap();
        assert_eq!((w.alpha, w.beta), (z(1), z(0)));
        let w = barycentric_weights(&z(1), &z(4), &z(2)).unwrap();
        assert_eq!((w.alpha.clone(), w.beta.clone()), (q(2, 3), q(1, 3)));
        assert_eq!(w.alpha * z(1) + w.beta * z(4), z(2));
        assert!(matches!(
            barycentric_weights(&z(1), &z(4), &z(5)),
            Err(Error::OutOfInterval { .. })
        ));
    }

    #[test]
    fn convex_order() {
        let split = law(&[(0, 1, 2), (2, 1, 2)]);
        assert!(check_cx(&dirac(1), &split).holds);

        let xm = law(&[(-1, 1, 2), (1, 1, 2)]);
        let xn = law(&[(-2, 1, 8), (0, 3, 4), (2, 1, 8)]);
        let v = check_cx(&xm, &xn);
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.kind, WitnessKind::StopLoss);
        assert_eq!(w.point, Some(z(0)));
        assert_eq!((w.lhs_value, w.rhs_value), (q(1, 2), q(1, 4)));

        assert!(check_cx(&xn, &xn).holds);

        let v = check_cx(&split, &dirac(1));
        assert_eq!(v.witness.unwrap().point, Some(z(1)));

        let v = check_cx(&dirac(0), &dirac(1));
        assert_eq!(v.witness.unwrap().kind, WitnessKind::MeanMismatch);
    }

    #[test]
    fn increasing_convex_order() {
        assert!(check_icx(&dirac(0), &dirac(2)).holds);
        let v = check_icx(&dirac(2), &dirac(0));
        assert_eq!(v.witness.unwrap().kind, WitnessKind::MeanMismatch);
        assert!(check_icx(&dirac(1), &law(&[(0, 1, 2), (2, 1, 2)])).holds);
    }

    #[test]
    fn stochastic_order() {
        assert!(check_st(&dirac(0), &dirac(2)).holds);
        let v = check_st(&dirac(1), &law(&[(0, 1, 2), (2, 1, 2)]));
        let w = v.witness.unwrap();
        assert_eq!(w.point, Some(z(0)));
        assert_eq!((w.lhs_value, w.rhs_value), (z(0), q(1, 2)));
        let d = law(&[(0, 1, 3), (5, 2, 3)]);
        assert!(check_st(&d, &d).holds);
    }

    #[test]
    fn icx_split() {
        assert_eq!(icx_decompose(&dirac(1), &law(&[(0, 1, 2), (2, 1, 2)])).unwrap(), dirac(1));
        assert_eq!(icx_decompose(&dirac(0), &law(&[(1, 1, 2), (5, 1, 2)])).unwrap(), dirac(3));

        let nu = law(&[(0, 1, 4), (2, 3, 4)]);
        let rho = icx_decompose(&dirac(0), &nu).unwrap();
        assert_eq!(rho, law(&[(1, 1, 2), (2, 1, 2)]));
        assert!(check_st(&dirac(0), &rho).holds);
        assert!(check_cx(&rho, &nu).holds);

        assert_eq!(icx_decompose(&dirac(2), &dirac(0)), Err(Error::NotIcxOrdered));
        let half = DiscreteDistribution::dirac(q(1, 2));
        assert!(matches!(icx_decompose(&half, &dirac(1)), Err(Error::NonIntegerSupport(_))));
    }

    #[test]
    fn verdict_json() {
        let v = check_cx(&law(&[(0, 1, 2), (2, 1, 2)]), &dirac(1));
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(
            json,
            r#"{"holds":false,"witness":{"kind":"stop-loss","point":"1","lhs_value":"1/2","rhs_value":"0"}}"#
        );
        assert_eq!(serde_json::to_string(&check_cx(&dirac(1), &dirac(1))).unwrap(), r#"{"holds":true}"#);
    }
}
