//! Diatomic decomposition of a convex-ordered pair of finitely supported laws.
//!
//! Given `mu ≺cx nu`, the decomposition is a finite list of weighted triples
//! `(v_minus, u, v_plus)` with `v_minus <= u <= v_plus` such that the weighted
//! `u`'s have law `mu` and splitting each `u` onto `{v_minus, v_plus}` with its
//! barycentric weights yields `nu`. The triples are produced greedily: pick a
//! triple of residual atoms with no residual `nu`-mass strictly between the
//! two outer points, remove as much mass as the three residual atoms allow,
//! and repeat until everything is consumed.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distribution::{canonical_atoms, DiscreteDistribution, SubProbability};
use crate::error::{Error, Result};
use crate::orders::{check_cx, BarycentricWeights};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DiatomicAtom<T> {
    pub v_minus: T,
    pub u: T,
    pub v_plus: T,
    pub weight: T,
}

impl<T: Scalar> DiatomicAtom<T> {
    pub fn barycentric(&self) -> BarycentricWeights<T> {
        BarycentricWeights::unchecked(&self.v_minus, &self.v_plus, &self.u)
    }

    pub fn is_sandwiched(&self) -> bool {
        self.v_minus <= self.u && self.u <= self.v_plus
    }
}

impl<T: Scalar> fmt::Display for DiatomicAtom<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}) x {}",
            self.v_minus.to_text(),
            self.u.to_text(),
            self.v_plus.to_text(),
            self.weight.to_text()
        )
    }
}

/// Which admissible triple the decomposition loop picks at each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Leftmost residual `u`; the degenerate triple `(u, u, u)` when the
    /// residual `nu` charges `u`, otherwise the nearest residual `nu`-atoms on
    /// either side.
    #[default]
    LeftCurtain,
    /// Scan `u` upward and take the first pair of consecutive residual
    /// `nu`-atoms bracketing it.
    FirstAdmissible,
}

impl SelectionRule {
    pub fn name(self) -> &'static str {
        match self {
            SelectionRule::LeftCurtain => "left-curtain",
            SelectionRule::FirstAdmissible => "first-admissible",
        }
    }
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left-curtain" => Ok(SelectionRule::LeftCurtain),
            "first-admissible" => Ok(SelectionRule::FirstAdmissible),
            other => Err(Error::Parse(format!("unknown selection rule {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiatomicDecomposition<T> {
    pub atoms: Vec<DiatomicAtom<T>>,
    pub selection_rule: SelectionRule,
}

impl<T: Scalar> DiatomicDecomposition<T> {
    /// Law of `U`.
    pub fn u_marginal(&self) -> Result<DiscreteDistribution<T>> {
        DiscreteDistribution::new(self.atoms.iter().map(|a| (a.u.clone(), a.weight.clone())))
    }

    /// Law obtained by splitting every `u` onto its two outer points.
    pub fn split_marginal(&self) -> Result<DiscreteDistribution<T>> {
        DiscreteDistribution::new(split_atoms(&self.atoms))
    }

    /// All three coordinates of every atom are nonnegative integers.
    pub fn is_count_valued(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| [&a.v_minus, &a.u, &a.v_plus].iter().all(|x| x.as_count().is_some()))
    }
}

fn split_atoms<T: Scalar>(atoms: &[DiatomicAtom<T>]) -> Vec<(T, T)> {
    let mut raw = Vec::with_capacity(2 * atoms.len());
    for a in atoms {
        let bw = a.barycentric();
        raw.push((a.v_minus.clone(), a.weight.clone() * bw.alpha));
        raw.push((a.v_plus.clone(), a.weight.clone() * bw.beta));
    }
    raw
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DecomposeOptions {
    /// Re-check `mu_* ≺cx nu_*` (normalized) after every step. Quadratic cost.
    pub check_invariant: bool,
}

/// Run the decomposition loop with default options.
pub fn diatomic_decompose<T: Scalar>(
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
    rule: SelectionRule,
) -> Result<DiatomicDecomposition<T>> {
    diatomic_decompose_with(mu, nu, rule, DecomposeOptions::default())
}

pub fn diatomic_decompose_with<T: Scalar>(
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
    rule: SelectionRule,
    options: DecomposeOptions,
) -> Result<DiatomicDecomposition<T>> {
    if !check_cx(mu, nu).holds {
        return Err(Error::NotCxOrdered);
    }
    let max_steps = mu.len() + nu.len();
    let mut mu_rest = SubProbability::from_distribution(mu);
    let mut nu_rest = SubProbability::from_distribution(nu);
    let mut atoms = Vec::new();

    while !mu_rest.is_zero() {
        let step = atoms.len() + 1;
        if step > max_steps {
            return Err(Error::InternalOrderViolation {
                step,
                detail: "step budget exhausted".into(),
            });
        }
        let (v_minus, u, v_plus) = match rule {
            SelectionRule::LeftCurtain => left_curtain_triple(&mu_rest, &nu_rest),
            SelectionRule::FirstAdmissible => first_admissible_triple(&mu_rest, &nu_rest),
        }
        .ok_or_else(|| Error::InternalOrderViolation {
            step,
            detail: "no residual nu-atoms bracket the residual mu".into(),
        })?;

        let bw = BarycentricWeights::unchecked(&v_minus, &v_plus, &u);
        let mass_u = mu_rest.mass_at(&u);
        let mass_minus = nu_rest.mass_at(&v_minus);
        let mass_plus = nu_rest.mass_at(&v_plus);

        // A zero barycentric weight leaves that endpoint untouched, so its
        // bound is inactive.
        let bound_minus = bw.alpha.is_positive().then(|| mass_minus.clone() / bw.alpha.clone());
        let bound_plus = bw.beta.is_positive().then(|| mass_plus.clone() / bw.beta.clone());
        let mut s = mass_u.clone();
        for b in [&bound_minus, &bound_plus].into_iter().flatten() {
            if *b < s {
                s = b.clone();
            }
        }

        // The binding constraint empties its atom exactly.
        let take_minus = if bound_minus.as_ref() == Some(&s) {
            mass_minus
        } else {
            s.clone() * bw.alpha.clone()
        };
        let take_plus = if bound_plus.as_ref() == Some(&s) {
            mass_plus
        } else {
            s.clone() * bw.beta.clone()
        };
        mu_rest.remove(&u, &s);
        nu_rest.remove(&v_minus, &take_minus);
        nu_rest.remove(&v_plus, &take_plus);

        atoms.push(DiatomicAtom {
            v_minus,
            u,
            v_plus,
            weight: s,
        });

        if options.check_invariant && !mu_rest.is_zero() {
            let invariant_holds = match (mu_rest.normalized(), nu_rest.normalized()) {
                (Some(m), Some(n)) => mu_rest.total_mass() == nu_rest.total_mass() && check_cx(&m, &n).holds,
                _ => false,
            };
            if !invariant_holds {
                return Err(Error::InternalOrderViolation {
                    step,
                    detail: "residual laws are no longer convex-ordered".into(),
                });
            }
        }
    }
    if !nu_rest.is_zero() {
        return Err(Error::InternalOrderViolation {
            step: atoms.len(),
            detail: "residual nu mass left over".into(),
        });
    }
    Ok(DiatomicDecomposition {
        atoms,
        selection_rule: rule,
    })
}

fn left_curtain_triple<T: Scalar>(mu: &SubProbability<T>, nu: &SubProbability<T>) -> Option<(T, T, T)> {
    let u = mu.atoms().first()?.0.clone();
    if nu.mass_at(&u).is_positive() {
        return Some((u.clone(), u.clone(), u));
    }
    let below = nu.atoms().iter().rev().find(|(v, _)| *v < u)?;
    let above = nu.atoms().iter().find(|(v, _)| *v > u)?;
    Some((below.0.clone(), u, above.0.clone()))
}

fn first_admissible_triple<T: Scalar>(mu: &SubProbability<T>, nu: &SubProbability<T>) -> Option<(T, T, T)> {
    let nu_atoms = nu.atoms();
    for (u, _) in mu.atoms() {
        let bracket = nu_atoms
            .windows(2)
            .find(|pair| pair[0].0 <= *u && *u <= pair[1].0);
        if let Some(pair) = bracket {
            return Some((pair[0].0.clone(), u.clone(), pair[1].0.clone()));
        }
        if nu.mass_at(u).is_positive() {
            return Some((u.clone(), u.clone(), u.clone()));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(f, "{:<16} {}", c.name, if c.pass { "pass" } else { "FAIL" })?;
            if let Some(d) = &c.detail {
                write!(f, "  {d}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Exact check that `dec` represents the pair `(mu, nu)`.
pub fn validate_decomposition<T: Scalar>(
    dec: &DiatomicDecomposition<T>,
    mu: &DiscreteDistribution<T>,
    nu: &DiscreteDistribution<T>,
) -> ValidationReport {
    let total = dec.atoms.iter().fold(T::zero(), |acc, a| acc + a.weight.clone());
    let bad_weight = dec.atoms.iter().position(|a| !a.weight.is_positive());
    let weights = ValidationCheck {
        name: "weights",
        pass: total.is_one() && bad_weight.is_none(),
        detail: match bad_weight {
            Some(i) => Some(format!("atom {i} has non-positive weight")),
            None if !total.is_one() => Some(format!("weights sum to {}", total.to_text())),
            None => None,
        },
    };

    let unsandwiched = dec.atoms.iter().position(|a| !a.is_sandwiched());
    let sandwich = ValidationCheck {
        name: "sandwich",
        pass: unsandwiched.is_none(),
        detail: unsandwiched.map(|i| format!("atom {i} = {} violates v_minus <= u <= v_plus", dec.atoms[i])),
    };

    let u_law = canonical_atoms(dec.atoms.iter().map(|a| (a.u.clone(), a.weight.clone())).collect());
    let u_marginal = ValidationCheck {
        name: "u-marginal",
        pass: u_law == mu.atoms(),
        detail: (u_law != mu.atoms()).then(|| first_mismatch(&u_law, mu.atoms())),
    };

    let split_law = canonical_atoms(split_atoms(&dec.atoms));
    let split_marginal = ValidationCheck {
        name: "split-marginal",
        pass: split_law == nu.atoms(),
        detail: (split_law != nu.atoms()).then(|| first_mismatch(&split_law, nu.atoms())),
    };

    ValidationReport {
        checks: vec![weights, sandwich, u_marginal, split_marginal],
    }
}

fn first_mismatch<T: Scalar>(got: &[(T, T)], want: &[(T, T)]) -> String {
    let mut points: Vec<&T> = got.iter().chain(want.iter()).map(|(x, _)| x).collect();
    points.sort_by(|a, b| crate::distribution::cmp_scalar(*a, *b));
    points.dedup();
    let mass = |atoms: &[(T, T)], x: &T| {
        atoms
            .iter()
            .find(|(p, _)| p == x)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(T::zero)
    };
    for x in points {
        let (g, w) = (mass(got, x), mass(want, x));
        if g != w {
            return format!("mass at {} is {}, expected {}", x.to_text(), g.to_text(), w.to_text());
        }
    }
    String::from("laws differ")
}

/// Draws atoms with probability proportional to their weight.
#[derive(Clone, Debug)]
pub struct AtomSampler {
    cumulative: Vec<f64>,
}

impl AtomSampler {
    pub fn new<T: Scalar>(dec: &DiatomicDecomposition<T>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = dec
            .atoms
            .iter()
            .map(|a| {
                acc += a.weight.to_f64_lossy();
                acc
            })
            .collect();
        if let Some(last) = cumulative.last().copied() {
            cumulative.iter_mut().for_each(|c| *c /= last);
        }
        Self { cumulative }
    }

    /// Index of the drawn atom.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len().saturating_sub(1))
    }
}

/// Draw one atom of `dec` with probability equal to its weight.
pub fn sample_atom<'a, T: Scalar, R: Rng + ?Sized>(dec: &'a DiatomicDecomposition<T>, rng: &mut R) -> &'a DiatomicAtom<T> {
    &dec.atoms[AtomSampler::new(dec).sample_index(rng)]
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    v_minus: String,
    u: String,
    v_plus: String,
    weight: String,
}

#[derive(Serialize, Deserialize)]
struct DecompositionJson {
    rule: SelectionRule,
    atoms: Vec<AtomJson>,
}

impl<T: Scalar> Serialize for DiatomicDecomposition<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DecompositionJson {
            rule: self.selection_rule,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    v_minus: a.v_minus.to_text(),
                    u: a.u.to_text(),
                    v_plus: a.v_plus.to_text(),
                    weight: a.weight.to_text(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for DiatomicDecomposition<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DecompositionJson::deserialize(deserializer)?;
        let mut atoms = Vec::with_capacity(raw.atoms.len());
        for a in raw.atoms {
            let atom = DiatomicAtom {
                v_minus: T::parse_text(&a.v_minus).map_err(D::Error::custom)?,
                u: T::parse_text(&a.u).map_err(D::Error::custom)?,
                v_plus: T::parse_text(&a.v_plus).map_err(D::Error::custom)?,
                weight: T::parse_text(&a.weight).map_err(D::Error::custom)?,
            };
            if !atom.is_sandwiched() {
                return Err(D::Error::custom(format!("atom {atom} violates v_minus <= u <= v_plus")));
            }
            if !atom.weight.is_positive() {
                return Err(D::Error::custom(format!("atom {atom} has non-positive weight")));
            }
            atoms.push(atom);
        }
        if atoms.is_empty() {
            return Err(D::Error::custom("decomposition has no atoms"));
        }
        Ok(Self {
            atoms,
            selection_rule: raw.rule,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    fn z(n: i64) -> Rational {
        q(n, 1)
    }

    fn law(atoms: &[(i64, i64, i64)]) -> DiscreteDistribution<Rational> {
        DiscreteDistribution::new(atoms.iter().map(|&(x, p, d)| (z(x), q(p, d)))).unwrap()
    }

    fn atom(v_minus: i64, u: i64, v_plus: i64, weight: Rational) -> DiatomicAtom<Rational> {
        DiatomicAtom {
            v_minus: z(v_minus),
            u: z(u),
            v_plus: z(v_plus),
            weight,
        }
    }

    fn figure1() -> (DiscreteDistribution<Rational>, DiscreteDistribution<Rational>) {
        (
            law(&[(2, 1, 4), (3, 1, 4), (4, 1, 4), (5, 1, 4)]),
            law(&[(1, 1, 4), (3, 1, 4), (4, 1, 6), (5, 1, 6), (6, 1, 6)]),
        )
    }

    #[test]
    fn single_split() {
        let dec = diatomic_decompose(
            &DiscreteDistribution::dirac(z(1)),
            &law(&[(0, 1, 2), (2, 1, 2)]),
            SelectionRule::LeftCurtain,
        )
        .unwrap();
        assert_eq!(dec.atoms, vec![atom(0, 1, 2, z(1))]);
    }

    #[test]
    fn two_point_spread() {
        let mu = law(&[(1, 1, 2), (3, 1, 2)]);
        let nu = law(&[(0, 1, 2), (4, 1, 2)]);
        let dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
        assert_eq!(dec.atoms, vec![atom(0, 1, 4, q(1, 2)), atom(0, 3, 4, q(1, 2))]);
        assert!(validate_decomposition(&dec, &mu, &nu).all_pass());
    }

    #[test]
    fn figure1_pair_left_curtain() {
        let (mu, nu) = figure1();
        let dec = diatomic_decompose_with(
            &mu,
            &nu,
            SelectionRule::LeftCurtain,
            DecomposeOptions { check_invariant: true },
        )
        .unwrap();
        // Hand execution of the left-curtain loop on this pair.
        assert_eq!(
            dec.atoms,
            vec![
                atom(1, 2, 3, q(1, 4)),
                atom(3, 3, 3, q(1, 8)),
                atom(1, 3, 4, q(1, 8)),
                atom(4, 4, 4, q(1, 12)),
                atom(1, 4, 5, q(1, 6)),
                atom(5, 5, 5, q(1, 24)),
                atom(1, 5, 6, q(5, 24)),
            ]
        );
        let report = validate_decomposition(&dec, &mu, &nu);
        assert!(report.all_pass(), "{report}");
        assert!(dec.atoms.len() <= mu.len() + nu.len());
    }

    #[test]
    fn figure1_pair_first_admissible() {
        let (mu, nu) = figure1();
        let dec = diatomic_decompose_with(
            &mu,
            &nu,
            SelectionRule::FirstAdmissible,
            DecomposeOptions { check_invariant: true },
        )
        .unwrap();
        assert_eq!(dec.selection_rule, SelectionRule::FirstAdmissible);
        assert!(validate_decomposition(&dec, &mu, &nu).all_pass());
    }

    #[test]
    fn refuses_unordered_pairs() {
        let err = diatomic_decompose(
            &law(&[(0, 1, 2), (2, 1, 2)]),
            &DiscreteDistribution::dirac(z(1)),
            SelectionRule::LeftCurtain,
        );
        assert_eq!(err, Err(Error::NotCxOrdered));
    }

    #[test]
    fn validation_flags_wrong_target() {
        let dec = DiatomicDecomposition {
            atoms: vec![atom(0, 1, 2, z(1))],
            selection_rule: SelectionRule::LeftCurtain,
        };
        let one = DiscreteDistribution::dirac(z(1));
        assert!(validate_decomposition(&dec, &one, &law(&[(0, 1, 2), (2, 1, 2)])).all_pass());
        let report = validate_decomposition(&dec, &one, &one);
        assert!(!report.all_pass());
        assert!(!report.check("split-marginal").unwrap().pass);
        assert!(report.check("u-marginal").unwrap().pass);
        assert!(report.check("weights").unwrap().pass);

        let bad = DiatomicDecomposition {
            atoms: vec![atom(2, 1, 3, q(1, 2))],
            selection_rule: SelectionRule::LeftCurtain,
        };
        let report = validate_decomposition(&bad, &one, &one);
        assert!(!report.check("sandwich").unwrap().pass);
        assert!(!report.check("weights").unwrap().pass);
    }

    #[test]
    fn sampling() {
        let single = DiatomicDecomposition {
            atoms: vec![atom(0, 1, 2, z(1))],
            selection_rule: SelectionRule::LeftCurtain,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_atom(&single, &mut rng), &single.atoms[0]);
        }

        let two = DiatomicDecomposition {
            atoms: vec![atom(0, 1, 4, q(1, 2)), atom(0, 3, 4, q(1, 2))],
            selection_rule: SelectionRule::LeftCurtain,
        };
        let sampler = AtomSampler::new(&two);
        let n = 100_000;
        let hits = (0..n).filter(|_| sampler.sample_index(&mut rng) == 0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() < 4.0 * (0.25f64 / n as f64).sqrt(), "{freq}");

        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sampler.sample_index(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn json_round_trip() {
        let (mu, nu) = figure1();
        let dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
        let text = serde_json::to_string(&dec).unwrap();
        assert!(text.starts_with(r#"{"rule":"left-curtain","atoms":[{"v_minus":"1","u":"2","v_plus":"3","weight":"1/4"}"#));
        let back: DiatomicDecomposition<Rational> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, dec);

        let bad = r#"{"rule":"left-curtain","atoms":[{"v_minus":"3","u":"2","v_plus":"4","weight":"1"}]}"#;
        assert!(serde_json::from_str::<DiatomicDecomposition<Rational>>(bad).is_err());
    }
}
