//! Finitely supported probability laws and their exact transforms.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn cmp_scalar<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Sort by point, merge equal points and drop non-positive weights.
pub(crate) fn canonical_atoms<T: Scalar>(mut atoms: Vec<(T, T)>) -> Vec<(T, T)> {
    atoms.sort_by(|a, b| cmp_scalar(&a.0, &b.0));
    let mut out: Vec<(T, T)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match out.last_mut() {
            Some((last, acc)) if *last == x => *acc = acc.clone() + w,
            _ => out.push((x, w)),
        }
    }
    out.retain(|(_, w)| w.is_positive());
    out
}

/// A probability law with finitely many atoms.
///
/// Points are strictly increasing, weights are positive and sum to one.
#[derive(Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    /// Build a law from `(point, weight)` pairs in any order.
    ///
    /// Duplicate points are merged and zero weights dropped. The total weight
    /// must be exactly one; nothing is renormalized.
    pub fn new<I: IntoIterator<Item = (T, T)>>(raw: I) -> Result<Self> {
        let raw: Vec<(T, T)> = raw.into_iter().collect();
        if let Some((_, w)) = raw.iter().find(|(_, w)| w.is_negative()) {
            return Err(Error::NegativeWeight(w.to_text()));
        }
        let atoms = canonical_atoms(raw);
        if atoms.is_empty() {
            return Err(Error::EmptySupport);
        }
        let total = atoms.iter().fold(T::zero(), |acc, (_, w)| acc + w.clone());
        if !total.is_one() {
            return Err(Error::NonUnitMass {
                total: total.to_text(),
            });
        }
        Ok(Self { atoms })
    }

    /// Caller guarantees canonical atoms with unit mass.
    pub(crate) fn from_canonical(atoms: Vec<(T, T)>) -> Self {
        debug_assert!(!atoms.is_empty());
        Self { atoms }
    }

    pub fn dirac(x: T) -> Self {
        Self {
            atoms: vec![(x, T::one())],
        }
    }

    /// Equal weights on the given points (duplicates accumulate).
    pub fn uniform<I: IntoIterator<Item = T>>(points: I) -> Result<Self> {
        let points: Vec<T> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::EmptySupport);
        }
        let w = T::one() / T::from_count(points.len() as u64);
        Self::new(points.into_iter().map(|x| (x, w.clone())))
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn points(&self) -> impl Iterator<Item = &T> {
        self.atoms.iter().map(|(x, _)| x)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_point(&self) -> &T {
        &self.atoms[0].0
    }

    pub fn max_point(&self) -> &T {
        &self.atoms[self.atoms.len() - 1].0
    }

    /// Mass of the single point `x`.
    pub fn probability_of(&self, x: &T) -> T {
        match self.atoms.binary_search_by(|(p, _)| cmp_scalar(p, x)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn mean(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, (x, w)| acc + x.clone() * w.clone())
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.atoms.iter().fold(T::zero(), |acc, (x, w)| {
            let d = x.clone() - m.clone();
            acc + d.clone() * d * w.clone()
        })
    }

    /// `E|X|`.
    pub fn mean_abs(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, (x, w)| acc + x.abs() * w.clone())
    }

    /// Stop-loss transform `E (X - t)^+`.
    pub fn stop_loss(&self, t: &T) -> T {
        self.atoms
            .iter()
            .filter(|(x, _)| x > t)
            .fold(T::zero(), |acc, (x, w)| acc + (x.clone() - t.clone()) * w.clone())
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: &T) -> T {
        self.atoms
            .iter()
            .take_while(|(p, _)| p <= x)
            .fold(T::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// Law of `f(X)`.
    pub fn map<F: Fn(&T) -> T>(&self, f: F) -> Self {
        Self::from_canonical(canonical_atoms(
            self.atoms.iter().map(|(x, w)| (f(x), w.clone())).collect(),
        ))
    }

    /// Law of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut raw = Vec::with_capacity(self.len() * other.len());
        for (x, wx) in &self.atoms {
            for (y, wy) in &other.atoms {
                raw.push((x.clone() + y.clone(), wx.clone() * wy.clone()));
            }
        }
        Self::from_canonical(canonical_atoms(raw))
    }

    /// `n`-fold convolution; `n = 0` gives the point mass at zero.
    pub fn convolution_power(&self, n: u64) -> Self {
        let mut acc = Self::dirac(T::zero());
        for _ in 0..n {
            acc = acc.convolve(self);
        }
        acc
    }

    /// Weighted mixture; the mixing weights must sum to exactly one.
    pub fn mix<'a, I>(components: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, &'a Self)>,
    {
        let mut raw = Vec::new();
        let mut total = T::zero();
        for (weight, d) in components {
            if weight.is_negative() {
                return Err(Error::NegativeWeight(weight.to_text()));
            }
            total = total + weight.clone();
            raw.extend(d.atoms.iter().map(|(x, w)| (x.clone(), w.clone() * weight.clone())));
        }
        if !total.is_one() {
            return Err(Error::NonUnitMass {
                total: total.to_text(),
            });
        }
        let atoms = canonical_atoms(raw);
        if atoms.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Self::from_canonical(atoms))
    }

    /// Every point is a nonnegative integer.
    pub fn is_count_law(&self) -> bool {
        self.points().all(|x| x.as_count().is_some())
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.min_point().is_negative()
    }

    /// Convert each coordinate with `f`.
    pub fn cast<U: Scalar, F: Fn(&T) -> U>(&self, f: F) -> DiscreteDistribution<U> {
        DiscreteDistribution {
            atoms: canonical_atoms(self.atoms.iter().map(|(x, w)| (f(x), f(w))).collect()),
        }
    }

    pub fn to_f64(&self) -> DiscreteDistribution<f64> {
        self.cast(Scalar::to_f64_lossy)
    }
}

/// Law of `X_1 + ... + X_N` with `N ~ count` independent of the i.i.d. `X_i ~ jump`.
pub fn compound_exact<T: Scalar>(
    count: &DiscreteDistribution<T>,
    jump: &DiscreteDistribution<T>,
) -> Result<DiscreteDistribution<T>> {
    let mut counts = Vec::with_capacity(count.len());
    for (n, w) in count.atoms() {
        let n = n
            .as_count()
            .ok_or_else(|| Error::NonIntegerCount(n.to_text()))?;
        counts.push((n, w.clone()));
    }
    let mut raw = Vec::new();
    let mut power = DiscreteDistribution::dirac(T::zero());
    let mut k = 0u64;
    for (n, w) in counts {
        while k < n {
            power = power.convolve(jump);
            k += 1;
        }
        raw.extend(power.atoms().iter().map(|(x, p)| (x.clone(), p.clone() * w.clone())));
    }
    Ok(DiscreteDistribution::from_canonical(canonical_atoms(raw)))
}

impl<T: Scalar> fmt::Debug for DiscreteDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", x.to_text(), w.to_text())?;
        }
        f.write_str("}")
    }
}

impl<T: Scalar> fmt::Display for DiscreteDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}·δ[{}]", w.to_text(), x.to_text())?;
        }
        Ok(())
    }
}

/// Nonnegative measure with finitely many atoms; the residual laws of the
/// decomposition loop.
#[derive(Clone, Debug, PartialEq)]
pub struct SubProbability<T> {
    atoms: Vec<(T, T)>,
    total_mass: T,
}

impl<T: Scalar> SubProbability<T> {
    pub fn from_distribution(d: &DiscreteDistribution<T>) -> Self {
        Self {
            atoms: d.atoms.clone(),
            total_mass: T::one(),
        }
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> &T {
        &self.total_mass
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass_at(&self, x: &T) -> T {
        match self.atoms.binary_search_by(|(p, _)| cmp_scalar(p, x)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    /// Remove `amount` of mass at `x`. Atoms that reach zero are dropped.
    ///
    /// Panics if `x` is not an atom or if the subtraction would make the
    /// mass negative.
    pub fn remove(&mut self, x: &T, amount: &T) {
        if amount.is_zero() {
            return;
        }
        let i = self
            .atoms
            .binary_search_by(|(p, _)| cmp_scalar(p, x))
            .unwrap_or_else(|_| panic!("removing mass from a missing atom {}", x.to_text()));
        let left = self.atoms[i].1.clone() - amount.clone();
        assert!(!left.is_negative(), "mass at {} would become negative", x.to_text());
        if left.is_zero() {
            self.atoms.remove(i);
        } else {
            self.atoms[i].1 = left;
        }
        self.total_mass = self.total_mass.clone() - amount.clone();
        if self.atoms.is_empty() {
            self.total_mass = T::zero();
        }
    }

    /// The measure divided by its total mass.
    pub fn normalized(&self) -> Option<DiscreteDistribution<T>> {
        if self.atoms.is_empty() {
            return None;
        }
        let total = self.total_mass.clone();
        Some(DiscreteDistribution::from_canonical(
            self.atoms
                .iter()
                .map(|(x, w)| (x.clone(), w.clone() / total.clone()))
                .collect(),
        ))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NumberText {
    Text(String),
    Number(serde_json::Number),
}

impl NumberText {
    fn into_string(self) -> String {
        match self {
            NumberText::Text(s) => s,
            NumberText::Number(n) => n.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    x: NumberText,
    w: NumberText,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    atoms: Vec<AtomJson>,
}

impl<T: Scalar> Serialize for DiscreteDistribution<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionJson {
            atoms: self
                .atoms
                .iter()
                .map(|(x, w)| AtomJson {
                    x: NumberText::Text(x.to_text()),
                    w: NumberText::Text(w.to_text()),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for DiscreteDistribution<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DistributionJson::deserialize(deserializer)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| Ok((T::parse_text(&a.x.into_string())?, T::parse_text(&a.w.into_string())?)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Self::new(atoms).map_err(D::Error::custom)
    }
}
