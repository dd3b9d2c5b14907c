//! Samplers for the martingale coupling `(A, B)` of two compound sums, and of
//! a Poisson process read at two convex-ordered random times.
//!
//! Compound case: draw a decomposition atom `(N-, M, N+)`, draw jumps
//! `X_1..X_{N+}`, set `A = S_M`, and let `B` be `S_{N-}` or `S_{N+}` with the
//! barycentric weights of `A` in `[S_{N-}, S_{N+}]`. Given the atom and the
//! partial sums, `E[B | ...] = A`.

use num_traits::Signed;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, Poisson};
use rayon::prelude::*;

use crate::diatomic::{AtomSampler, DiatomicDecomposition};
use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::orders::BarycentricWeights;
use crate::scalar::Scalar;
use crate::Rational;

/// One realized pair `(A, B)` with its scaffolding.
///
/// In Poisson mode the three integer fields hold the counts
/// `N_{t-}, N_s, N_{t+}`, which are also the three partial sums.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSample<T> {
    pub atom_index: usize,
    pub n_minus: u64,
    pub m: u64,
    pub n_plus: u64,
    pub s_n_minus: T,
    pub a: T,
    pub s_n_plus: T,
    pub b: T,
    pub b_took_upper: bool,
}

impl<T: Scalar> CouplingSample<T> {
    /// `alpha * S_{N-} + beta * S_{N+}`, which equals `a` up to rounding.
    pub fn conditional_mean(&self) -> T {
        let bw = BarycentricWeights::unchecked(&self.s_n_minus, &self.s_n_plus, &self.a);
        bw.alpha * self.s_n_minus.clone() + bw.beta * self.s_n_plus.clone()
    }

    pub fn is_sandwiched(&self) -> bool {
        self.n_minus <= self.m
            && self.m <= self.n_plus
            && self.s_n_minus <= self.a
            && self.a <= self.s_n_plus
    }

    pub fn b_is_endpoint(&self) -> bool {
        self.b == self.s_n_minus || self.b == self.s_n_plus
    }
}

/// Law of the summands.
#[derive(Clone, Debug, PartialEq)]
pub enum JumpModel {
    DiscreteExact(DiscreteDistribution<Rational>),
    Exponential(f64),
    Deterministic(Rational),
}

impl JumpModel {
    /// `exp:<rate>`, `const:<c>`; discrete laws are loaded by the caller.
    pub fn describe(&self) -> String {
        match self {
            JumpModel::DiscreteExact(d) => format!("discrete:{}", serde_json::to_string(d).unwrap_or_default()),
            JumpModel::Exponential(rate) => format!("exp:{rate}"),
            JumpModel::Deterministic(c) => format!("const:{}", c.to_text()),
        }
    }

    /// Exact law of one jump, when there is one.
    pub fn exact_law(&self) -> Option<DiscreteDistribution<Rational>> {
        match self {
            JumpModel::DiscreteExact(d) => Some(d.clone()),
            JumpModel::Deterministic(c) => Some(DiscreteDistribution::dirac(c.clone())),
            JumpModel::Exponential(_) => None,
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            JumpModel::DiscreteExact(d) if !d.is_nonnegative() => {
                Err(Error::NegativeJumpSupport(d.min_point().to_text()))
            }
            JumpModel::Deterministic(c) if c.is_negative() => Err(Error::NegativeJumpSupport(c.to_text())),
            JumpModel::Exponential(rate) if !(rate.is_finite() && *rate > 0.0) => {
                Err(Error::InvalidParameter(format!("exponential rate {rate}")))
            }
            _ => Ok(()),
        }
    }
}

/// A generator of the first `n` summands.
///
/// Implementations must produce exchangeable sequences; i.i.d. is the usual
/// case.
pub trait JumpSource<T>: Sync {
    fn fill<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<T>);

    fn is_nonnegative(&self) -> bool;
}

/// I.i.d. draws from a finitely supported law, keeping exact values.
#[derive(Clone, Debug)]
pub struct DiscreteJumps<T> {
    points: Vec<T>,
    cumulative: Vec<f64>,
}

impl<T: Scalar> DiscreteJumps<T> {
    pub fn new(law: &DiscreteDistribution<T>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = law
            .atoms()
            .iter()
            .map(|(_, w)| {
                acc += w.to_f64_lossy();
                acc
            })
            .collect();
        cumulative.iter_mut().for_each(|c| *c /= acc);
        Self {
            points: law.points().cloned().collect(),
            cumulative,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &T {
        let r: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= r).min(self.points.len() - 1);
        &self.points[i]
    }
}

impl<T: Scalar> JumpSource<T> for DiscreteJumps<T> {
    fn fill<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<T>) {
        out.extend((0..n).map(|_| self.draw(rng).clone()));
    }

    fn is_nonnegative(&self) -> bool {
        self.points.iter().all(|x| !x.is_negative())
    }
}

/// Every jump equals the same constant.
#[derive(Clone, Debug)]
pub struct ConstantJumps<T>(pub T);

impl<T: Scalar> JumpSource<T> for ConstantJumps<T> {
    fn fill<R: Rng + ?Sized>(&self, n: usize, _rng: &mut R, out: &mut Vec<T>) {
        out.extend(std::iter::repeat_n(self.0.clone(), n));
    }

    fn is_nonnegative(&self) -> bool {
        !self.0.is_negative()
    }
}

#[derive(Clone, Debug)]
pub struct ExponentialJumps {
    dist: Exp<f64>,
}

impl ExponentialJumps {
    pub fn new(rate: f64) -> Result<Self> {
        Exp::new(rate)
            .ok()
            .filter(|_| rate > 0.0 && rate.is_finite())
            .map(|dist| Self { dist })
            .ok_or_else(|| Error::InvalidParameter(format!("exponential rate {rate}")))
    }
}

impl JumpSource<f64> for ExponentialJumps {
    fn fill<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.extend((0..n).map(|_| self.dist.sample(rng)));
    }

    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// A uniformly random ordering of a fixed block of values: exchangeable but
/// not independent.
#[derive(Clone, Debug)]
pub struct ExchangeableBlock<T> {
    block: Vec<T>,
}

impl<T: Scalar> ExchangeableBlock<T> {
    pub fn new(block: Vec<T>) -> Self {
        Self { block }
    }

    pub fn len(&self) -> usize {
        self.block.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block.is_empty()
    }
}

impl<T: Scalar> JumpSource<T> for ExchangeableBlock<T> {
    /// Panics if more jumps are requested than the block holds.
    fn fill<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<T>) {
        assert!(n <= self.block.len(), "block of {} cannot supply {n} jumps", self.block.len());
        out.extend(index::sample(rng, self.block.len(), n).into_iter().map(|i| self.block[i].clone()));
    }

    fn is_nonnegative(&self) -> bool {
        self.block.iter().all(|x| !x.is_negative())
    }
}

fn choose_endpoint<T: Scalar, R: Rng + ?Sized>(lower: &T, a: &T, upper: &T, rng: &mut R) -> (T, bool) {
    let beta = BarycentricWeights::unchecked(lower, upper, a).beta.to_f64_lossy();
    let r: f64 = rng.random();
    if r < beta {
        (upper.clone(), true)
    } else {
        (lower.clone(), false)
    }
}

/// Compound-sum coupling over a count-valued decomposition.
#[derive(Clone, Debug)]
pub struct CompoundCoupling<'a, J> {
    counts: Vec<(u64, u64, u64)>,
    atoms: AtomSampler,
    jumps: &'a J,
}

impl<'a, J> CompoundCoupling<'a, J> {
    pub fn new<T: Scalar, D: Scalar>(dec: &DiatomicDecomposition<D>, jumps: &'a J) -> Result<Self>
    where
        J: JumpSource<T>,
    {
        if !jumps.is_nonnegative() {
            return Err(Error::NegativeJumpSupport("jump source".into()));
        }
        let counts = dec
            .atoms
            .iter()
            .map(|a| match (a.v_minus.as_count(), a.u.as_count(), a.v_plus.as_count()) {
                (Some(lo), Some(m), Some(hi)) => Ok((lo, m, hi)),
                _ => Err(Error::NonIntegerDecomposition(a.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            counts,
            atoms: AtomSampler::new(dec),
            jumps,
        })
    }

    pub fn sample<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingSample<T>
    where
        J: JumpSource<T>,
    {
        let atom_index = self.atoms.sample_index(rng);
        let (n_minus, m, n_plus) = self.counts[atom_index];
        let mut jumps = Vec::with_capacity(n_plus as usize);
        self.jumps.fill(n_plus as usize, rng, &mut jumps);

        let mut partial = T::zero();
        let (mut s_n_minus, mut a) = (T::zero(), T::zero());
        for (k, x) in std::iter::once(None).chain(jumps.into_iter().map(Some)).enumerate() {
            if let Some(x) = x {
                partial = partial + x;
            }
            let k = k as u64;
            if k == n_minus {
                s_n_minus = partial.clone();
            }
            if k == m {
                a = partial.clone();
            }
        }
        let s_n_plus = partial;
        let (b, b_took_upper) = choose_endpoint(&s_n_minus, &a, &s_n_plus, rng);
        CouplingSample {
            atom_index,
            n_minus,
            m,
            n_plus,
            s_n_minus,
            a,
            s_n_plus,
            b,
            b_took_upper,
        }
    }
}

/// One draw of the compound coupling.
pub fn sample_compound_coupling<T, D, J, R>(
    dec: &DiatomicDecomposition<D>,
    jumps: &J,
    rng: &mut R,
) -> Result<CouplingSample<T>>
where
    T: Scalar,
    D: Scalar,
    J: JumpSource<T>,
    R: Rng + ?Sized,
{
    Ok(CompoundCoupling::new(dec, jumps)?.sample(rng))
}

/// Poisson process read at the times of a decomposition of `S ≺cx T`.
#[derive(Clone, Debug)]
pub struct PoissonCoupling {
    // Means of the three independent increments for each atom.
    increments: Vec<[f64; 3]>,
    atoms: AtomSampler,
}

impl PoissonCoupling {
    pub fn new<D: Scalar>(dec: &DiatomicDecomposition<D>, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!("poisson rate must be positive, got {rate}")));
        }
        let mut increments = Vec::with_capacity(dec.atoms.len());
        for a in &dec.atoms {
            if a.v_minus.is_negative() {
                return Err(Error::NegativeTime(a.v_minus.to_text()));
            }
            let t_minus = a.v_minus.to_f64_lossy();
            let s = a.u.to_f64_lossy();
            let t_plus = a.v_plus.to_f64_lossy();
            increments.push([rate * t_minus, rate * (s - t_minus), rate * (t_plus - s)]);
        }
        Ok(Self {
            increments,
            atoms: AtomSampler::new(dec),
        })
    }

    pub fn sample<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingSample<T> {
        let atom_index = self.atoms.sample_index(rng);
        let mut counts = [0u64; 3];
        let mut total = 0u64;
        for (slot, &mean) in counts.iter_mut().zip(&self.increments[atom_index]) {
            if mean > 0.0 {
                let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
                total += draw as u64;
            }
            *slot = total;
        }
        let [n_minus, m, n_plus] = counts;
        let (s_n_minus, a, s_n_plus) = (T::from_count(n_minus), T::from_count(m), T::from_count(n_plus));
        let (b, b_took_upper) = choose_endpoint(&s_n_minus, &a, &s_n_plus, rng);
        CouplingSample {
            atom_index,
            n_minus,
            m,
            n_plus,
            s_n_minus,
            a,
            s_n_plus,
            b,
            b_took_upper,
        }
    }
}

/// One draw of the Poisson subordination coupling.
pub fn sample_poisson_coupling<T, D, R>(dec: &DiatomicDecomposition<D>, rate: f64, rng: &mut R) -> Result<CouplingSample<T>>
where
    T: Scalar,
    D: Scalar,
    R: Rng + ?Sized,
{
    Ok(PoissonCoupling::new(dec, rate)?.sample(rng))
}

/// `n` independent draws of `S_N = X_1 + ... + X_N` with `N ~ count`,
/// straight from the definition. Reference sample for the marginal of `B`.
pub fn sample_compound_direct<T, D, J>(count: &DiscreteDistribution<D>, jumps: &J, n: usize, seed: u64) -> Result<Vec<T>>
where
    T: Scalar,
    D: Scalar,
    J: JumpSource<T>,
{
    if !count.is_count_law() {
        return Err(Error::NonIntegerCount(count.min_point().to_text()));
    }
    let counts = DiscreteJumps::new(&count.to_f64());
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let k = *counts.draw(&mut rng) as usize;
            let mut xs = Vec::with_capacity(k);
            jumps.fill(k, &mut rng, &mut xs);
            xs.into_iter().fold(T::zero(), |acc, x| acc + x)
        })
        .collect())
}

/// Generator for sample `index` of a run seeded with `seed`: the ChaCha
/// stream selected by the index, so each sample is independent of scheduling.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimulationMode {
    Compound(JumpModel),
    Poisson { rate: f64 },
}

impl SimulationMode {
    pub fn name(&self) -> &'static str {
        match self {
            SimulationMode::Compound(_) => "compound",
            SimulationMode::Poisson { .. } => "poisson",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub mode: SimulationMode,
    pub decomposition: DiatomicDecomposition<Rational>,
    pub n: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// Stable key/value description of the run, written at the top of every
    /// output file.
    pub fn echo(&self) -> Vec<(String, String)> {
        let dec_json = serde_json::to_string(&self.decomposition).unwrap_or_default();
        let mut echo = vec![("mode".to_string(), self.mode.name().to_string())];
        match &self.mode {
            SimulationMode::Compound(jumps) => echo.push(("jumps".into(), jumps.describe())),
            SimulationMode::Poisson { rate } => echo.push(("rate".into(), rate.to_string())),
        }
        echo.extend([
            ("rule".into(), self.decomposition.selection_rule.name().to_string()),
            ("decomposition_id".into(), decomposition_id(&dec_json)),
            ("decomposition".into(), dec_json),
            ("seed".into(), self.seed.to_string()),
            ("n".into(), self.n.to_string()),
        ]);
        echo
    }
}

/// Short fingerprint (64-bit FNV-1a, hex) of a serialized decomposition.
pub fn decomposition_id(json: &str) -> String {
    format!("{:016x}", fnv1a(json.as_bytes()))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T> {
    pub echo: Vec<(String, String)>,
    pub samples: Vec<CouplingSample<T>>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn echo_value(&self, key: &str) -> Option<&str> {
        self.echo.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn a_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.a.to_f64_lossy()).collect()
    }

    pub fn b_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.b.to_f64_lossy()).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Output of a batch run: exact values unless the jumps are continuous.
#[derive(Clone, Debug, PartialEq)]
pub enum Simulation {
    Exact(SampleSet<Rational>),
    Float(SampleSet<f64>),
}

impl Simulation {
    pub fn len(&self) -> usize {
        match self {
            Simulation::Exact(s) => s.len(),
            Simulation::Float(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn a_values(&self) -> Vec<f64> {
        match self {
            Simulation::Exact(s) => s.a_values(),
            Simulation::Float(s) => s.a_values(),
        }
    }

    pub fn b_values(&self) -> Vec<f64> {
        match self {
            Simulation::Exact(s) => s.b_values(),
            Simulation::Float(s) => s.b_values(),
        }
    }

    pub fn to_f64(&self) -> SampleSet<f64> {
        match self {
            Simulation::Float(s) => s.clone(),
            Simulation::Exact(s) => SampleSet {
                echo: s.echo.clone(),
                samples: s.samples.iter().map(sample_to_f64).collect(),
            },
        }
    }
}

pub fn sample_to_f64<T: Scalar>(s: &CouplingSample<T>) -> CouplingSample<f64> {
    CouplingSample {
        atom_index: s.atom_index,
        n_minus: s.n_minus,
        m: s.m,
        n_plus: s.n_plus,
        s_n_minus: s.s_n_minus.to_f64_lossy(),
        a: s.a.to_f64_lossy(),
        s_n_plus: s.s_n_plus.to_f64_lossy(),
        b: s.b.to_f64_lossy(),
        b_took_upper: s.b_took_upper,
    }
}

/// Draw `n` samples in parallel; sample `i` uses `sample_rng(seed, i)`.
pub fn draw_samples<T, F>(n: usize, seed: u64, draw: F) -> Vec<CouplingSample<T>>
where
    T: Scalar,
    F: Fn(&mut ChaCha8Rng) -> CouplingSample<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| draw(&mut sample_rng(seed, i)))
        .collect()
}

/// Batch driver; bit-reproducible given the config.
pub fn run_simulation(config: &SimulationConfig) -> Result<Simulation> {
    let echo = config.echo();
    let dec = &config.decomposition;
    let (n, seed) = (config.n, config.seed);
    match &config.mode {
        SimulationMode::Poisson { rate } => {
            let coupling = PoissonCoupling::new(dec, *rate)?;
            let samples = draw_samples(n, seed, |rng| coupling.sample(rng));
            Ok(Simulation::Exact(SampleSet { echo, samples }))
        }
        SimulationMode::Compound(model) => {
            model.check()?;
            match model {
                JumpModel::Exponential(rate) => {
                    let jumps = ExponentialJumps::new(*rate)?;
                    let coupling = CompoundCoupling::new::<f64, _>(dec, &jumps)?;
                    let samples = draw_samples(n, seed, |rng| coupling.sample(rng));
                    Ok(Simulation::Float(SampleSet { echo, samples }))
                }
                JumpModel::Deterministic(c) => {
                    let jumps = ConstantJumps(c.clone());
                    let coupling = CompoundCoupling::new::<Rational, _>(dec, &jumps)?;
                    let samples = draw_samples(n, seed, |rng| coupling.sample(rng));
                    Ok(Simulation::Exact(SampleSet { echo, samples }))
                }
                JumpModel::DiscreteExact(law) => {
                    let jumps = DiscreteJumps::new(law);
                    let coupling = CompoundCoupling::new::<Rational, _>(dec, &jumps)?;
                    let samples = draw_samples(n, seed, |rng| coupling.sample(rng));
                    Ok(Simulation::Exact(SampleSet { echo, samples }))
                }
            }
        }
    }
}
