//! Convex ordering of compound distributions, made executable.
//!
//! * [`distribution`]: exact finitely supported laws (mean, stop-loss, CDF,
//!   convolution, mixtures, compounding).
//! * [`orders`]: exact `≺cx`, `≺icx`, `≺st` checks with witnesses, and the
//!   integer `icx = st ∘ cx` split.
//! * [`diatomic`]: decomposition of `mu ≺cx nu` into weighted triples
//!   `(v_minus, u, v_plus)`.
//! * [`coupling`]: samplers for the martingale coupling of two compound sums
//!   (and of a Poisson process at two random times).
//! * [`verify`]: statistical checks of simulated couplings.
//!
//! Everything is generic over [`Scalar`]; the aliases below fix the exact
//! rational instantiation used for verification.

pub mod coupling;
pub mod diatomic;
pub mod distribution;
pub mod error;
pub mod instances;
pub mod orders;
pub mod samples_csv;
pub mod scalar;
pub mod verify;

pub use coupling::{
    run_simulation, sample_compound_coupling, sample_compound_direct, sample_poisson_coupling, CouplingSample, JumpModel, SampleSet,
    Simulation, SimulationConfig, SimulationMode,
};
pub use diatomic::{
    diatomic_decompose, diatomic_decompose_with, sample_atom, validate_decomposition, DecomposeOptions,
    DiatomicAtom, DiatomicDecomposition, SelectionRule, ValidationReport,
};
pub use distribution::{compound_exact, DiscreteDistribution, SubProbability};
pub use error::{Error, Result};
pub use orders::{
    barycentric_weights, check_cx, check_icx, check_st, icx_decompose, BarycentricWeights, OrderVerdict, Witness,
    WitnessKind,
};
pub use scalar::{parse_rational, Scalar};

/// Arbitrary-precision rational in lowest terms.
pub type Rational = num_rational::BigRational;

/// Exact finitely supported probability law.
pub type Distribution = DiscreteDistribution<Rational>;
pub type FloatDistribution = DiscreteDistribution<f64>;

pub type Decomposition = DiatomicDecomposition<Rational>;
pub type Atom = DiatomicAtom<Rational>;
pub type Verdict = OrderVerdict<Rational>;

pub type ExactSample = CouplingSample<Rational>;
pub type FloatSample = CouplingSample<f64>;
