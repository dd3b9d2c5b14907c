//! Statistical checks of simulated couplings and the exact counterexample for
//! jumps of both signs.
//!
//! Thresholds: martingale and mean tests pass when every `|z| < 4`;
//! goodness-of-fit tests pass when `p > 0.001`.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::coupling::SampleSet;
use crate::distribution::{compound_exact, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::orders::{check_cx, OrderVerdict};
use crate::scalar::Scalar;
use crate::Rational;

pub const Z_THRESHOLD: f64 = 4.0;
pub const P_THRESHOLD: f64 = 0.001;
pub const MIN_MARTINGALE_SAMPLES: usize = 100;
pub const MIN_KS_SAMPLES: usize = 1000;
/// Tolerance when matching a simulated value to a support point.
pub const SUPPORT_TOLERANCE: f64 = 1e-9;
/// Cells with a smaller expected count are pooled with their neighbours.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub reference: String,
    pub threshold: f64,
    pub pass: bool,
    pub n_samples: usize,
    pub notes: String,
}

/// Test functions `g` for `E[(B - A) g(A)] = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TestFamily {
    /// `1`, `x`, `x^2` and `1{x <= median(A)}`.
    #[default]
    Standard,
}

type TestFunction = Box<dyn Fn(f64) -> f64>;

/// Normalized residual `sum (B_i - A_i) g(A_i) / (sd * sqrt(n))` for each test
/// function.
pub fn martingale_z_scores(a: &[f64], b: &[f64], family: TestFamily) -> Vec<(&'static str, f64)> {
    let TestFamily::Standard = family;
    let mut sorted = a.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len().saturating_sub(1) / 2).copied().unwrap_or(0.0);
    let functions: [(&'static str, TestFunction); 4] = [
        ("1", Box::new(|_| 1.0)),
        ("x", Box::new(|x| x)),
        ("x^2", Box::new(|x| x * x)),
        ("1{x<=median}", Box::new(move |x| if x <= median { 1.0 } else { 0.0 })),
    ];
    functions
        .iter()
        .map(|(name, g)| {
            let terms: Vec<f64> = a.iter().zip(b).map(|(&a, &b)| (b - a) * g(a)).collect();
            (*name, z_score(&terms))
        })
        .collect()
}

fn z_score(terms: &[f64]) -> f64 {
    let n = terms.len() as f64;
    let sum: f64 = terms.iter().sum();
    let mean = sum / n;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd > 0.0 {
        sum / (sd * n.sqrt())
    } else if sum == 0.0 {
        0.0
    } else {
        sum.signum() * f64::INFINITY
    }
}

/// Martingale test on raw columns.
pub fn martingale_residual_values(a: &[f64], b: &[f64], family: TestFamily) -> Result<TestReport> {
    if a.len() < MIN_MARTINGALE_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_MARTINGALE_SAMPLES,
            got: a.len(),
        });
    }
    let scores = martingale_z_scores(a, b, family);
    let worst = scores.iter().map(|(_, z)| z.abs()).fold(0.0, f64::max);
    Ok(TestReport {
        name: "martingale".into(),
        statistic: worst,
        reference: "max |z| over test functions; each z ~ N(0,1) under E[B|A] = A".into(),
        threshold: Z_THRESHOLD,
        pass: worst < Z_THRESHOLD,
        n_samples: a.len(),
        notes: scores
            .iter()
            .map(|(name, z)| format!("z[{name}]={z:.3}"))
            .collect::<Vec<_>>()
            .join(" "),
    })
}

pub fn martingale_residual<T: Scalar>(samples: &SampleSet<T>, family: TestFamily) -> Result<TestReport> {
    martingale_residual_values(&samples.a_values(), &samples.b_values(), family)
}

/// `|mean(B) - mean(A)| < 4 sd(B - A) / sqrt(n)`.
pub fn mean_difference_test(a: &[f64], b: &[f64]) -> Result<TestReport> {
    if a.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: a.len() });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
    let z = z_score(&diffs);
    let n = diffs.len() as f64;
    Ok(TestReport {
        name: "mean-difference".into(),
        statistic: z.abs(),
        reference: "|mean(B - A)| / (sd(B - A) / sqrt(n))".into(),
        threshold: Z_THRESHOLD,
        pass: z.abs() < Z_THRESHOLD,
        n_samples: diffs.len(),
        notes: format!(
            "mean(A)={:.6} mean(B)={:.6}",
            a.iter().sum::<f64>() / n,
            b.iter().sum::<f64>() / n
        ),
    })
}

/// Reference probabilities for a chi-square test: support points with their
/// probabilities, plus an optional unplaced remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    pub other: f64,
}

impl ProbabilityTable {
    pub fn from_law<T: Scalar>(law: &DiscreteDistribution<T>) -> Self {
        Self {
            points: law.points().map(Scalar::to_f64_lossy).collect(),
            probs: law.atoms().iter().map(|(_, w)| w.to_f64_lossy()).collect(),
            other: 0.0,
        }
    }

    fn locate(&self, v: f64) -> Option<usize> {
        let i = self.points.partition_point(|&p| p < v);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < self.points.len())
            .find(|&j| (self.points[j] - v).abs() <= SUPPORT_TOLERANCE * self.points[j].abs().max(1.0))
    }
}

/// Pearson chi-square goodness of fit against a probability table.
pub fn chi_square_test(name: &str, values: &[f64], table: &ProbabilityTable) -> Result<TestReport> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0usize; table.points.len()];
    let mut other = 0usize;
    for &v in values {
        match table.locate(v) {
            Some(i) => counts[i] += 1,
            None if table.other > 0.0 => other += 1,
            None => return Err(Error::ValueOutsideSupport(v)),
        }
    }
    let n = values.len() as f64;

    // Pool adjacent cells (in support order) until each expects >= 5 draws.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut exp_acc, mut obs_acc) = (0.0, 0.0);
    for (p, c) in table.probs.iter().zip(&counts) {
        exp_acc += p * n;
        obs_acc += *c as f64;
        if exp_acc >= MIN_EXPECTED_COUNT {
            cells.push((exp_acc, obs_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
    }
    exp_acc += table.other * n;
    obs_acc += other as f64;
    if exp_acc > 0.0 || obs_acc > 0.0 {
        match cells.last_mut() {
            Some(last) if exp_acc < MIN_EXPECTED_COUNT => {
                last.0 += exp_acc;
                last.1 += obs_acc;
            }
            _ => cells.push((exp_acc, obs_acc)),
        }
    }

    let statistic: f64 = cells
        .iter()
        .map(|&(e, o)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sf(statistic)
    };
    Ok(TestReport {
        name: name.into(),
        statistic,
        reference: format!("chi-square with {df} degrees of freedom"),
        threshold: P_THRESHOLD,
        pass: p_value > P_THRESHOLD,
        n_samples: values.len(),
        notes: format!("p={p_value:.6} cells={} support={}", cells.len(), table.points.len()),
    })
}

/// Chi-square test of simulated values against an exact finitely supported law.
pub fn marginal_test_discrete<T: Scalar>(values: &[f64], exact_law: &DiscreteDistribution<T>) -> Result<TestReport> {
    chi_square_test("marginal-chi-square", values, &ProbabilityTable::from_law(exact_law))
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let j = f64::from(j);
        let term = sign * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value.
pub fn marginal_test_continuous(values_a: &[f64], values_b: &[f64]) -> Result<TestReport> {
    if values_a.is_empty() || values_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let smaller = values_a.len().min(values_b.len());
    if smaller < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_KS_SAMPLES,
            got: smaller,
        });
    }
    let d = ks_statistic(values_a, values_b);
    let (na, nb) = (values_a.len() as f64, values_b.len() as f64);
    let en = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_sf((en + 0.12 + 0.11 / en) * d);
    Ok(TestReport {
        name: "marginal-ks".into(),
        statistic: d,
        reference: "two-sample Kolmogorov-Smirnov, asymptotic p-value".into(),
        threshold: P_THRESHOLD,
        pass: p_value > P_THRESHOLD,
        n_samples: values_a.len() + values_b.len(),
        notes: format!("p={p_value:.6} n_a={} n_b={}", values_a.len(), values_b.len()),
    })
}

/// Truncated law of `N_T` for a Poisson process with the given rate read at
/// an independent random time `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonMixturePmf {
    /// `probs[k] = P(N_T = k)` for `k = 0..=K`.
    pub probs: Vec<f64>,
    /// Mass beyond `K`.
    pub other: f64,
}

impl PoissonMixturePmf {
    pub fn table(&self) -> ProbabilityTable {
        ProbabilityTable {
            points: (0..self.probs.len()).map(|k| k as f64).collect(),
            probs: self.probs.clone(),
            other: self.other,
        }
    }
}

fn poisson_ln_pmf(lambda: f64, k: usize) -> f64 {
    let k = k as f64;
    -lambda + k * lambda.ln() - ln_gamma(k + 1.0)
}

/// Smallest `K` with `P(Poisson(lambda) > K) < tail`, using the geometric
/// bound on the tail once `k` exceeds `lambda`.
fn poisson_cutoff(lambda: f64, tail: f64) -> usize {
    if lambda == 0.0 {
        return 0;
    }
    let mut k = lambda.floor() as usize + 1;
    loop {
        let ratio = lambda / (k as f64 + 1.0);
        let bound = poisson_ln_pmf(lambda, k).exp() * ratio / (1.0 - ratio);
        if bound < tail {
            return k;
        }
        k += 1;
    }
}

/// Mixture of Poisson pmfs with means `rate * t` weighted by `times`,
/// truncated so that the omitted mass is below `truncation_tail`.
pub fn poisson_marginal_pmf<T: Scalar>(
    times: &DiscreteDistribution<T>,
    rate: f64,
    truncation_tail: f64,
) -> Result<PoissonMixturePmf> {
    if !(truncation_tail > 0.0 && truncation_tail <= 1e-6) {
        return Err(Error::InvalidParameter(format!("truncation tail {truncation_tail} not in (0, 1e-6]")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidParameter(format!("poisson rate {rate}")));
    }
    if times.min_point().is_negative() {
        return Err(Error::NegativeTime(times.min_point().to_text()));
    }
    let components: Vec<(f64, f64)> = times
        .atoms()
        .iter()
        .map(|(t, w)| (rate * t.to_f64_lossy(), w.to_f64_lossy()))
        .collect();
    let cutoff = components
        .iter()
        .map(|&(lambda, _)| poisson_cutoff(lambda, truncation_tail))
        .max()
        .unwrap_or(0);
    let mut probs = vec![0.0; cutoff + 1];
    for &(lambda, w) in &components {
        if lambda == 0.0 {
            probs[0] += w;
            continue;
        }
        for (k, p) in probs.iter_mut().enumerate() {
            *p += w * poisson_ln_pmf(lambda, k).exp();
        }
    }
    let other = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(PoissonMixturePmf { probs, other })
}

/// Exact computation for jumps `X ~ (δ_{-1} + δ_1)/2`, `M ≡ 1`,
/// `N ~ (δ_0 + δ_2)/2`, where `M ≺cx N` but the compound sums are not
/// convex-ordered.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub count_m: DiscreteDistribution<Rational>,
    pub count_n: DiscreteDistribution<Rational>,
    pub jump: DiscreteDistribution<Rational>,
    pub counts_cx_ordered: bool,
    pub law_x_m: DiscreteDistribution<Rational>,
    pub law_x_n: DiscreteDistribution<Rational>,
    #[serde(serialize_with = "rational_text")]
    pub mean_abs_x_m: Rational,
    #[serde(serialize_with = "rational_text")]
    pub mean_abs_x_n: Rational,
    pub verdict: OrderVerdict<Rational>,
    pub notes: String,
}

fn rational_text<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_text())
}

pub fn counterexample_report() -> CounterexampleReport {
    let q = |p: i64, d: i64| Rational::new(p.into(), d.into());
    let half = q(1, 2);
    let count_m = DiscreteDistribution::dirac(q(1, 1));
    let count_n = DiscreteDistribution::new(vec![(q(0, 1), half.clone()), (q(2, 1), half.clone())])
        .expect("valid law");
    let jump = DiscreteDistribution::new(vec![(q(-1, 1), half.clone()), (q(1, 1), half)]).expect("valid law");
    let law_x_m = compound_exact(&count_m, &jump).expect("integer counts");
    let law_x_n = compound_exact(&count_n, &jump).expect("integer counts");
    let mean_abs_x_m = law_x_m.mean_abs();
    let mean_abs_x_n = law_x_n.mean_abs();
    let verdict = check_cx(&law_x_m, &law_x_n);
    let notes = format!(
        "E|X_M| = {} > E|X_N| = {}: the convex function |x| has the larger mean under the smaller count",
        mean_abs_x_m.to_text(),
        mean_abs_x_n.to_text()
    );
    CounterexampleReport {
        counts_cx_ordered: check_cx(&count_m, &count_n).holds,
        count_m,
        count_n,
        jump,
        law_x_m,
        law_x_n,
        mean_abs_x_m,
        mean_abs_x_n,
        verdict,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::WitnessKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    #[test]
    fn martingale_needs_enough_samples() {
        let a = vec![1.0; 10];
        assert_eq!(
            martingale_residual_values(&a, &a, TestFamily::Standard),
            Err(Error::TooFewSamples { needed: 100, got: 10 })
        );
    }

    #[test]
    fn martingale_detects_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let fair: Vec<f64> = a.iter().map(|x| x + if rng.random::<bool>() { 0.5 } else { -0.5 }).collect();
        assert!(martingale_residual_values(&a, &fair, TestFamily::Standard).unwrap().pass);
        let drift: Vec<f64> = fair.iter().map(|x| x + 0.1).collect();
        assert!(!martingale_residual_values(&a, &drift, TestFamily::Standard).unwrap().pass);
    }

    #[test]
    fn chi_square_rejects_off_support_values() {
        let law = DiscreteDistribution::new(vec![(q(0, 1), q(1, 2)), (q(2, 1), q(1, 2))]).unwrap();
        assert_eq!(
            marginal_test_discrete(&[0.0, 0.5, 2.0], &law),
            Err(Error::ValueOutsideSupport(0.5))
        );
        let values: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 + 1e-12 }).collect();
        let report = marginal_test_discrete(&values, &law).unwrap();
        assert!(report.pass);
        assert_eq!(report.statistic, 0.0);
    }

    #[test]
    fn chi_square_detects_wrong_law() {
        let law = DiscreteDistribution::new(vec![(q(0, 1), q(1, 2)), (q(2, 1), q(1, 2))]).unwrap();
        let values: Vec<f64> = (0..1000).map(|i| if i % 3 == 0 { 0.0 } else { 2.0 }).collect();
        assert!(!marginal_test_discrete(&values, &law).unwrap().pass);
    }

    #[test]
    fn ks_basics() {
        let xs: Vec<f64> = (0..2000).map(f64::from).collect();
        let r = marginal_test_continuous(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
        assert_eq!(marginal_test_continuous(&[], &xs), Err(Error::EmptySample));
        assert!(matches!(marginal_test_continuous(&xs[..10], &xs), Err(Error::TooFewSamples { .. })));
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert_eq!(ks_statistic(&[1.0, 1.0, 2.0, 2.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // scipy.special.kolmogorov
        assert!((kolmogorov_sf(1.0) - 0.269_999_671_677_354_56).abs() < 1e-12);
        assert!((kolmogorov_sf(1.36) - 0.049_485_876_755_377_876).abs() < 1e-12);
        assert!((kolmogorov_sf(1.95) - 0.000_995_910_842_883_58).abs() < 1e-12);
    }

    #[test]
    fn poisson_pmf_shapes() {
        let zero = poisson_marginal_pmf(&DiscreteDistribution::dirac(q(0, 1)), 1.0, 1e-9).unwrap();
        assert_eq!(zero.probs, vec![1.0]);

        let one = poisson_marginal_pmf(&DiscreteDistribution::dirac(q(1, 1)), 1.0, 1e-9).unwrap();
        let mut factorial = 1.0;
        for (k, p) in one.probs.iter().enumerate() {
            if k > 0 {
                factorial *= k as f64;
            }
            assert!((p - (-1.0f64).exp() / factorial).abs() < 1e-14, "k={k}");
        }
        assert!(one.other < 1e-9);

        let times = DiscreteDistribution::new(vec![(q(0, 1), q(1, 2)), (q(2, 1), q(1, 2))]).unwrap();
        let mix = poisson_marginal_pmf(&times, 1.0, 1e-9).unwrap();
        let two = poisson_marginal_pmf(&DiscreteDistribution::dirac(q(2, 1)), 1.0, 1e-9).unwrap();
        for (k, p) in mix.probs.iter().enumerate() {
            let expect = 0.5 * two.probs.get(k).copied().unwrap_or(0.0) + if k == 0 { 0.5 } else { 0.0 };
            assert!((p - expect).abs() < 1e-15);
        }
        assert!(poisson_marginal_pmf(&times, 1.0, 0.1).is_err());
        assert!(poisson_marginal_pmf(&times, 0.0, 1e-9).is_err());
    }

    #[test]
    fn counterexample_is_exact() {
        let r = counterexample_report();
        assert!(r.counts_cx_ordered);
        assert_eq!(
            r.law_x_n,
            DiscreteDistribution::new(vec![(q(-2, 1), q(1, 8)), (q(0, 1), q(6, 8)), (q(2, 1), q(1, 8))]).unwrap()
        );
        assert_eq!(
            r.law_x_m,
            DiscreteDistribution::new(vec![(q(-1, 1), q(1, 2)), (q(1, 1), q(1, 2))]).unwrap()
        );
        assert_eq!(r.mean_abs_x_m, q(1, 1));
        assert_eq!(r.mean_abs_x_n, q(1, 2));
        assert!(!r.verdict.holds);
        let w = r.verdict.witness.unwrap();
        assert_eq!(w.kind, WitnessKind::StopLoss);
        assert_eq!(w.point, Some(q(0, 1)));
    }
}
