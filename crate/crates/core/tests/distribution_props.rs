mod common;

use common::{q, z};
use convord::{compound_exact, Distribution, Rational, Scalar};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Small law with integer or quarter-integer points.
fn arb_law(lo: i64, hi: i64, max_atoms: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec((lo * 4..=hi * 4, 1i64..=6), 1..=max_atoms).prop_map(|raw| {
        let total: i64 = raw.iter().map(|(_, w)| w).sum();
        Distribution::new(raw.into_iter().map(|(x, w)| (q(x, 4), q(w, total)))).unwrap()
    })
}

fn arb_counts() -> impl Strategy<Value = Distribution> {
    prop::collection::vec((0i64..=5, 1i64..=6), 1..=4).prop_map(|raw| {
        let total: i64 = raw.iter().map(|(_, w)| w).sum();
        Distribution::new(raw.into_iter().map(|(x, w)| (z(x), q(w, total)))).unwrap()
    })
}

fn positive_part(x: Rational) -> Rational {
    if x.is_positive() {
        x
    } else {
        Rational::zero()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn total_mass_is_one(d in arb_law(-4, 6, 8)) {
        let total = d.atoms().iter().fold(Rational::zero(), |acc, (_, w)| acc + w);
        prop_assert_eq!(total, z(1));
    }

    #[test]
    fn convolution_adds_means_and_variances(a in arb_law(-3, 4, 5), b in arb_law(-3, 4, 5)) {
        let c = a.convolve(&b);
        prop_assert_eq!(c.mean(), a.mean() + b.mean());
        prop_assert_eq!(c.variance(), a.variance() + b.variance());
    }

    #[test]
    fn wald_identities(count in arb_counts(), jump in arb_law(0, 3, 4)) {
        let s = compound_exact(&count, &jump).unwrap();
        prop_assert_eq!(s.mean(), count.mean() * jump.mean());
        let var = count.mean() * jump.variance() + count.variance() * jump.mean() * jump.mean();
        prop_assert_eq!(s.variance(), var);
    }

    #[test]
    fn compounding_with_fixed_counts(jump in arb_law(-2, 3, 4)) {
        prop_assert_eq!(compound_exact(&Distribution::dirac(z(1)), &jump).unwrap(), jump.clone());
        prop_assert_eq!(compound_exact(&Distribution::dirac(z(0)), &jump).unwrap(), Distribution::dirac(z(0)));
        prop_assert_eq!(compound_exact(&Distribution::dirac(z(3)), &jump).unwrap(), jump.convolution_power(3));
    }

    #[test]
    fn stop_loss_shape(d in arb_law(-4, 6, 8), t in -20i64..=28, h in 1i64..=8) {
        let t = q(t, 4);
        let h = q(h, 4);
        let (lo, mid, hi) = (d.stop_loss(&(t.clone() - h.clone())), d.stop_loss(&t), d.stop_loss(&(t.clone() + h)));
        // Nonincreasing and midpoint convex.
        prop_assert!(lo >= mid && mid >= hi);
        prop_assert!(lo.clone() + hi.clone() >= mid.clone() + mid.clone());
        // Bounded below by the two obvious lines.
        prop_assert!(mid >= positive_part(d.mean() - t.clone()));
        prop_assert!(!mid.is_negative());
        // Exact beyond the support.
        let below = d.min_point().clone() - z(1);
        prop_assert_eq!(d.stop_loss(&below), d.mean() - below);
        prop_assert_eq!(d.stop_loss(&(d.max_point().clone() + z(1))), z(0));
    }

    #[test]
    fn cdf_is_a_step_function(d in arb_law(-4, 6, 8)) {
        let mut previous = z(0);
        for (x, w) in d.atoms() {
            let c = d.cdf(x);
            prop_assert_eq!(c.clone() - previous.clone(), w.clone());
            previous = c;
        }
        prop_assert_eq!(previous, z(1));
    }

    #[test]
    fn json_round_trip(d in arb_law(-4, 6, 8)) {
        let text = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn mixtures_average_means(a in arb_law(-3, 4, 4), b in arb_law(-3, 4, 4), w in 0i64..=8) {
        let theta = q(w, 8);
        let m = Distribution::mix([(theta.clone(), &a), (z(1) - theta.clone(), &b)]).unwrap();
        prop_assert_eq!(m.mean(), theta.clone() * a.mean() + (z(1) - theta) * b.mean());
    }

    #[test]
    fn float_view_matches(d in arb_law(-4, 6, 8)) {
        let f = d.to_f64();
        prop_assert!((f.mean() - d.mean().to_f64_lossy()).abs() < 1e-12);
    }
}
