mod common;

use common::{figure1, law, q, real_shape, rng, z};
use convord::diatomic::AtomSampler;
use convord::instances::{random_cx_pair, LawShape};
use convord::{
    diatomic_decompose, diatomic_decompose_with, validate_decomposition, DecomposeOptions, Decomposition, Error,
    SelectionRule,
};
use proptest::prelude::*;

const RULES: [SelectionRule; 2] = [SelectionRule::LeftCurtain, SelectionRule::FirstAdmissible];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn decompositions_validate(seed in any::<u64>(), spreads in 1usize..=10) {
        let mut r = rng(seed);
        let (mu, nu) = random_cx_pair(&mut r, &real_shape(), spreads);
        for rule in RULES {
            let options = DecomposeOptions { check_invariant: true };
            let dec = diatomic_decompose_with(&mu, &nu, rule, options).unwrap();
            let report = validate_decomposition(&dec, &mu, &nu);
            prop_assert!(report.all_pass(), "{}", report);
            prop_assert!(dec.atoms.len() <= mu.len() + nu.len());
            prop_assert_eq!(dec.selection_rule, rule);
        }
    }

    #[test]
    fn decomposition_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (mu, nu) = random_cx_pair(&mut r, &real_shape(), 4);
        for rule in RULES {
            let first = diatomic_decompose(&mu, &nu, rule).unwrap();
            let second = diatomic_decompose(&mu, &nu, rule).unwrap();
            prop_assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&second).unwrap());
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (mu, nu) = random_cx_pair(&mut r, &real_shape(), 6);
        let dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
        let back: Decomposition = serde_json::from_str(&serde_json::to_string(&dec).unwrap()).unwrap();
        prop_assert_eq!(back, dec);
    }

    #[test]
    fn count_pairs_give_count_atoms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (mu, nu) = random_cx_pair(&mut r, &LawShape::counts(8, 10), 5);
        for rule in RULES {
            prop_assert!(diatomic_decompose(&mu, &nu, rule).unwrap().is_count_valued());
        }
    }

    /// Left curtain consumes the leftmost residual atom of mu first, so the
    /// sequence of `u` values never decreases.
    #[test]
    fn left_curtain_scans_left_to_right(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (mu, nu) = random_cx_pair(&mut r, &real_shape(), 6);
        let dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
        prop_assert!(dec.atoms.windows(2).all(|w| w[0].u <= w[1].u));
    }
}

#[test]
fn figure1_left_curtain_atoms() {
    let (mu, nu) = figure1();
    let dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
    let got: Vec<_> = dec
        .atoms
        .iter()
        .map(|a| (a.v_minus.clone(), a.u.clone(), a.v_plus.clone(), a.weight.clone()))
        .collect();
    let want = vec![
        (z(1), z(2), z(3), q(1, 4)),
        (z(3), z(3), z(3), q(1, 8)),
        (z(1), z(3), z(4), q(1, 8)),
        (z(4), z(4), z(4), q(1, 12)),
        (z(1), z(4), z(5), q(1, 6)),
        (z(5), z(5), z(5), q(1, 24)),
        (z(1), z(5), z(6), q(5, 24)),
    ];
    assert_eq!(got, want);
    assert!(validate_decomposition(&dec, &mu, &nu).all_pass());
}

#[test]
fn figure1_first_admissible_validates() {
    let (mu, nu) = figure1();
    let dec = diatomic_decompose(&mu, &nu, SelectionRule::FirstAdmissible).unwrap();
    assert!(validate_decomposition(&dec, &mu, &nu).all_pass());
    assert!(dec.is_count_valued());
}

#[test]
fn unordered_pairs_are_refused() {
    let (mu, nu) = figure1();
    for rule in RULES {
        assert!(matches!(diatomic_decompose(&nu, &mu, rule), Err(Error::NotCxOrdered)));
    }
}

#[test]
fn tampered_decompositions_fail_validation() {
    let (mu, nu) = figure1();
    let mut dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
    dec.atoms[0].v_plus = z(4);
    let report = validate_decomposition(&dec, &mu, &nu);
    assert!(!report.all_pass());
    assert!(report.check("split-marginal").is_some_and(|c| !c.pass));
    assert!(report.check("u-marginal").is_some_and(|c| c.pass));
}

#[test]
fn atoms_are_drawn_in_proportion_to_weight() {
    let mu = law(&[(1, 1, 1)]);
    let nu = law(&[(0, 1, 4), (2, 1, 4), (1, 1, 2)]);
    let dec = diatomic_decompose(&mu, &nu, SelectionRule::LeftCurtain).unwrap();
    let sampler = AtomSampler::new(&dec);
    let n = 40_000;
    let mut counts = vec![0usize; dec.atoms.len()];
    let mut r = rng(5);
    for _ in 0..n {
        counts[sampler.sample_index(&mut r)] += 1;
    }
    for (a, c) in dec.atoms.iter().zip(counts) {
        let p = convord::Scalar::to_f64_lossy(&a.weight);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() < 5.0 * sd);
    }
}
