//! Property-based invariants across random activity specs and parameters.

use std::collections::BTreeMap;

use proptest::prelude::*;

use hcgibbs_core::{
    boundary, chain, closed_form_pair_k2, phase, solve_translation_invariant, solve_two_periodic,
    ActivitySpec, UnitWeight,
};

const TOL: f64 = 1e-12;

fn arb_spec() -> impl Strategy<Value = ActivitySpec> {
    let geometric = (0.1f64..0.9, 0.1f64..0.9, 0.1f64..5.0)
        .prop_map(|(a, b, c)| ActivitySpec::geometric(a, b, c).unwrap());
    let poisson = (0.5f64..8.0, 0.5f64..8.0, 0.1f64..4.0)
        .prop_map(|(p, n, c)| ActivitySpec::poisson(p, n, c).unwrap());
    let telescoping = (0.1f64..5.0).prop_map(|c| ActivitySpec::telescoping(c).unwrap());
    let explicit = proptest::collection::btree_map(
        (1i64..=15).prop_flat_map(|j| prop_oneof![Just(j), Just(-j)]),
        0.05f64..3.0,
        1..8,
    )
    .prop_map(|values| ActivitySpec::explicit(values).unwrap());
    prop_oneof![geometric, poisson, telescoping, explicit]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// A(1+A)^k is strictly increasing, so the returned root is the unique
    /// one: tight residual and no second crossing on a fine grid.
    #[test]
    fn ti_root_unique_and_tight(lambda in 1e-3f64..100.0, k in 2u32..=8) {
        let a0 = solve_translation_invariant(k, lambda, TOL).unwrap();
        let residual = (a0 * (1.0 + a0).powi(k as i32) - lambda).abs();
        prop_assert!(residual < 1e-10 * lambda.max(1.0));

        let grid = 100_000;
        let mut crossings = 0u32;
        let mut prev = -lambda; // value at A = 0 is −Λ
        for i in 1..=grid {
            let a = lambda * i as f64 / grid as f64;
            let v = a * (1.0 + a).powi(k as i32) - lambda;
            if prev.signum() != v.signum() {
                crossings += 1;
            }
            prev = v;
        }
        prop_assert_eq!(crossings, 1);
    }

    /// k = 2 pair identities: A·B = 1 and A + B = Λ − 2.
    #[test]
    fn k2_pair_identities(lambda in 4.000001f64..50.0) {
        let (a, b) = solve_two_periodic(2, lambda, TOL).unwrap().unwrap();
        prop_assert!((a * b - 1.0).abs() < 1e-10, "A·B = {}", a * b);
        prop_assert!((a + b - (lambda - 2.0)).abs() < 1e-10);
    }

    /// Generic solver agrees with the k = 2 closed form.
    #[test]
    fn generic_pair_matches_closed_form(lambda in 4.000001f64..50.0) {
        let (a, b) = solve_two_periodic(2, lambda, TOL).unwrap().unwrap();
        let (ca, cb) = closed_form_pair_k2(lambda).unwrap();
        prop_assert!((a - ca).abs() < 1e-9, "{a} vs {ca}");
        prop_assert!((b - cb).abs() < 1e-9, "{b} vs {cb}");
    }

    /// Swap symmetry: if (A,B) solves the system then so does (B,A).
    #[test]
    fn pair_swap_symmetry(lambda in 4.1f64..40.0, k in 2u32..=6) {
        let lcr = phase::critical_lambda(k).unwrap();
        prop_assume!(lambda > lcr * 1.0001);
        let (a, b) = solve_two_periodic(k, lambda, TOL).unwrap().unwrap();
        let r1 = (b * (1.0 + a).powi(k as i32) - lambda).abs();
        let r2 = (a * (1.0 + b).powi(k as i32) - lambda).abs();
        prop_assert!(r1 < 1e-9 * lambda.max(1.0));
        prop_assert!(r2 < 1e-9 * lambda.max(1.0));
    }

    /// λ evaluation is pure and nonnegative on the support.
    #[test]
    fn lambda_pure_and_nonnegative(spec in arb_spec(), j in prop_oneof![1i64..200, -200i64..-1]) {
        let v1 = spec.lambda_at(j).unwrap();
        let v2 = spec.lambda_at(j).unwrap();
        prop_assert_eq!(v1.to_bits(), v2.to_bits());
        prop_assert!(v1 >= 0.0);
    }

    /// value + tail_bound brackets the exact sum from above, value from
    /// below. Unit weights give the slowest certified tail (O(1/n) for the
    /// telescoping kind), so the requested tolerance stays modest.
    #[test]
    fn weighted_sum_brackets_truth(spec in arb_spec()) {
        let partial = spec.sum_weighted(&UnitWeight, 1e-3).unwrap();
        let closed = spec.sum(1e-12).unwrap().value;
        prop_assert!(partial.value <= closed + 1e-12,
            "partial {} above exact {}", partial.value, closed);
        prop_assert!(partial.value + partial.tail_bound >= closed - 1e-12,
            "bracket top {} below exact {}", partial.value + partial.tail_bound, closed);
        prop_assert!(partial.tail_bound <= 1e-3);
    }

    /// The TI law sums back to its defining root.
    #[test]
    fn ti_law_self_consistent(spec in arb_spec(), k in 2u32..=6) {
        let lambda = spec.sum(TOL).unwrap().value;
        prop_assume!(lambda > 1e-6);
        let law = boundary::ti_law(&spec, k, TOL).unwrap();
        let realized = law.sum(1e-12).unwrap().value;
        prop_assert!((realized - law.built_from()).abs() < 1e-9,
            "Σz = {realized} vs A0 = {}", law.built_from());
        prop_assert!(law.consistency_residual(TOL).unwrap() < 1e-9);
        // Convergent sums make the law normalisable.
        prop_assert!(law.normalisability(1e-6).unwrap().normalisable);
    }

    /// Stationary closed forms solve the balance equations.
    #[test]
    fn stationary_solves_balance(spec in arb_spec(), k in 2u32..=6) {
        let lambda = spec.sum(TOL).unwrap().value;
        prop_assume!(lambda > 1e-6);
        let law = boundary::ti_law(&spec, k, TOL).unwrap();
        let n = chain::required_truncation(&spec, &law, 1e-11).unwrap().max(64);
        let kernel = chain::build_ti_kernel(&spec, &law, n, 1e-10).unwrap();
        let dist = chain::stationary_ti(&spec, &law, 1e-13).unwrap();
        prop_assert!(chain::stationarity_residual(&dist, &kernel) < 1e-9);
        prop_assert!((chain::row_sum(kernel.row_zero()) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn explicit_spec_strategy_is_well_formed() {
    // Indices produced by the map strategy never include 0.
    let mut values = BTreeMap::new();
    values.insert(3i64, 1.0);
    values.insert(-2i64, 0.5);
    let spec = ActivitySpec::explicit(values).unwrap();
    assert!(spec.sum(TOL).unwrap().value > 0.0);
}
