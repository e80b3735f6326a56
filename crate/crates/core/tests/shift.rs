mod support;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stlmine::extraction::shift_formula;
use stlmine::robustness::robustness_signal;

use support::{random_nnf_formula, random_trace};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn shift_lowers_robustness_by_c(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_nnf_formula(&mut rng, 7);
        prop_assert!(phi.is_nnf());
        let x = random_trace(&mut rng, 50);
        let c = rng.random_range(-5.0..5.0);
        let shifted = shift_formula(&phi, c).unwrap();
        let before = robustness_signal(&phi, &x).unwrap();
        let after = robustness_signal(&shifted, &x).unwrap();
        for (i, (&r, &s)) in before.iter().zip(&after).enumerate() {
            if r.is_infinite() {
                prop_assert_eq!(r, s, "{} at {}", phi, i);
            } else {
                prop_assert!((s - (r - c)).abs() <= 1e-9, "{phi} c={c} at {i}: {s} vs {}", r - c);
            }
        }
    }
}

#[test]
fn shift_rejects_non_nnf() {
    let phi = stlmine::parse_formula("x > 0 -> y > 0").unwrap();
    assert!(shift_formula(&phi, 1.0).is_err());
    assert!(shift_formula(&phi.to_nnf(), 1.0).is_ok());
    assert!(shift_formula(&phi.to_nnf(), f64::NAN).is_err());
}
