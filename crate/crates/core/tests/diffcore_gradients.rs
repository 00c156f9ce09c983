//! Finite-difference checks of every primitive's backward pass.
//!
//! Each instance draws random shapes and values from a seed, forms the scalar
//! `L = Σ out ⊙ R` for a random projection `R`, and compares the backward pass
//! (seeded with `R`) against central differences.

mod common;

use common::primitives::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roland::diffcore::{Aggregation, BatchNorm, GruCell, Mode};

const TOL: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_matches_finite_differences(seed in any::<u64>()) {
        let err = check_linear(seed);
        prop_assert!(err < TOL, "rel err {err}");
    }

    #[test]
    fn mlp2_matches_finite_differences(seed in any::<u64>()) {
        let err = check_mlp(seed);
        prop_assume!(err.is_some());
        let err = err.unwrap();
        prop_assert!(err < TOL, "rel err {err}");
    }

    #[test]
    fn gru_matches_finite_differences(seed in any::<u64>()) {
        let err = check_gru(seed);
        prop_assert!(err < TOL, "rel err {err}");
    }

    #[test]
    fn batch_norm_matches_finite_differences(seed in any::<u64>()) {
        for mode in [Mode::Train, Mode::Eval] {
            let err = check_batch_norm(seed, mode);
            prop_assert!(err < TOL, "{mode:?} rel err {err}");
        }
    }

    #[test]
    fn aggregate_matches_finite_differences(seed in any::<u64>()) {
        for mode in [Aggregation::Sum, Aggregation::Mean, Aggregation::Max] {
            if let Some(err) = check_aggregate(seed, mode) {
                prop_assert!(err < TOL, "{mode:?} rel err {err}");
            }
        }
    }

    #[test]
    fn gru_output_is_finite(seed in any::<u64>(), scale in 0.1f64..1e6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cell = GruCell::new("g", 3, 2, &mut rng);
        for p in cell.params_mut() {
            p.value.mapv_inplace(|_| rng.random_range(-scale..scale));
        }
        let h = random(&mut rng, 4, 2, scale);
        let x = random(&mut rng, 4, 3, scale);
        let (out, _) = cell.forward(&h, &x).unwrap();
        prop_assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn batch_norm_eval_is_stateless(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bn = BatchNorm::new("bn", 3);
        let x = random(&mut rng, 5, 3, 3.0);
        let before = bn.stats.clone();
        let a = bn.forward(&x, Mode::Eval).unwrap().0;
        let b = bn.forward(&x, Mode::Eval).unwrap().0;
        prop_assert_eq!(a, b);
        prop_assert_eq!(&bn.stats, &before);
    }
}



