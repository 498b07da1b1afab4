use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use steerfilter::filter::apply_all;
use steerfilter::hidden::{hidden_search_detailed, records_to_csv, sample_ensemble, SearchConfig, AMPLITUDE_RANGE};
use steerfilter::quantum::{family_state, DensityMatrix, StateParams};
use steerfilter::steering::SolverConfig;

fn quick() -> SearchConfig {
    let fast = SolverConfig { outer_seeds: 0, outer_max_evals: 20, bisection_tol: 1e-2, ..SolverConfig::default() };
    SearchConfig { n_samples: 6, rng_seed: 9, screening: fast.clone(), verification: fast, verify_top: 2, ..SearchConfig::default() }
}

#[test]
fn seed_42_draws_are_frozen() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let expect = [
        [0.6850772303836046, 0.9507726535957591, 0.4332412388279545, 0.6310869159853669],
        [0.2957079403497708, 0.1584592815874217, 0.31496015400193056, 0.8058340395038704],
        [0.7735362929948284, 0.24619941173752594, 0.5117982016366682, 0.902785140328286],
    ];
    for e in expect {
        assert_eq!(sample_ensemble(&mut rng).params(), e);
    }
}

#[test]
fn search_is_deterministic() {
    let rho = family_state(StateParams::new(0.4, 0.5).unwrap());
    let (a, ra) = hidden_search_detailed(&rho, &quick()).unwrap();
    let (b, rb) = hidden_search_detailed(&rho, &quick()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(records_to_csv(&ra).unwrap(), records_to_csv(&rb).unwrap());
    assert_eq!(ra.len(), 6);
    assert!(a.max_radius_ab > 0.0 && a.max_radius_ba > 0.0);
}

#[test]
fn zero_samples_are_rejected() {
    let rho = family_state(StateParams::new(0.4, 0.5).unwrap());
    let cfg = SearchConfig { n_samples: 0, ..quick() };
    assert!(hidden_search_detailed(&rho, &cfg).is_err());
}

proptest! {
    #[test]
    fn sampled_branches_are_valid_states(seed in any::<u64>(), theta in 0.05..1.5f64, eta in 0.0..=1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = sample_ensemble(&mut rng);
        for x in f.params() {
            prop_assert!((AMPLITUDE_RANGE.0..=AMPLITUDE_RANGE.1).contains(&x));
        }
        let rho = family_state(StateParams::new(theta, eta).unwrap());
        for out in apply_all(&rho, &f).unwrap() {
            if out.probability >= 1e-3 {
                prop_assert!(DensityMatrix::new(out.state.unwrap().matrix().clone()).is_ok());
            }
        }
    }
}
