mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;
use steerfilter::filter::{apply_all, channel_image, simulate_preparation, FilterEnsemble, WaveplateAngles};
use steerfilter::quantum::{family_state, DensityMatrix, StateParams};

fn amplitude() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

proptest! {
    #[test]
    fn diagonal_ensembles_are_complete(a1 in amplitude(), a2 in amplitude(), b1 in amplitude(), b2 in amplitude()) {
        let f = FilterEnsemble::from_diagonals(a1, a2, b1, b2).unwrap();
        prop_assert!(f.completeness_residual() <= 1e-12);
    }

    #[test]
    fn waveplate_ensembles_are_complete(h in prop::array::uniform4(0.0..=90.0f64)) {
        let f = FilterEnsemble::from_waveplates(WaveplateAngles::from_degrees(h).unwrap()).unwrap();
        prop_assert!(f.completeness_residual() <= 1e-12);
    }

    #[test]
    fn waveplate_round_trip(a1 in 0.001..0.999f64, a2 in 0.001..0.999f64, b1 in 0.001..0.999f64, b2 in 0.001..0.999f64) {
        let f = FilterEnsemble::from_diagonals(a1, a2, b1, b2).unwrap();
        let back = FilterEnsemble::from_waveplates(f.to_waveplates().unwrap()).unwrap();
        for (x, y) in f.params().iter().zip(back.params()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for (side, branch) in [(steerfilter::quantum::Side::A, 2), (steerfilter::quantum::Side::B, 2)] {
            let (x, y) = (f.diagonal(side, branch), back.diagonal(side, branch));
            prop_assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_preserves_trace_and_branches_normalize(
        seed in any::<u64>(),
        rank in 1usize..=4,
        p in prop::array::uniform4(amplitude()),
    ) {
        let rho = common::random_state(&mut ChaCha8Rng::seed_from_u64(seed), rank);
        let f = FilterEnsemble::from_diagonals(p[0], p[1], p[2], p[3]).unwrap();
        prop_assert!((channel_image(&rho, &f).trace().re - 1.0).abs() < 1e-10);
        let branches = apply_all(&rho, &f).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for b in &branches {
            if b.probability > 1e-6 {
                let s = b.state.as_ref().unwrap();
                prop_assert!((s.matrix().trace().re - 1.0).abs() < 1e-10);
                prop_assert!(DensityMatrix::new(s.matrix().clone()).is_ok());
            }
        }
    }

    #[test]
    fn balanced_ensemble_leaves_states_invariant(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = common::random_state(&mut ChaCha8Rng::seed_from_u64(seed), rank);
        for b in apply_all(&rho, &FilterEnsemble::balanced()).unwrap() {
            prop_assert!((b.probability - 0.25).abs() < 1e-12);
            prop_assert!(b.state.unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }
}

#[test]
fn preparation_matches_family_on_grid() {
    for i in 0..10 {
        for j in 0..10 {
            let p = StateParams::new(FRAC_PI_2 * i as f64 / 9.0, j as f64 / 9.0).unwrap();
            let d = simulate_preparation(p).matrix().max_abs_diff(family_state(p).matrix());
            assert!(d < 1e-10, "{p:?}: {d}");
        }
    }
}

#[test]
fn out_of_range_amplitudes_are_rejected() {
    assert!(FilterEnsemble::from_diagonals(1.2, 0.5, 0.5, 0.5).is_err());
    assert!(FilterEnsemble::from_diagonals(0.5, -0.1, 0.5, 0.5).is_err());
    assert!(FilterEnsemble::from_diagonals(0.5, 0.5, f64::NAN, 0.5).is_err());
    assert!(WaveplateAngles::from_degrees([0.0, 95.0, 0.0, 0.0]).is_err());
}
