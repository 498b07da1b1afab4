mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use steerfilter::quantum::{family_state, pauli, werner_state, BlochVector, ComplexMatrix, DensityMatrix, Side, StateParams, C64};
use steerfilter::steering::{
    assemblage, feasibility_error, radius_fixed_dirs, steering_radius, Correlations, Direction, MeasurementTriple,
    SolverConfig,
};

/// `U = a·I − i(b·X + c·Y + d·Z)` for a unit quaternion.
fn unitary(q: [f64; 4]) -> ComplexMatrix {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [a, b, c, d] = q.map(|x| x / n);
    ComplexMatrix::from_row_slice(2, 2, &[C64::new(a, -d), C64::new(-c, -b), C64::new(c, -b), C64::new(a, d)]).unwrap()
}

/// Rotation with `U (n·σ) U† = (R n)·σ`.
fn rotate(u: &ComplexMatrix, n: BlochVector) -> BlochVector {
    let op = n.to_array().iter().enumerate().fold(ComplexMatrix::zeros(2), |acc, (k, &x)| &acc + &pauli(k + 1).scale(x));
    let out = u.sandwich(&op);
    let c = |k: usize| 0.5 * (&pauli(k) * &out).trace().re;
    BlochVector::new(c(1), c(2), c(3))
}

fn local(rho: &DensityMatrix, u: &ComplexMatrix, side: Side) -> DensityMatrix {
    let id = ComplexMatrix::identity(2);
    let op = match side {
        Side::A => u.tensor(&id).unwrap(),
        Side::B => id.tensor(u).unwrap(),
    };
    DensityMatrix::new(op.sandwich(rho.matrix())).unwrap()
}

fn quaternion() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0..1.0f64).prop_filter("nonzero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn feasibility_error_is_nonincreasing(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = common::random_state(&mut ChaCha8Rng::seed_from_u64(seed), rank);
        let targets = Correlations::new(&rho, Side::A).unwrap().targets(&MeasurementTriple::mub());
        let cfg = SolverConfig::default();
        let mut prev = f64::INFINITY;
        for k in 0..=16 {
            let t = 0.1 * k as f64;
            let e = feasibility_error(&targets, t, &cfg).unwrap().error;
            prop_assert!(e <= prev + 1e-12, "t {}: {} after {}", t, e, prev);
            prev = e;
        }
    }

    #[test]
    fn radius_is_invariant_under_local_unitaries(
        seed in any::<u64>(),
        rank in 1usize..=4,
        qa in quaternion(),
        qb in quaternion(),
        measuring_a in any::<bool>(),
    ) {
        let rho = common::random_state(&mut ChaCha8Rng::seed_from_u64(seed), rank);
        let (meas, steered) = if measuring_a { (Side::A, Side::B) } else { (Side::B, Side::A) };
        let cfg = SolverConfig::default();
        let dirs = MeasurementTriple::mub();
        let base = radius_fixed_dirs(&Correlations::new(&rho, meas).unwrap().targets(&dirs), &cfg).unwrap().radius;

        let (ua, ub) = (unitary(qa), unitary(qb));
        let moved = local(&local(&rho, &ua, meas), &ub, steered);
        let rotated = MeasurementTriple::new(dirs.dirs().map(|n| rotate(&ua, n))).unwrap();
        let r = radius_fixed_dirs(&Correlations::new(&moved, meas).unwrap().targets(&rotated), &cfg).unwrap().radius;
        prop_assert!((r - base).abs() < 2e-3, "{} vs {}", r, base);
    }

    #[test]
    fn outcome_marginals_agree_across_settings(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = common::random_state(&mut ChaCha8Rng::seed_from_u64(seed), rank);
        let asm = assemblage(&rho, &MeasurementTriple::mub(), Side::A).unwrap();
        let (t0, b0) = asm.marginal(0);
        for k in 1..3 {
            let (t, b) = asm.marginal(k);
            prop_assert!((t - t0).abs() < 1e-12);
            for c in 0..3 {
                prop_assert!((b[c] - b0[c]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn outer_search_never_falls_below_mub_seed() {
    let cfg = SolverConfig { outer_seeds: 2, ..SolverConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let states = [
        family_state(StateParams::new(0.452, 0.647).unwrap()),
        werner_state(0.7).unwrap(),
        common::random_state(&mut rng, 2),
    ];
    for rho in &states {
        for dir in [Direction::AtoB, Direction::BtoA] {
            let r = steering_radius(rho, dir, &cfg).unwrap();
            assert!(r.radius >= r.mub_radius - 1e-12, "{dir:?}: {} < {}", r.radius, r.mub_radius);
        }
    }
}

#[test]
fn werner_radius_is_linear_in_eta() {
    let cfg = SolverConfig::default();
    for eta in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let t = Correlations::new(&werner_state(eta).unwrap(), Side::A).unwrap().targets(&MeasurementTriple::mub());
        let r = radius_fixed_dirs(&t, &cfg).unwrap().radius;
        assert!((r - 3f64.sqrt() * eta).abs() < 2e-3, "eta {eta}: {r}");
    }
}
