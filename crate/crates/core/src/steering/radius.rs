use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::assemblage::{Correlations, MeasurementTriple, Targets};
use super::solver::{FeasibilitySolver, SolverConfig};
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::quantum::{BlochVector, DensityMatrix, Side};

/// Steering direction: `AtoB` means Alice measures and Bob's states are
/// tested for an LHS model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "A->B")]
    AtoB,
    #[serde(rename = "B->A")]
    BtoA,
}

impl Direction {
    pub fn measuring_side(self) -> Side {
        match self {
            Direction::AtoB => Side::A,
            Direction::BtoA => Side::B,
        }
    }
}

/// Fixed-direction radius with solver diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusResult {
    pub radius: f64,
    /// Feasibility error at the returned radius.
    pub feasibility_error: f64,
    pub bisection_steps: usize,
    pub iterations: usize,
    /// False if any feasibility solve hit `max_iters` undecided.
    pub converged: bool,
}

struct Bisection<'a> {
    solver: &'a mut FeasibilitySolver,
    err: f64,
    steps: usize,
    converged: bool,
    hi_error: f64,
}

impl Bisection<'_> {
    fn feasible(&mut self, t: f64) -> (bool, f64) {
        let out = self.solver.decide(t, self.err);
        self.steps += 1;
        self.converged &= out.converged;
        (out.is_feasible(self.err), out.error)
    }
}

/// Smallest `t` with `E(t) ≤ err`, located to `bisection_tol`. `hint` seeds the
/// bracket when a nearby radius is already known.
pub(crate) fn bisect_radius(
    solver: &mut FeasibilitySolver,
    targets: &Targets,
    cfg: &SolverConfig,
    hint: Option<f64>,
) -> Result<RadiusResult> {
    let start_iters = solver.total_iterations;
    let mut b = Bisection { solver, err: cfg.err, steps: 0, converged: true, hi_error: f64::NAN };
    let mut lo = 0.0;
    let mut hi;

    match hint.filter(|h| h.is_finite() && *h > 0.0 && *h < cfg.t_max) {
        Some(h) => {
            let mut delta = 0.01;
            let mut probe = (h + delta).min(cfg.t_max);
            loop {
                let (ok, e) = b.feasible(probe);
                if ok {
                    hi = probe;
                    b.hi_error = e;
                    break;
                }
                if probe >= cfg.t_max {
                    return Err(Error::BracketFailure { bound: cfg.t_max, error: e });
                }
                lo = probe;
                delta *= 4.0;
                probe = (h + delta).min(cfg.t_max);
            }
            let mut delta = 0.01;
            loop {
                let probe = h - delta;
                if probe <= lo {
                    break;
                }
                let (ok, e) = b.feasible(probe);
                if !ok {
                    lo = probe;
                    break;
                }
                hi = probe;
                b.hi_error = e;
                delta *= 4.0;
            }
        }
        None => {
            let (ok, e) = b.feasible(cfg.t_max);
            if !ok {
                return Err(Error::BracketFailure { bound: cfg.t_max, error: e });
            }
            hi = cfg.t_max;
            b.hi_error = e;
            // Each conditional state is a sum of LHS terms, so its own Bloch
            // length bounds the radius from below.
            let lower = targets.max_conditional_norm() - cfg.bisection_tol;
            if lower > lo && lower < hi {
                let (ok, e) = b.feasible(lower);
                if ok {
                    hi = lower;
                    b.hi_error = e;
                } else {
                    lo = lower;
                }
            }
        }
    }

    while hi - lo > cfg.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let (ok, e) = b.feasible(mid);
        if ok {
            hi = mid;
            b.hi_error = e;
        } else {
            lo = mid;
        }
    }
    Ok(RadiusResult {
        radius: hi,
        feasibility_error: b.hi_error,
        bisection_steps: b.steps,
        iterations: b.solver.total_iterations - start_iters,
        converged: b.converged,
    })
}

/// Minimal LHS radius for the measurement directions encoded in `targets`.
pub fn radius_fixed_dirs(targets: &Targets, cfg: &SolverConfig) -> Result<RadiusResult> {
    cfg.validate()?;
    let mut solver = FeasibilitySolver::new(targets, cfg.max_iters);
    bisect_radius(&mut solver, targets, cfg, None)
}

/// Radius maximized over measurement triples.
#[derive(Clone, Debug, Serialize)]
pub struct DirectionalRadius {
    pub direction: Direction,
    pub radius: f64,
    pub dirs: MeasurementTriple,
    /// Radius at the {x̂, ŷ, ẑ} seed.
    pub mub_radius: f64,
    pub feasibility_error: f64,
    /// Fixed-direction radius evaluations performed.
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Uniformly random rotation applied to {x̂, ŷ, ẑ}.
pub fn random_frame<R: Rng>(rng: &mut R) -> MeasurementTriple {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    let rows = [
        BlochVector::new(1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)),
        BlochVector::new(2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)),
        BlochVector::new(2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)),
    ];
    MeasurementTriple(rows.map(BlochVector::normalized))
}

/// Maximizes the fixed-direction radius over measurement triples from a list
/// of starting triples. The first start is also reported as `mub_radius`.
pub fn maximize_over_directions(
    corr: &Correlations,
    direction: Direction,
    starts: &[MeasurementTriple],
    cfg: &SolverConfig,
) -> Result<DirectionalRadius> {
    cfg.validate()?;
    assert!(!starts.is_empty());
    let nm = NelderMead { f_tol: cfg.outer_tol, x_tol: 1e-6, max_evals: cfg.outer_max_evals };
    let mut best: Option<(f64, MeasurementTriple, f64)> = None;
    let mut mub_radius = f64::NAN;
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut converged = true;
    let mut failure: Option<Error> = None;

    for (s, start) in starts.iter().enumerate() {
        let mut solver = FeasibilitySolver::new(&corr.targets(start), cfg.max_iters);
        let mut hint: Option<f64> = None;
        let mut run_best: Option<(f64, [f64; 6], f64)> = None;
        let mut objective = |angles: &[f64]| -> f64 {
            let dirs = MeasurementTriple::from_angles(angles);
            let targets = corr.targets(&dirs);
            solver.set_targets(&targets);
            evaluations += 1;
            match bisect_radius(&mut solver, &targets, cfg, hint) {
                Ok(r) => {
                    iterations += r.iterations;
                    converged &= r.converged;
                    hint = Some(r.radius);
                    if run_best.as_ref().is_none_or(|b| r.radius > b.0) {
                        let mut a = [0.0; 6];
                        a.copy_from_slice(angles);
                        run_best = Some((r.radius, a, r.feasibility_error));
                    }
                    -r.radius
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let x0 = start.to_angles();
        if s == 0 {
            let v = -objective(&x0);
            mub_radius = v;
        }
        nm.minimize(&mut objective, &x0, &[0.3; 6]);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        if let Some((r, a, e)) = run_best {
            if best.as_ref().is_none_or(|b| r > b.0) {
                best = Some((r, MeasurementTriple::from_angles(&a), e));
            }
        }
    }

    let (radius, dirs, feasibility_error) = best.expect("at least one evaluation");
    Ok(DirectionalRadius { direction, radius, dirs, mub_radius, feasibility_error, evaluations, iterations, converged })
}

/// Seeding triples: {x̂, ŷ, ẑ} followed by `cfg.outer_seeds` random frames.
pub fn seed_triples(cfg: &SolverConfig) -> Vec<MeasurementTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    std::iter::once(MeasurementTriple::mub()).chain((0..cfg.outer_seeds).map(|_| random_frame(&mut rng))).collect()
}

/// Steering radius of `rho` in `direction`: the fixed-direction radius
/// maximized over measurement triples.
pub fn steering_radius(rho: &DensityMatrix, direction: Direction, cfg: &SolverConfig) -> Result<DirectionalRadius> {
    let corr = Correlations::new(rho, direction.measuring_side())?;
    maximize_over_directions(&corr, direction, &seed_triples(cfg), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{werner_state, bloch_to_op, reduced_schmidt};
    use crate::steering::assemblage::assemblage;

    #[test]
    fn werner_radius_matches_corner_model() {
        let cfg = SolverConfig::default();
        for eta in [0.4, 0.8] {
            let asm = assemblage(&werner_state(eta).unwrap(), &MeasurementTriple::mub(), Side::A).unwrap();
            let r = radius_fixed_dirs(asm.targets(), &cfg).unwrap();
            assert!((r.radius - 3f64.sqrt() * eta).abs() < 2e-3, "{eta}: {r:?}");
            assert!(r.converged);
        }
    }

    #[test]
    fn hint_does_not_change_result() {
        let cfg = SolverConfig::default();
        let asm = assemblage(&werner_state(0.6).unwrap(), &MeasurementTriple::mub(), Side::A).unwrap();
        let plain = radius_fixed_dirs(asm.targets(), &cfg).unwrap().radius;
        for hint in [0.2, 1.0, 1.04, 2.5] {
            let mut solver = FeasibilitySolver::new(asm.targets(), cfg.max_iters);
            let r = bisect_radius(&mut solver, asm.targets(), &cfg, Some(hint)).unwrap().radius;
            assert!((r - plain).abs() <= cfg.bisection_tol, "hint {hint}: {r} vs {plain}");
        }
    }

    #[test]
    fn product_state_radius_is_marginal_length() {
        let rb = DensityMatrix::new(bloch_to_op(1.0, BlochVector::new(0.2, -0.4, 0.3))).unwrap();
        let rho = reduced_schmidt(0.6).tensor(&rb).unwrap();
        let asm = assemblage(&rho, &MeasurementTriple::mub(), Side::A).unwrap();
        let r = radius_fixed_dirs(asm.targets(), &SolverConfig::default()).unwrap();
        assert!((r.radius - 0.29f64.sqrt()).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn bracket_failure_is_reported() {
        let asm = assemblage(&werner_state(0.9).unwrap(), &MeasurementTriple::mub(), Side::A).unwrap();
        let cfg = SolverConfig { t_max: 1.0, ..Default::default() };
        assert!(matches!(radius_fixed_dirs(asm.targets(), &cfg), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn random_frames_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_frame(&mut rng);
            let d = f.dirs();
            for i in 0..3 {
                assert!((d[i].norm() - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!(d[i].dot(d[j]).abs() < 1e-12);
                }
            }
        }
    }
}
