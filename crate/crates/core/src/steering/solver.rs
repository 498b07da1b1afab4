//! Local-hidden-state feasibility for a fixed radius bound.
//!
//! For a bound `t` the solver minimizes the LHS cost over models whose
//! components satisfy `‖r_i‖ ≤ t·t_i` and `Σ p_i = 1`. Writing each component
//! as an unnormalized operator with trace `u_i = p_i` and Bloch part
//! `v_i = p_i r_i`, the cost is the convex quadratic
//!
//! ```text
//! f(u, v) = Σ_{a,k} 3/2 (M u − p)²_{ak} + 1/2 ‖(M v − q)_{ak}‖²
//! ```
//!
//! with `M_{ak,i} = D_i(a|k)`, over a product of second-order cones cut by
//! one hyperplane. Accelerated projected gradient with adaptive restart finds
//! the minimum; a Frank–Wolfe duality gap gives a certified lower bound so
//! bisection can stop as soon as the sign of `E(t) − err` is known.

use serde::{Deserialize, Serialize};

use super::assemblage::Targets;
use super::lhs::{strategy_outcome, LhsComponent, LhsModel, N_STRATEGIES};
use crate::error::{Error, Result};
use crate::quantum::BlochVector;

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// λ_max(MᵀM): every strategy agrees with 4 others on each of 3 settings.
const LIPSCHITZ: f64 = 12.0;
const CHECK_EVERY: usize = 5;

/// Tunables for the steering-radius computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Feasibility threshold on the LHS cost.
    pub err: f64,
    /// Width at which the radius bisection stops.
    pub bisection_tol: f64,
    /// Random direction frames tried in addition to {x̂, ŷ, ẑ}.
    pub outer_seeds: usize,
    /// Simplex spread at which a direction search is considered converged.
    pub outer_tol: f64,
    /// Objective evaluations allowed per direction-search start.
    pub outer_max_evals: usize,
    /// Gradient iterations allowed per feasibility solve.
    pub max_iters: usize,
    /// Upper end of the radius bracket.
    pub t_max: f64,
    /// Seed for the random direction frames.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            err: 1e-9,
            bisection_tol: 1e-4,
            outer_seeds: 32,
            outer_tol: 1e-4,
            outer_max_evals: 150,
            max_iters: 20_000,
            t_max: 4.0,
            seed: 0x5EED,
        }
    }
}

impl SolverConfig {
    /// Same settings with the experimental threshold `err = 1.2e-5`. The cost
    /// grows quadratically below the true radius, so this threshold biases
    /// radii low by several 1e-3.
    pub fn experimental_threshold() -> Self {
        Self { err: 1.2e-5, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("err", self.err),
            ("bisection_tol", self.bisection_tol),
            ("outer_tol", self.outer_tol),
            ("t_max", self.t_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::OutOfRange { name, value: v, lo: 0.0, hi: f64::INFINITY });
            }
        }
        if self.max_iters == 0 {
            return Err(Error::OutOfRange { name: "max_iters", value: 0.0, lo: 1.0, hi: f64::INFINITY });
        }
        Ok(())
    }
}

/// Outcome of one feasibility solve.
#[derive(Clone, Debug, Serialize)]
pub struct Feasibility {
    pub radius_bound: f64,
    /// Cost of the best model found (an upper bound on `E(t)`).
    pub error: f64,
    /// Certified lower bound on `E(t)`.
    pub lower_bound: f64,
    pub iterations: usize,
    /// Whether the stopping rule was met before `max_iters`.
    pub converged: bool,
    pub model: LhsModel,
}

impl Feasibility {
    pub fn is_feasible(&self, err: f64) -> bool {
        self.error <= err
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Stop {
    /// Stop once `E(t) ≤ err` or `E(t) > err` is certified.
    Decide(f64),
    /// Run until the duality gap is negligible.
    Converge,
}

#[derive(Clone, Copy, Debug, Default)]
struct Point {
    // w = √3·u
    w: [f64; N_STRATEGIES],
    v: [[f64; 3]; N_STRATEGIES],
}

impl Point {
    fn uniform() -> Self {
        Self { w: [SQRT3 / N_STRATEGIES as f64; N_STRATEGIES], v: [[0.0; 3]; N_STRATEGIES] }
    }

    fn axpy(&self, s: f64, d: &Point) -> Point {
        let mut out = *self;
        for i in 0..N_STRATEGIES {
            out.w[i] += s * d.w[i];
            for c in 0..3 {
                out.v[i][c] += s * d.v[i][c];
            }
        }
        out
    }

    fn sub(&self, o: &Point) -> Point {
        self.axpy(-1.0, o)
    }

    fn dot(&self, o: &Point) -> f64 {
        let mut acc = 0.0;
        for i in 0..N_STRATEGIES {
            acc += self.w[i] * o.w[i];
            for c in 0..3 {
                acc += self.v[i][c] * o.v[i][c];
            }
        }
        acc
    }
}

/// Reusable solver holding the warm-start point of the previous solve. Not
/// meant to be shared between threads; create one per worker.
#[derive(Clone, Debug)]
pub struct FeasibilitySolver {
    target_w: [f64; 6],
    target_v: [[f64; 3]; 6],
    x: Point,
    max_iters: usize,
    /// Total gradient iterations spent by this instance.
    pub total_iterations: usize,
}

impl FeasibilitySolver {
    pub fn new(targets: &Targets, max_iters: usize) -> Self {
        Self {
            target_w: targets.trace.map(|t| SQRT3 * t),
            target_v: targets.bloch,
            x: Point::uniform(),
            max_iters,
            total_iterations: 0,
        }
    }

    /// Replaces the assemblage, keeping the current point as warm start.
    pub fn set_targets(&mut self, targets: &Targets) {
        self.target_w = targets.trace.map(|t| SQRT3 * t);
        self.target_v = targets.bloch;
    }

    /// Value and gradient of the cost at `x`.
    fn value_grad(&self, x: &Point) -> (f64, Point) {
        let mut rw = [0.0; 6];
        let mut rv = [[0.0; 3]; 6];
        for i in 0..N_STRATEGIES {
            for k in 0..3 {
                let row = 2 * k + strategy_outcome(i, k);
                rw[row] += x.w[i];
                for c in 0..3 {
                    rv[row][c] += x.v[i][c];
                }
            }
        }
        let mut f = 0.0;
        for row in 0..6 {
            rw[row] -= self.target_w[row];
            f += rw[row] * rw[row];
            for c in 0..3 {
                rv[row][c] -= self.target_v[row][c];
                f += rv[row][c] * rv[row][c];
            }
        }
        let mut g = Point::default();
        for i in 0..N_STRATEGIES {
            for k in 0..3 {
                let row = 2 * k + strategy_outcome(i, k);
                g.w[i] += rw[row];
                for c in 0..3 {
                    g.v[i][c] += rv[row][c];
                }
            }
        }
        (0.5 * f, g)
    }

    /// Frank–Wolfe gap `⟨g, x⟩ − min_{s∈C} ⟨g, s⟩` over the feasible set.
    fn gap(x: &Point, g: &Point, scale: f64) -> f64 {
        let lmo = (0..N_STRATEGIES)
            .map(|i| {
                let n = (g.v[i][0].powi(2) + g.v[i][1].powi(2) + g.v[i][2].powi(2)).sqrt();
                g.w[i] - scale * n
            })
            .fold(f64::INFINITY, f64::min);
        (g.dot(x) - SQRT3 * lmo).max(0.0)
    }

    /// Solves for the bound `t`, warm-starting from the previous solution.
    pub fn solve(&mut self, t: f64) -> Feasibility {
        self.run(t, Stop::Converge)
    }

    /// Decides `E(t) ≤ err`, stopping as early as the sign is certified.
    pub fn decide(&mut self, t: f64, err: f64) -> Feasibility {
        self.run(t, Stop::Decide(err))
    }

    fn run(&mut self, t: f64, stop: Stop) -> Feasibility {
        // Cone in scaled coordinates: ‖v_i‖ ≤ (t/√3)·w_i.
        let scale = t.max(0.0) / SQRT3;
        let mut x = project(&self.x, scale);
        let mut y = x;
        let mut momentum: f64 = 1.0;
        let mut iters = 0;
        let mut converged = false;
        let (mut fx, mut gx) = self.value_grad(&x);
        let mut lower = fx - Self::gap(&x, &gx, scale);

        loop {
            if iters % CHECK_EVERY == 0 {
                let (f, g) = self.value_grad(&x);
                fx = f;
                gx = g;
                let gap = Self::gap(&x, &gx, scale);
                lower = lower.max(fx - gap);
                let done = match stop {
                    Stop::Decide(err) => fx <= err || lower > err,
                    Stop::Converge => gap <= 1e-15 + 1e-9 * fx,
                };
                if done {
                    converged = true;
                    break;
                }
                if iters >= self.max_iters {
                    break;
                }
            }
            let (_, gy) = self.value_grad(&y);
            let x_new = project(&y.axpy(-1.0 / LIPSCHITZ, &gy), scale);
            let step = x_new.sub(&x);
            // Gradient-based adaptive restart.
            if y.sub(&x_new).dot(&step) > 0.0 {
                momentum = 1.0;
                y = x_new;
            } else {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                y = x_new.axpy((momentum - 1.0) / next, &step);
                momentum = next;
            }
            x = x_new;
            iters += 1;
        }

        self.x = x;
        self.total_iterations += iters;
        Feasibility {
            radius_bound: t,
            error: fx,
            lower_bound: lower.max(0.0),
            iterations: iters,
            converged,
            model: to_model(&x),
        }
    }
}

fn to_model(x: &Point) -> LhsModel {
    let mut components = [LhsComponent { weight: 0.0, trace: 1.0, bloch: BlochVector::zero() }; N_STRATEGIES];
    for (i, c) in components.iter_mut().enumerate() {
        let u = x.w[i] / SQRT3;
        c.weight = u;
        if u > 0.0 {
            c.bloch = BlochVector::from_array(x.v[i]) * (1.0 / u);
        }
    }
    LhsModel { components }
}

/// Projection of `(a, y)` onto `{(w, v): ‖v‖ ≤ s·w}`; returns `w` and the
/// factor applied to `y`.
#[inline]
fn project_cone(a: f64, n: f64, s: f64) -> (f64, f64) {
    if n <= s * a {
        (a, 1.0)
    } else if a + s * n <= 0.0 {
        (0.0, 0.0)
    } else {
        let w = (a + s * n) / (1.0 + s * s);
        (w, s * w / n)
    }
}

/// Euclidean projection onto `{Σ w_i = √3, ‖v_i‖ ≤ s·w_i}`.
fn project(z: &Point, s: f64) -> Point {
    let norms: [f64; N_STRATEGIES] =
        std::array::from_fn(|i| (z.v[i][0].powi(2) + z.v[i][1].powi(2) + z.v[i][2].powi(2)).sqrt());
    // Each w_i(μ) = cone projection of (z_i − μ, v_i) is piecewise linear and
    // nonincreasing in μ; the kinks are where the regime changes.
    let excess = |mu: f64| -> f64 {
        (0..N_STRATEGIES).map(|i| project_cone(z.w[i] - mu, norms[i], s).0).sum::<f64>() - SQRT3
    };
    let mut kinks: Vec<f64> = Vec::with_capacity(2 * N_STRATEGIES);
    for i in 0..N_STRATEGIES {
        kinks.push(z.w[i] + s * norms[i]);
        if s > 0.0 {
            kinks.push(z.w[i] - norms[i] / s);
        }
    }
    kinks.sort_by(f64::total_cmp);

    let g0 = excess(kinks[0]);
    let mu = if g0 <= 0.0 {
        // Below every kink all components are interior: slope −N.
        kinks[0] + g0 / N_STRATEGIES as f64
    } else {
        let mut lo = (kinks[0], g0);
        let mut root = kinks[kinks.len() - 1];
        for &k in &kinks[1..] {
            let gk = excess(k);
            if gk <= 0.0 {
                root = if lo.1 - gk > 0.0 { lo.0 + (k - lo.0) * lo.1 / (lo.1 - gk) } else { k };
                break;
            }
            lo = (k, gk);
        }
        root
    };

    let mut out = Point::default();
    for i in 0..N_STRATEGIES {
        let (w, f) = project_cone(z.w[i] - mu, norms[i], s);
        out.w[i] = w;
        for c in 0..3 {
            out.v[i][c] = f * z.v[i][c];
        }
    }
    out
}

/// `E(t)`: minimal LHS cost over models whose Bloch radii are bounded by
/// `radius_bound`.
pub fn feasibility_error(targets: &Targets, radius_bound: f64, cfg: &SolverConfig) -> Result<Feasibility> {
    cfg.validate()?;
    if !(radius_bound >= 0.0) {
        return Err(Error::OutOfRange { name: "radius_bound", value: radius_bound, lo: 0.0, hi: f64::INFINITY });
    }
    let mut solver = FeasibilitySolver::new(targets, cfg.max_iters);
    Ok(solver.solve(radius_bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{werner_state, Side};
    use crate::steering::assemblage::{assemblage, MeasurementTriple};
    use crate::steering::lhs::lhs_cost;

    fn project_brute(z: &Point, s: f64) -> f64 {
        // Checks the KKT conditions of the projection instead of recomputing it.
        let p = project(z, s);
        let sum: f64 = p.w.iter().sum();
        assert!((sum - SQRT3).abs() < 1e-10, "sum {sum}");
        for i in 0..N_STRATEGIES {
            let n = (p.v[i][0].powi(2) + p.v[i][1].powi(2) + p.v[i][2].powi(2)).sqrt();
            assert!(n <= s * p.w[i] + 1e-10);
        }
        // Any other feasible point is no closer.
        let d0 = z.sub(&p).dot(&z.sub(&p));
        let mut best_alt = f64::INFINITY;
        for j in 0..N_STRATEGIES {
            let mut q = Point::default();
            q.w[j] = SQRT3;
            let cand = p.axpy(0.1, &q.sub(&p));
            best_alt = best_alt.min(z.sub(&cand).dot(&z.sub(&cand)));
        }
        assert!(d0 <= best_alt + 1e-12);
        d0
    }

    #[test]
    fn projection_satisfies_constraints() {
        let mut z = Point::default();
        for i in 0..N_STRATEGIES {
            z.w[i] = (i as f64 * 0.37).sin();
            z.v[i] = [(i as f64).cos(), 0.3 * i as f64 - 1.0, 0.5];
        }
        for s in [0.0, 0.2, 0.6, 1.0, 2.3] {
            project_brute(&z, s);
        }
    }

    #[test]
    fn projection_of_feasible_point_is_identity() {
        let p = Point::uniform();
        let q = project(&p, 1.0);
        assert!(p.sub(&q).dot(&p.sub(&q)) < 1e-28);
    }

    #[test]
    fn werner_feasibility_around_corner_radius() {
        let eta = 0.8;
        let asm = assemblage(&werner_state(eta).unwrap(), &MeasurementTriple::mub(), Side::A).unwrap();
        let cfg = SolverConfig::default();
        let at = feasibility_error(asm.targets(), 3f64.sqrt() * eta, &cfg).unwrap();
        assert!(at.error <= cfg.err, "{at:?}");
        assert!((lhs_cost(&asm, &at.model) - at.error).abs() < 1e-12);
        let below = feasibility_error(asm.targets(), 0.9 * 3f64.sqrt() * eta, &cfg).unwrap();
        assert!(below.lower_bound > cfg.err);
        assert!(below.error >= below.lower_bound);
    }

    #[test]
    fn reported_model_respects_bound() {
        let asm = assemblage(&werner_state(0.5).unwrap(), &MeasurementTriple::mub(), Side::A).unwrap();
        let out = feasibility_error(asm.targets(), 0.7, &SolverConfig::default()).unwrap();
        assert!(out.model.max_radius() <= 0.7 + 1e-9);
        assert!((out.model.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { err: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { bisection_tol: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
