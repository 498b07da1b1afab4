//! Three-setting steering radius and configuration classification.
//!
//! For measurement directions `{n₁, n₂, n₃}` the fixed-direction radius is the
//! smallest bound `t` such that an eight-component LHS model with Bloch radii
//! at most `t` reproduces the assemblage to within `err`. The steering radius
//! maximizes this over directions; a value above 1 certifies steering.
//!
//! The default threshold is `err = 1e-9` rather than `1.2e-5`: near the true
//! radius the cost behaves like `c·(R − t)²` with `c ≈ 0.2`, so `1.2e-5` would
//! place the bisection about 7e-3 below the true radius.

mod assemblage;
mod lhs;
mod predicates;
mod radius;
mod report;
mod solver;

pub use assemblage::{assemblage, Assemblage, AssemblageElement, Correlations, MeasurementTriple, Targets, ZERO_PROBABILITY};
pub use lhs::{lhs_cost, response, strategy_outcome, LhsComponent, LhsModel, N_STRATEGIES};
pub use predicates::{analytic_predicates, lower_threshold, oneway_upper_bound, AnalyticPredicates};
pub use radius::{
    maximize_over_directions, radius_fixed_dirs, random_frame, seed_triples, steering_radius, Direction,
    DirectionalRadius, RadiusResult,
};
pub use report::{classify, Configuration, SolverDiagnostics, SteeringReport};
pub use solver::{feasibility_error, Feasibility, FeasibilitySolver, SolverConfig};
