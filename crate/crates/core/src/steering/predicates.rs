use serde::Serialize;

use crate::quantum::StateParams;

/// Closed-form steerability conditions for the (θ, η) family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnalyticPredicates {
    /// η > 1/√3: A steers B with three settings.
    pub ab_steerable_3set: bool,
    /// 1/√3 < η ≤ 1/√(1 + 2 sin²2θ): A → B one-way with three settings.
    pub oneway_window: bool,
    /// cos²2θ ≥ (2η − 1)/((2 − η)η³): B cannot steer A for any number of
    /// settings.
    pub ba_unsteerable_infset: bool,
}

pub fn lower_threshold() -> f64 {
    1.0 / 3f64.sqrt()
}

/// 1/√(1 + 2 sin²2θ), the upper edge of the one-way window.
pub fn oneway_upper_bound(theta: f64) -> f64 {
    1.0 / (1.0 + 2.0 * (2.0 * theta).sin().powi(2)).sqrt()
}

pub fn analytic_predicates(p: StateParams) -> AnalyticPredicates {
    let StateParams { theta, eta } = p;
    let ab = eta > lower_threshold();
    let window = ab && eta <= oneway_upper_bound(theta);
    let denom = (2.0 - eta) * eta.powi(3);
    let ba_inf = if denom > 0.0 {
        (2.0 * theta).cos().powi(2) >= (2.0 * eta - 1.0) / denom
    } else {
        true
    };
    AnalyticPredicates { ab_steerable_3set: ab, oneway_window: window, ba_unsteerable_infset: ba_inf }
}
