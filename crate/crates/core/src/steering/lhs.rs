use serde::Serialize;

use super::assemblage::{Assemblage, Targets};
use crate::quantum::BlochVector;

/// Number of deterministic strategies for three binary-outcome settings.
pub const N_STRATEGIES: usize = 8;

/// Outcome assigned to setting `k` by deterministic strategy `i`.
#[inline]
pub fn strategy_outcome(i: usize, k: usize) -> usize {
    (i >> k) & 1
}

/// Response function `D_i(a|k)`.
#[inline]
pub fn response(i: usize, a: usize, k: usize) -> f64 {
    if strategy_outcome(i, k) == a {
        1.0
    } else {
        0.0
    }
}

/// One hidden state: weight `p_i` and operator `(t_i·I + r_i·σ)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LhsComponent {
    pub weight: f64,
    pub trace: f64,
    pub bloch: BlochVector,
}

impl LhsComponent {
    /// ‖r‖ / t, the quantity bounded by the radius.
    pub fn radius(&self) -> f64 {
        if self.trace > 0.0 {
            self.bloch.norm() / self.trace
        } else if self.bloch.norm() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Eight weighted hidden states, component `i` answering with strategy `i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LhsModel {
    pub components: [LhsComponent; N_STRATEGIES],
}

impl LhsModel {
    /// Uniform weights, all components sharing the same state.
    pub fn replicated(trace: f64, bloch: BlochVector) -> Self {
        Self { components: [LhsComponent { weight: 1.0 / N_STRATEGIES as f64, trace, bloch }; N_STRATEGIES] }
    }

    /// Largest Bloch radius among components with nonzero weight.
    pub fn max_radius(&self) -> f64 {
        self.components.iter().filter(|c| c.weight > 0.0).map(LhsComponent::radius).fold(0.0, f64::max)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Σ_i p_i ρ_i D_i(a|k) and Σ_i p_i D_i(a|k) for every `(k, a)`.
    pub fn reproduce(&self) -> (Targets, [f64; 6]) {
        let mut t = Targets { trace: [0.0; 6], bloch: [[0.0; 3]; 6] };
        let mut prob = [0.0; 6];
        for (i, c) in self.components.iter().enumerate() {
            let b = c.bloch.to_array();
            for k in 0..3 {
                let idx = 2 * k + strategy_outcome(i, k);
                prob[idx] += c.weight;
                t.trace[idx] += c.weight * c.trace;
                for j in 0..3 {
                    t.bloch[idx][j] += c.weight * b[j];
                }
            }
        }
        (t, prob)
    }
}

/// Squared-Frobenius mismatch of the reproduced assemblage plus the squared
/// probability mismatch, summed over the six `(k, a)` pairs.
pub fn lhs_cost(asm: &Assemblage, m: &LhsModel) -> f64 {
    lhs_cost_targets(asm.targets(), m)
}

pub(crate) fn lhs_cost_targets(target: &Targets, m: &LhsModel) -> f64 {
    let (rep, prob) = m.reproduce();
    let mut cost = 0.0;
    for idx in 0..6 {
        // ‖(Δt·I + Δr·σ)/2‖²_F = (Δt² + |Δr|²)/2
        let dt = rep.trace[idx] - target.trace[idx];
        let dr: f64 = (0..3).map(|j| (rep.bloch[idx][j] - target.bloch[idx][j]).powi(2)).sum();
        let dp = prob[idx] - target.trace[idx];
        cost += 0.5 * (dt * dt + dr) + dp * dp;
    }
    cost
}
