//! One- and two-qubit linear algebra, state constructors and figures of merit.
//!
//! Basis convention: |0⟩ = H, |1⟩ = V; two-qubit operators are ordered A ⊗ B
//! with A carrying the slow index.

mod bloch;
mod matrix;
mod measures;
mod state;

pub use bloch::{bloch, bloch_components, bloch_to_op, BlochVector};
pub use matrix::{pauli, ComplexMatrix, C64};
pub use measures::{concurrence, fidelity, trace_distance};
pub use state::{
    family_state, reduced_schmidt, schmidt_ket, werner_state, DensityMatrix, Side, StateParams,
    HERMITICITY_TOL, MIN_EIGENVALUE, TRACE_TOL,
};

/// Kronecker product of two 2×2 operators, A-side slowest.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<ComplexMatrix> {
    a.tensor(b)
}

/// Reduced one-qubit state of `rho`.
pub fn partial_trace(rho: &DensityMatrix, keep: Side) -> crate::Result<DensityMatrix> {
    rho.partial_trace(keep)
}
