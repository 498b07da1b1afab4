//! Scalar figures of merit for one- and two-qubit states.
//!
//! Fidelity uses the squared Uhlmann convention
//! `F(ρ, σ) = (Tr √(√ρ σ √ρ))²`, so `F(I/4, |φ+⟩⟨φ+|) = 1/4`.

use super::matrix::{pauli, sqrt_spectrum, ComplexMatrix};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: "4x4".into(), got: format!("{}", rho.dim()) });
    }
    let yy = pauli(2).tensor(&pauli(2))?;
    let conj = ComplexMatrix::from_inner(rho.matrix().inner().map(|z| z.conj()));
    let tilde = yy.sandwich(&conj);
    // √ρ ρ̃ √ρ is Hermitian and shares its spectrum with ρρ̃.
    let s = rho.matrix().sqrt_psd();
    let m = s.sandwich(&tilde);
    let mut lambdas = sqrt_spectrum(&m.eigvalsh());
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Squared Uhlmann fidelity.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", rho.dim(), rho.dim()),
            got: format!("{}x{}", sigma.dim(), sigma.dim()),
        });
    }
    let s = rho.matrix().sqrt_psd();
    let inner = s.sandwich(sigma.matrix());
    let tr: f64 = sqrt_spectrum(&inner.eigvalsh()).iter().sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Trace distance ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", rho.dim(), rho.dim()),
            got: format!("{}x{}", sigma.dim(), sigma.dim()),
        });
    }
    let diff = rho.matrix() - sigma.matrix();
    Ok(0.5 * diff.eigvalsh().into_iter().map(f64::abs).sum::<f64>())
}
