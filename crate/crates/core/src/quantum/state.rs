use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE: f64 = -1e-8;

/// Which party of the two-qubit system an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// (within the module tolerances).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidState(format!("non-square {:?}", m.dims())));
        }
        let herm = m.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = m.eigvalsh()[0];
        if min_eig < MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known by construction to be a state. Debug builds still
    /// validate.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        debug_assert!(Self::new(m.clone()).is_ok(), "invalid state: {m:?}");
        Self(m)
    }

    /// Normalizes a positive operator by its trace.
    pub fn from_unnormalized(m: ComplexMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        Self::new(m.scale(1.0 / tr))
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvalidState("zero ket".into()));
        }
        let scaled: Vec<C64> = ket.iter().map(|z| z / norm.sqrt()).collect();
        Self::new(ComplexMatrix::projector(&scaled))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0.get(r, c)
    }

    /// `self ⊗ other` for two one-qubit states.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(Self(self.0.tensor(&other.0)?))
    }

    /// Reduced state of the kept qubit.
    pub fn partial_trace(&self, keep: Side) -> Result<DensityMatrix> {
        if self.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: "4x4".into(),
                got: format!("{:?}", self.0.dims()),
            });
        }
        let m = self.0.inner();
        let mut out = [C64::new(0.0, 0.0); 4];
        for r in 0..2 {
            for c in 0..2 {
                out[2 * r + c] = match keep {
                    Side::B => m[(r, c)] + m[(2 + r, 2 + c)],
                    Side::A => m[(2 * r, 2 * c)] + m[(2 * r + 1, 2 * c + 1)],
                };
            }
        }
        Ok(Self(ComplexMatrix::from_row_slice(2, 2, &out)?))
    }

    /// Exchanges the two qubits (A ↔ B).
    pub fn swap_parties(&self) -> DensityMatrix {
        assert_eq!(self.dim(), 4);
        let perm = [0usize, 2, 1, 3];
        let m = self.0.inner();
        let entries: Vec<C64> = (0..16).map(|k| m[(perm[k / 4], perm[k % 4])]).collect();
        Self(ComplexMatrix::from_row_slice(4, 4, &entries).expect("4x4"))
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Parameters (θ, η) of the asymmetric two-qubit family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    pub theta: f64,
    pub eta: f64,
}

impl StateParams {
    pub fn new(theta: f64, eta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::OutOfRange { name: "theta", value: theta, lo: 0.0, hi: FRAC_PI_2 });
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi: 1.0 });
        }
        Ok(Self { theta, eta })
    }
}

/// cos θ|00⟩ + sin θ|11⟩.
pub fn schmidt_ket(theta: f64) -> [C64; 4] {
    let z = C64::new(0.0, 0.0);
    [C64::new(theta.cos(), 0.0), z, z, C64::new(theta.sin(), 0.0)]
}

/// ρ_B^θ = diag(cos²θ, sin²θ).
pub fn reduced_schmidt(theta: f64) -> DensityMatrix {
    let c2 = theta.cos().powi(2);
    DensityMatrix(ComplexMatrix::diag(&[c2, 1.0 - c2]))
}

/// η|Φ(θ)⟩⟨Φ(θ)| + (1−η) I/2 ⊗ ρ_B^θ.
pub fn family_state(p: StateParams) -> DensityMatrix {
    let pure = ComplexMatrix::projector(&schmidt_ket(p.theta));
    let noise = ComplexMatrix::identity(2)
        .scale(0.5)
        .tensor(reduced_schmidt(p.theta).matrix())
        .expect("2x2 ⊗ 2x2");
    DensityMatrix::new_unchecked(&pure.scale(p.eta) + &noise.scale(1.0 - p.eta))
}

/// η|φ+⟩⟨φ+| + (1−η) I/4.
pub fn werner_state(eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi: 1.0 });
    }
    let bell = ComplexMatrix::projector(&schmidt_ket(std::f64::consts::FRAC_PI_4));
    Ok(DensityMatrix::new_unchecked(
        &bell.scale(eta) + &ComplexMatrix::identity(4).scale((1.0 - eta) / 4.0),
    ))
}
