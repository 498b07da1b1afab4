//! Synthetic counting experiments and tomography.
//!
//! Two-qubit states are reconstructed by linear inversion and projection onto
//! density matrices. One side of a filter ensemble is characterized by
//! single-qubit process tomography with inputs {H, V, D, R} and Pauli
//! measurements on both output ports; summing the ports gives the channel
//! `F₁ρF₁† + F₂ρF₂†`.

mod counts;
mod process;
mod state;

pub use counts::{
    ket, process_settings, projector, simulate_counts, state_settings, CountRow, CountSource, CountsRecord, Noise, Port,
    Setting, StateDesign, LABELS, PROCESS_INPUTS,
};
pub use process::{
    branch_fractions, fit_kraus, fit_kraus_with_ports, fit_process, process_fidelity, process_tomography, ChiMatrix, KrausCoefficients, KrausFit,
    KRAUS_RESIDUAL_THRESHOLD,
};
pub use state::{project_to_density, reconstruct_state};
