//! Numerical toolkit for manipulating two-qubit EPR steering with local
//! filters.
//!
//! * [`quantum`]: density matrices, the asymmetric (θ, η) family, Werner
//!   states, concurrence and fidelity.
//! * [`filter`]: diagonal Kraus filter ensembles, branch-by-branch filtering
//!   and the two-path state preparation model.
//! * [`steering`]: assemblages, local-hidden-state fits, the three-setting
//!   steering radius in both directions and configuration labels.
//! * [`hidden`]: seeded Monte Carlo search for hidden steerability.
//! * [`tomography`]: synthetic counting experiments, state reconstruction and
//!   filter process tomography with Kraus fitting.
//! * [`scenarios`]: the composite runs exposed by the command-line tool.

pub mod error;
pub mod filter;
pub mod hidden;
pub mod optim;
pub mod quantum;
pub mod scenarios;
pub mod steering;
pub mod tomography;

pub use error::{Error, Result};
