use serde::{Deserialize, Serialize};

use super::assemblage::MeasurementTriple;
use super::radius::{steering_radius, Direction, DirectionalRadius};
use super::solver::SolverConfig;
use crate::error::Result;
use crate::quantum::DensityMatrix;

/// Steering configuration of a two-qubit state under three settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    #[serde(rename = "two-way")]
    TwoWay,
    #[serde(rename = "one-way-A→B")]
    OneWayAToB,
    #[serde(rename = "one-way-B→A")]
    OneWayBToA,
    #[serde(rename = "two-way-unsteerable")]
    TwoWayUnsteerable,
    /// A radius lies within the classification margin of 1.
    #[serde(rename = "boundary-ambiguous")]
    BoundaryAmbiguous,
}

impl Configuration {
    pub fn as_str(self) -> &'static str {
        match self {
            Configuration::TwoWay => "two-way",
            Configuration::OneWayAToB => "one-way-A→B",
            Configuration::OneWayBToA => "one-way-B→A",
            Configuration::TwoWayUnsteerable => "two-way-unsteerable",
            Configuration::BoundaryAmbiguous => "boundary-ambiguous",
        }
    }

    /// Labels a pair of radii; anything within `margin` of 1 is ambiguous.
    pub fn from_radii(r_ab: f64, r_ba: f64, margin: f64) -> Self {
        if (r_ab - 1.0).abs() <= margin || (r_ba - 1.0).abs() <= margin {
            return Configuration::BoundaryAmbiguous;
        }
        match (r_ab > 1.0, r_ba > 1.0) {
            (true, true) => Configuration::TwoWay,
            (true, false) => Configuration::OneWayAToB,
            (false, true) => Configuration::OneWayBToA,
            (false, false) => Configuration::TwoWayUnsteerable,
        }
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverDiagnostics {
    pub feasibility_error: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub mub_radius: f64,
}

impl From<&DirectionalRadius> for SolverDiagnostics {
    fn from(r: &DirectionalRadius) -> Self {
        Self {
            feasibility_error: r.feasibility_error,
            evaluations: r.evaluations,
            iterations: r.iterations,
            converged: r.converged,
            mub_radius: r.mub_radius,
        }
    }
}

/// Both steering radii and the resulting configuration.
#[derive(Clone, Debug, Serialize)]
pub struct SteeringReport {
    pub r_ab: f64,
    pub r_ba: f64,
    pub dirs_ab: MeasurementTriple,
    pub dirs_ba: MeasurementTriple,
    pub configuration: Configuration,
    pub margin: f64,
    pub diagnostics_ab: SolverDiagnostics,
    pub diagnostics_ba: SolverDiagnostics,
}

impl SteeringReport {
    pub fn from_radii(ab: &DirectionalRadius, ba: &DirectionalRadius, cfg: &SolverConfig) -> Self {
        let margin = 2.0 * cfg.bisection_tol;
        Self {
            r_ab: ab.radius,
            r_ba: ba.radius,
            dirs_ab: ab.dirs,
            dirs_ba: ba.dirs,
            configuration: Configuration::from_radii(ab.radius, ba.radius, margin),
            margin,
            diagnostics_ab: ab.into(),
            diagnostics_ba: ba.into(),
        }
    }
}

/// Computes both steering radii and labels the configuration.
pub fn classify(rho: &DensityMatrix, cfg: &SolverConfig) -> Result<SteeringReport> {
    let ab = steering_radius(rho, Direction::AtoB, cfg)?;
    let ba = steering_radius(rho, Direction::BtoA, cfg)?;
    Ok(SteeringReport::from_radii(&ab, &ba, cfg))
}
