use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{bloch_to_op, pauli, BlochVector, DensityMatrix, Side};

/// Probabilities below this mark an assemblage element as zero-probability.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Three projective measurement directions, each a unit vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementTriple(pub [BlochVector; 3]);

impl MeasurementTriple {
    pub fn new(dirs: [BlochVector; 3]) -> Result<Self> {
        for d in dirs {
            if !d.is_finite() || (d.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Parse(format!("measurement direction {d:?} is not a unit vector")));
            }
        }
        Ok(Self(dirs))
    }

    /// Normalizes each direction.
    pub fn normalized(dirs: [BlochVector; 3]) -> Result<Self> {
        Self::new(dirs.map(BlochVector::normalized))
    }

    /// The mutually unbiased triple {x̂, ŷ, ẑ}.
    pub fn mub() -> Self {
        Self([
            BlochVector::new(1.0, 0.0, 0.0),
            BlochVector::new(0.0, 1.0, 0.0),
            BlochVector::new(0.0, 0.0, 1.0),
        ])
    }

    pub fn dirs(&self) -> &[BlochVector; 3] {
        &self.0
    }

    /// Six spherical angles (polar, azimuth) per direction.
    pub fn to_angles(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (k, d) in self.0.iter().enumerate() {
            let (t, p) = d.to_spherical();
            out[2 * k] = t;
            out[2 * k + 1] = p;
        }
        out
    }

    pub fn from_angles(a: &[f64]) -> Self {
        Self([
            BlochVector::from_spherical(a[0], a[1]),
            BlochVector::from_spherical(a[2], a[3]),
            BlochVector::from_spherical(a[4], a[5]),
        ])
    }
}

/// Real correlation tensor `T_{μν} = Tr(ρ σ_μ ⊗ σ_ν)`, oriented so the first
/// index belongs to the measuring party.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlations(pub [[f64; 4]; 4]);

impl Correlations {
    pub fn new(rho: &DensityMatrix, measuring_side: Side) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: "4x4".into(), got: format!("{}", rho.dim()) });
        }
        let mut t = [[0.0; 4]; 4];
        for (mu, row) in t.iter_mut().enumerate() {
            for (nu, entry) in row.iter_mut().enumerate() {
                let op = pauli(mu).tensor(&pauli(nu))?;
                *entry = (&op * rho.matrix()).trace().re;
            }
        }
        if measuring_side == Side::B {
            for mu in 0..4 {
                for nu in 0..mu {
                    let tmp = t[mu][nu];
                    t[mu][nu] = t[nu][mu];
                    t[nu][mu] = tmp;
                }
            }
        }
        Ok(Self(t))
    }

    /// Unnormalized conditional operators of the steered party as
    /// (trace, Bloch) pairs, indexed `2k + a`.
    pub fn targets(&self, dirs: &MeasurementTriple) -> Targets {
        let t = &self.0;
        let mut out = Targets { trace: [0.0; 6], bloch: [[0.0; 3]; 6] };
        for (k, n) in dirs.0.iter().enumerate() {
            let n = n.to_array();
            for a in 0..2 {
                let s = if a == 0 { 1.0 } else { -1.0 };
                let idx = 2 * k + a;
                let proj: f64 = (0..3).map(|j| n[j] * t[j + 1][0]).sum();
                out.trace[idx] = 0.5 * (t[0][0] + s * proj);
                for nu in 0..3 {
                    let c: f64 = (0..3).map(|j| n[j] * t[j + 1][nu + 1]).sum();
                    out.bloch[idx][nu] = 0.5 * (t[0][nu + 1] + s * c);
                }
            }
        }
        out
    }
}

/// Assemblage in (trace, Bloch) coordinates: element `2k + a` is
/// `σ_{a|k} = (trace·I + bloch·σ)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Targets {
    pub trace: [f64; 6],
    pub bloch: [[f64; 3]; 6],
}

impl Targets {
    /// Largest normalized Bloch length among the conditional states; a lower
    /// bound on the fixed-direction radius.
    pub fn max_conditional_norm(&self) -> f64 {
        (0..6)
            .filter(|&i| self.trace[i] > ZERO_PROBABILITY)
            .map(|i| {
                let b = self.bloch[i];
                (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt() / self.trace[i]
            })
            .fold(0.0, f64::max)
    }
}

/// One conditional state `ρ_{a|k}` with its probability.
#[derive(Clone, Debug, Serialize)]
pub struct AssemblageElement {
    pub setting: usize,
    pub outcome: usize,
    pub probability: f64,
    /// `None` for zero-probability outcomes.
    pub state: Option<DensityMatrix>,
}

/// Six conditional states of the steered party, ordered `(k, a)` with the
/// outcome index fastest.
#[derive(Clone, Debug, Serialize)]
pub struct Assemblage {
    pub elements: Vec<AssemblageElement>,
    pub dirs: MeasurementTriple,
    pub measuring_side: Side,
    #[serde(skip)]
    targets: Targets,
}

impl Assemblage {
    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    /// Builds an assemblage directly from (trace, Bloch) data.
    pub fn from_targets(targets: Targets, dirs: MeasurementTriple, measuring_side: Side) -> Result<Self> {
        let mut elements = Vec::with_capacity(6);
        for k in 0..3 {
            for a in 0..2 {
                let i = 2 * k + a;
                let p = targets.trace[i];
                let state = if p > ZERO_PROBABILITY {
                    let r = BlochVector::from_array(targets.bloch[i]) * (1.0 / p);
                    Some(DensityMatrix::new(bloch_to_op(1.0, r))?)
                } else {
                    None
                };
                elements.push(AssemblageElement { setting: k, outcome: a, probability: p, state });
            }
        }
        Ok(Self { elements, dirs, measuring_side, targets })
    }

    /// Reduced state implied by setting `k`, Σ_a p_{a|k} ρ_{a|k} in
    /// (trace, Bloch) form.
    pub fn marginal(&self, k: usize) -> (f64, [f64; 3]) {
        let t = &self.targets;
        let tr = t.trace[2 * k] + t.trace[2 * k + 1];
        let b = [0, 1, 2].map(|c| t.bloch[2 * k][c] + t.bloch[2 * k + 1][c]);
        (tr, b)
    }
}

/// Conditional states of the party opposite `measuring_side` after projective
/// measurements along `dirs`.
pub fn assemblage(rho: &DensityMatrix, dirs: &MeasurementTriple, measuring_side: Side) -> Result<Assemblage> {
    let corr = Correlations::new(rho, measuring_side)?;
    Assemblage::from_targets(corr.targets(dirs), *dirs, measuring_side)
}
