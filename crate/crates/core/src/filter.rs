//! Local filter ensembles and their action on two-qubit states.
//!
//! Each side carries a pass filter `F₁ = diag(x, y)` and a reflect filter
//! `F₂ = diag(x', y')` with `x² + x'² = y² + y'² = 1`, so no photon is lost.
//! Branch `(i, j)` applies `F_{Ai} ⊗ F_{Bj}` and renormalizes.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, DensityMatrix, Side, StateParams, schmidt_ket};

/// Branches with probability at or below this are reported as undefined.
pub const DEGENERATE_BRANCH_PROB: f64 = 1e-12;

/// Four diagonal Kraus operators `{F_A1, F_A2, F_B1, F_B2}`.
///
/// Amplitudes are real. Ensembles built from pass amplitudes use the
/// nonnegative square-root complement for the reflected port; the waveplate
/// constructor may produce negative entries for angles above π/4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterEnsemble {
    a_pass: [f64; 2],
    a_reflect: [f64; 2],
    b_pass: [f64; 2],
    b_reflect: [f64; 2],
}

fn complement(x: f64) -> f64 {
    (1.0 - x * x).max(0.0).sqrt()
}

impl FilterEnsemble {
    /// Ensemble from the pass amplitudes `F_A1 = diag(a1, a2)`,
    /// `F_B1 = diag(b1, b2)`.
    pub fn from_diagonals(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        for (name, v) in [("a1", a1), ("a2", a2), ("b1", b1), ("b2", b2)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::OutOfRange { name, value: v, lo: 0.0, hi: 1.0 });
            }
        }
        Ok(Self {
            a_pass: [a1, a2],
            a_reflect: [complement(a1), complement(a2)],
            b_pass: [b1, b2],
            b_reflect: [complement(b1), complement(b2)],
        })
    }

    /// Ensemble realized by half-waveplate angles H1..H4.
    pub fn from_waveplates(w: WaveplateAngles) -> Result<Self> {
        let [h1, h2, h3, h4] = w.validated()?.radians;
        Ok(Self {
            a_pass: [(2.0 * h2).cos(), (2.0 * h1).sin()],
            a_reflect: [(2.0 * h2).sin(), (2.0 * h1).cos()],
            b_pass: [(2.0 * h3).cos(), (2.0 * h4).sin()],
            b_reflect: [(2.0 * h3).sin(), (2.0 * h4).cos()],
        })
    }

    /// Ensemble from explicit pass and reflect diagonals, checked for
    /// completeness.
    pub fn from_operators(a_pass: [f64; 2], a_reflect: [f64; 2], b_pass: [f64; 2], b_reflect: [f64; 2]) -> Result<Self> {
        let f = Self { a_pass, a_reflect, b_pass, b_reflect };
        let res = f.completeness_residual();
        if !(res <= 1e-12) {
            return Err(Error::Incomplete(res));
        }
        Ok(f)
    }

    /// `F_{A1} = F_{A2} = F_{B1} = F_{B2} = I/√2`.
    pub fn balanced() -> Self {
        let s = 0.5f64.sqrt();
        Self::from_diagonals(s, s, s, s).expect("in range")
    }

    pub fn a1(&self) -> f64 {
        self.a_pass[0]
    }
    pub fn a2(&self) -> f64 {
        self.a_pass[1]
    }
    pub fn b1(&self) -> f64 {
        self.b_pass[0]
    }
    pub fn b2(&self) -> f64 {
        self.b_pass[1]
    }

    /// Pass amplitudes `[a1, a2, b1, b2]`.
    pub fn params(&self) -> [f64; 4] {
        [self.a_pass[0], self.a_pass[1], self.b_pass[0], self.b_pass[1]]
    }

    /// Diagonal of `F_{side, branch}` (branch 1 = pass, 2 = reflect).
    pub fn diagonal(&self, side: Side, branch: usize) -> [f64; 2] {
        match (side, branch) {
            (Side::A, 1) => self.a_pass,
            (Side::A, 2) => self.a_reflect,
            (Side::B, 1) => self.b_pass,
            (Side::B, 2) => self.b_reflect,
            _ => panic!("branch index {branch} must be 1 or 2"),
        }
    }

    pub fn operator(&self, side: Side, branch: usize) -> ComplexMatrix {
        ComplexMatrix::diag(&self.diagonal(side, branch))
    }

    /// `F_{Ai} ⊗ F_{Bj}`.
    pub fn branch_operator(&self, i: usize, j: usize) -> ComplexMatrix {
        self.operator(Side::A, i).tensor(&self.operator(Side::B, j)).expect("2x2 ⊗ 2x2")
    }

    /// Largest entry of `|F₁†F₁ + F₂†F₂ − I|` over both sides.
    pub fn completeness_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (p, r) in [(self.a_pass, self.a_reflect), (self.b_pass, self.b_reflect)] {
            for k in 0..2 {
                worst = worst.max((p[k] * p[k] + r[k] * r[k] - 1.0).abs());
            }
        }
        worst
    }

    /// Waveplate angles reproducing this ensemble, if its entries are
    /// nonnegative (the angles then lie in [0, π/4]).
    pub fn to_waveplates(&self) -> Option<WaveplateAngles> {
        let all = [self.a_pass, self.a_reflect, self.b_pass, self.b_reflect];
        if all.iter().flatten().any(|&x| x < 0.0) {
            return None;
        }
        let h1 = self.a_pass[1].clamp(0.0, 1.0).asin() / 2.0;
        let h2 = self.a_pass[0].clamp(0.0, 1.0).acos() / 2.0;
        let h3 = self.b_pass[0].clamp(0.0, 1.0).acos() / 2.0;
        let h4 = self.b_pass[1].clamp(0.0, 1.0).asin() / 2.0;
        Some(WaveplateAngles { radians: [h1, h2, h3, h4] })
    }

    fn is_canonical(&self) -> bool {
        let c = |p: [f64; 2], r: [f64; 2]| p.iter().zip(&r).all(|(&x, &y)| x >= 0.0 && (complement(x) - y).abs() < 1e-12);
        c(self.a_pass, self.a_reflect) && c(self.b_pass, self.b_reflect)
    }
}

/// Half-waveplate settings H1..H4 in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveplateAngles {
    pub radians: [f64; 4],
}

impl WaveplateAngles {
    pub fn from_degrees(deg: [f64; 4]) -> Result<Self> {
        Self { radians: deg.map(f64::to_radians) }.validated()
    }

    pub fn degrees(&self) -> [f64; 4] {
        self.radians.map(f64::to_degrees)
    }

    fn validated(self) -> Result<Self> {
        const NAMES: [&str; 4] = ["alpha1", "alpha2", "alpha3", "alpha4"];
        for (k, &a) in self.radians.iter().enumerate() {
            if !(0.0..=FRAC_PI_2 + 1e-12).contains(&a) {
                return Err(Error::OutOfRange { name: NAMES[k], value: a, lo: 0.0, hi: FRAC_PI_2 });
            }
        }
        Ok(self)
    }
}

#[derive(Serialize, Deserialize)]
struct ReflectJson {
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
}

/// `{"a1","a2","b1","b2"}`, or the waveplate form `{"alpha_deg":[..4]}`.
/// Non-canonical reflect amplitudes are carried in an extra `"reflect"` object.
#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    b1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    b2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    reflect: Option<ReflectJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    alpha_deg: Option<[f64; 4]>,
}

impl Serialize for FilterEnsemble {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let reflect = (!self.is_canonical()).then(|| ReflectJson {
            a1: self.a_reflect[0],
            a2: self.a_reflect[1],
            b1: self.b_reflect[0],
            b2: self.b_reflect[1],
        });
        EnsembleJson {
            a1: Some(self.a1()),
            a2: Some(self.a2()),
            b1: Some(self.b1()),
            b2: Some(self.b2()),
            reflect,
            alpha_deg: None,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FilterEnsemble {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = EnsembleJson::deserialize(d)?;
        let f = match (j.alpha_deg, j.a1, j.a2, j.b1, j.b2) {
            (Some(deg), None, None, None, None) => {
                WaveplateAngles::from_degrees(deg).and_then(FilterEnsemble::from_waveplates)
            }
            (None, Some(a1), Some(a2), Some(b1), Some(b2)) => match j.reflect {
                None => FilterEnsemble::from_diagonals(a1, a2, b1, b2),
                Some(r) => FilterEnsemble::from_operators([a1, a2], [r.a1, r.a2], [b1, b2], [r.b1, r.b2]),
            },
            _ => return Err(D::Error::custom("expected {a1,a2,b1,b2} or {alpha_deg:[..]}")),
        };
        f.map_err(D::Error::custom)
    }
}

/// One filtered branch `(i, j)` of a state.
#[derive(Clone, Debug, Serialize)]
pub struct BranchOutcome {
    pub branch: (usize, usize),
    pub probability: f64,
    /// `None` when the branch is degenerate (probability ≤ 1e-12).
    pub state: Option<DensityMatrix>,
}

impl BranchOutcome {
    pub fn is_degenerate(&self) -> bool {
        self.state.is_none()
    }

    pub fn state(&self) -> Result<&DensityMatrix> {
        self.state.as_ref().ok_or(Error::DegenerateBranch(self.branch.0, self.branch.1))
    }
}

/// Applies `F_{Ai} ⊗ F_{Bj}` to `rho` and renormalizes.
pub fn apply_branch(rho: &DensityMatrix, f: &FilterEnsemble, i: usize, j: usize) -> Result<BranchOutcome> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: "4x4".into(), got: format!("{}", rho.dim()) });
    }
    if !(1..=2).contains(&i) || !(1..=2).contains(&j) {
        return Err(Error::Parse(format!("branch ({i},{j}) must have indices in {{1,2}}")));
    }
    // Diagonal filters act entrywise: ρ'_{rc} = d_r d_c ρ_{rc}.
    let da = f.diagonal(Side::A, i);
    let db = f.diagonal(Side::B, j);
    let d = [da[0] * db[0], da[0] * db[1], da[1] * db[0], da[1] * db[1]];
    let m = rho.matrix().inner();
    let entries: Vec<_> = (0..16).map(|k| m[(k / 4, k % 4)] * (d[k / 4] * d[k % 4])).collect();
    let out = ComplexMatrix::from_row_slice(4, 4, &entries)?;
    let probability = out.trace().re.max(0.0);
    let state = if probability > DEGENERATE_BRANCH_PROB {
        let scaled = out.scale(1.0 / probability);
        Some(DensityMatrix::new(scaled)?)
    } else {
        None
    };
    Ok(BranchOutcome { branch: (i, j), probability, state })
}

/// All four branches in the order (1,1), (1,2), (2,1), (2,2).
pub fn apply_all(rho: &DensityMatrix, f: &FilterEnsemble) -> Result<[BranchOutcome; 4]> {
    Ok([
        apply_branch(rho, f, 1, 1)?,
        apply_branch(rho, f, 1, 2)?,
        apply_branch(rho, f, 2, 1)?,
        apply_branch(rho, f, 2, 2)?,
    ])
}

/// Trace-preserving channel image `Σ_ij F_ij ρ F_ij†`.
pub fn channel_image(rho: &DensityMatrix, f: &FilterEnsemble) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(4);
    for i in 1..=2 {
        for j in 1..=2 {
            acc = &acc + &f.branch_operator(i, j).sandwich(rho.matrix());
        }
    }
    acc
}

/// Completely dephases one qubit in the H/V basis.
fn dephase(m: &ComplexMatrix, side: Side) -> ComplexMatrix {
    let inner = m.inner();
    let bit = |k: usize| match side {
        Side::A => k >> 1,
        Side::B => k & 1,
    };
    let entries: Vec<_> = (0..16)
        .map(|k| {
            let (r, c) = (k / 4, k % 4);
            if bit(r) == bit(c) {
                inner[(r, c)]
            } else {
                crate::quantum::C64::new(0.0, 0.0)
            }
        })
        .collect();
    ComplexMatrix::from_row_slice(4, 4, &entries).expect("4x4")
}

/// Second arm of the unbalanced interferometer: birefringent dephasing of both
/// photons, a 22.5° half-waveplate on photon A (H → (H+V)/√2,
/// V → (H−V)/√2), then a second dephasing stage. Yields `I/2 ⊗ ρ_B^θ`.
pub fn preparation_path2(theta: f64) -> DensityMatrix {
    let psi = ComplexMatrix::projector(&schmidt_ket(theta));
    let dephased = dephase(&dephase(&psi, Side::A), Side::B);
    let s = 0.5f64.sqrt();
    let hwp = ComplexMatrix::from_real_rows(2, 2, &[s, s, s, -s]).expect("2x2");
    let rotated = hwp.tensor(&ComplexMatrix::identity(2)).expect("2x2 ⊗ 2x2").sandwich(&dephased);
    let out = dephase(&dephase(&rotated, Side::A), Side::B);
    DensityMatrix::new_unchecked(out)
}

/// Mixture of the undisturbed arm (weight η) and the dephasing arm (weight
/// 1−η).
pub fn simulate_preparation(p: StateParams) -> DensityMatrix {
    let path1 = ComplexMatrix::projector(&schmidt_ket(p.theta));
    let path2 = preparation_path2(p.theta);
    DensityMatrix::new_unchecked(&path1.scale(p.eta) + &path2.matrix().scale(1.0 - p.eta))
}
