use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use super::matrix::{pauli, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Real three-vector. Used both for Bloch vectors (which may be unphysical
/// inside LHS models) and for measurement directions.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }

    /// Unit vector from polar angle `theta` and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        Self::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    /// (polar, azimuth) of the direction of `self`.
    pub fn to_spherical(self) -> (f64, f64) {
        let n = self.norm();
        if n == 0.0 {
            return (0.0, 0.0);
        }
        ((self.z / n).clamp(-1.0, 1.0).acos(), self.y.atan2(self.x))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

/// Trace and Bloch vector of a 2×2 Hermitian operator, `ρ = (t·I + r·σ)/2`.
pub fn bloch_components(m: &ComplexMatrix) -> Result<(f64, BlochVector)> {
    if m.dims() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: "2x2".into(), got: format!("{:?}", m.dims()) });
    }
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let t = (a + d).re;
    // Tr(ρ σx) = b + c, Tr(ρ σy) = i(b − c), Tr(ρ σz) = a − d
    let r = BlochVector::new((b + c).re, (C64::new(0.0, 1.0) * (b - c)).re, (a - d).re);
    Ok((t, r))
}

/// Bloch vector of a one-qubit operator.
pub fn bloch(m: &ComplexMatrix) -> Result<BlochVector> {
    Ok(bloch_components(m)?.1)
}

/// Inverse of [`bloch_components`]: `(t·I + r·σ)/2`. Accepts unnormalized and
/// unphysical inputs (‖r‖ > t).
pub fn bloch_to_op(t: f64, r: BlochVector) -> ComplexMatrix {
    let mut acc = pauli(0).scale(t);
    for (k, c) in r.to_array().into_iter().enumerate() {
        acc = &acc + &pauli(k + 1).scale(c);
    }
    acc.scale(0.5)
}
