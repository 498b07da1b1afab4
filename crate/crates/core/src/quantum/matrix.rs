use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix restricted to the one- and two-qubit sizes (2 or 4
/// rows/columns). Row-major when flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

fn check_dim(n: usize) -> bool {
    n == 2 || n == 4
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if !check_dim(rows) || !check_dim(cols) {
            return Err(Error::UnsupportedDimensions { rows, cols });
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", entries.len()),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_slice(rows, cols, &c)
    }

    pub fn identity(n: usize) -> Self {
        assert!(check_dim(n));
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(check_dim(n));
        Self(DMatrix::zeros(n, n))
    }

    pub fn diag(entries: &[f64]) -> Self {
        assert!(check_dim(entries.len()));
        let v = DVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&v))
    }

    /// Outer product |ψ⟩⟨ψ| of a ket.
    pub fn projector(ket: &[C64]) -> Self {
        assert!(check_dim(ket.len()));
        let v = DVector::from_column_slice(ket);
        Self(&v * v.adjoint())
    }

    pub(crate) fn from_inner(m: DMatrix<C64>) -> Self {
        debug_assert!(check_dim(m.nrows()) && check_dim(m.ncols()));
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn row_major(&self) -> Vec<C64> {
        let (r, c) = self.dims();
        (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from Hermiticity, max |M_ij − conj(M_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// Kronecker product `self ⊗ other`; `self` carries the slow index.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.dims() != (2, 2) || other.dims() != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: "2x2 ⊗ 2x2".into(),
                got: format!("{:?} ⊗ {:?}", self.dims(), other.dims()),
            });
        }
        Ok(Self(self.0.kronecker(&other.0)))
    }

    /// `self · other · self†`.
    pub fn sandwich(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 * self.0.adjoint())
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues
    /// and the matching orthonormal eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::try_new(herm, 1e-14, 0)
            .expect("Hermitian eigen-decomposition converges unconditionally");
        let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, idx[c])]);
        (vals, vecs)
    }

    pub fn eigvalsh(&self) -> Vec<f64> {
        self.eigh().0
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.eigh();
        let d = DVector::from_iterator(vals.len(), vals.iter().map(|&x| C64::new(f(x), 0.0)));
        Self(&vecs * DMatrix::from_diagonal(&d) * vecs.adjoint())
    }

    /// Principal square root of a positive semidefinite Hermitian matrix.
    /// Eigenvalues at rounding level are treated as zero, since their square
    /// roots would otherwise contribute errors of order √ε.
    pub fn sqrt_psd(&self) -> Self {
        let (vals, vecs) = self.eigh();
        let roots = sqrt_spectrum(&vals);
        let d = DVector::from_iterator(roots.len(), roots.iter().map(|&x| C64::new(x, 0.0)));
        Self(&vecs * DMatrix::from_diagonal(&d) * vecs.adjoint())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Square roots of a PSD spectrum with rounding-level eigenvalues zeroed.
pub(crate) fn sqrt_spectrum(vals: &[f64]) -> Vec<f64> {
    let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cut = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    vals.iter().map(|&x| if x <= cut { 0.0 } else { x.sqrt() }).collect()
}

/// Pauli matrices in the order I, X, Y, Z.
pub fn pauli(index: usize) -> ComplexMatrix {
    let e = match index {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("Pauli index {index} out of range"),
    };
    ComplexMatrix(DMatrix::from_row_slice(2, 2, &e))
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dims: [usize; 2],
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (r, c) = self.dims();
        let flat = self.row_major();
        MatrixJson {
            dims: [r, c],
            re: flat.iter().map(|z| z.re).collect(),
            im: flat.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        if j.re.len() != j.im.len() {
            return Err(serde::de::Error::custom("re/im length mismatch"));
        }
        let entries: Vec<C64> = j.re.iter().zip(&j.im).map(|(&a, &b)| C64::new(a, b)).collect();
        ComplexMatrix::from_row_slice(j.dims[0], j.dims[1], &entries).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(id.tensor(&id).unwrap(), ComplexMatrix::identity(4));

        let p0 = ComplexMatrix::diag(&[1.0, 0.0]);
        let p1 = ComplexMatrix::diag(&[0.0, 1.0]);
        assert_eq!(p0.tensor(&p1).unwrap(), ComplexMatrix::diag(&[0.0, 1.0, 0.0, 0.0]));

        let z = pauli(3);
        assert_eq!(z.tensor(&z).unwrap(), ComplexMatrix::diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn tensor_rejects_wrong_dims() {
        let a = ComplexMatrix::identity(4);
        let b = ComplexMatrix::identity(2);
        assert!(matches!(a.tensor(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_unsupported_shapes() {
        assert!(ComplexMatrix::from_real_rows(3, 3, &[0.0; 9]).is_err());
        assert!(ComplexMatrix::from_real_rows(2, 2, &[0.0; 3]).is_err());
        assert_eq!(
            ComplexMatrix::from_real_rows(2, 2, &[f64::NAN, 0.0, 0.0, 0.0]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn json_encoding_is_row_major() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[ONE, I, -I, C64::new(2.0, 0.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"dims":[2,2],"re":[1.0,0.0,-0.0,2.0],"im":[0.0,1.0,-1.0,0.0]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let p = ComplexMatrix::projector(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        assert!(p.sqrt_psd().max_abs_diff(&p) < 1e-12);
    }
}
