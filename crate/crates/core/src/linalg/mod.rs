//! Dense complex matrices and the numerical kernels shared by the model.
//!
//! Every operator lives in the a-Fock basis as an N×N [`ComplexMatrix`].
//! Residuals are reported as Frobenius norms relative to the larger of the
//! two compared operands, restricted to a top-left block when truncation
//! artifacts in the last rows and columns must be excluded.

mod eig;
mod expm;
mod quadrature;

pub use eig::{general_eigenvalues, herm_eig, herm_exp, HermEig};
pub use expm::mat_exp;
pub use quadrature::{gauss_hermite, hermite_function, hermite_functions, QuadratureRule};

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix in the a-Fock storage basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Panics if `inner` is not square.
    pub fn from_inner(inner: DMatrix<Complex64>) -> Self {
        assert!(inner.is_square(), "ComplexMatrix must be square");
        Self(inner)
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Entrywise complex conjugate (in the storage basis).
    pub fn conj(&self) -> Self {
        Self(self.0.map(|v| v.conj()))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// `self + shift·I`
    pub fn shifted(&self, shift: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.0[(i, i)] += shift;
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn column(&self, col: usize) -> StateVector {
        StateVector(self.0.column(col).into_owned())
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.0 * &v.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Top-left `k`×`k` block.
    pub fn block(&self, k: usize) -> Self {
        let k = k.min(self.dim());
        Self(self.0.view((0, 0), (k, k)).into_owned())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn one_norm(&self) -> f64 {
        (0..self.dim())
            .map(|j| self.0.column(j).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.dim()).all(|j| ((j + 1)..self.dim()).all(|i| self.0[(i, j)] == Complex64::ZERO))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.0.clone().try_inverse().map(Self).ok_or(Error::Singular)
    }

    /// Solves `self · X = rhs` for lower-triangular `self`.
    pub fn solve_lower_triangular(&self, rhs: &Self) -> Result<Self> {
        self.0.solve_lower_triangular(&rhs.0).map(Self).ok_or(Error::Singular)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Complex amplitudes in the a-Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn basis(dim: usize, level: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[level] = Complex64::ONE;
        v
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        Self(DVector::from_vec(amps))
    }

    pub fn inner(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        self.0[i]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    /// `self† · other`
    pub fn dot(&self, other: &Self) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn axpy(&mut self, alpha: Complex64, x: &Self) {
        self.0.axpy(alpha, &x.0, Complex64::ONE);
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|v| v.conj()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// ‖a − b‖_F / max(‖a‖_F, ‖b‖_F) on the top-left `k`×`k` block.
///
/// Returns 0 when both blocks vanish.
pub fn relative_residual(a: &ComplexMatrix, b: &ComplexMatrix, k: usize) -> f64 {
    let (a, b) = (a.block(k), b.block(k));
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    if scale == 0.0 {
        return 0.0;
    }
    (&a - &b).frobenius_norm() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn adjoint_is_an_involution() {
        let m = ComplexMatrix::from_fn(5, |i, j| c(i as f64 - 0.3 * j as f64, (i * j) as f64 / 7.0));
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn block_and_residual() {
        let a = ComplexMatrix::identity(4);
        let mut b = a.clone();
        b.set(3, 3, c(5.0, 0.0));
        assert_eq!(relative_residual(&a, &b, 3), 0.0);
        assert!(relative_residual(&a, &b, 4) > 0.5);
        assert_eq!(relative_residual(&ComplexMatrix::zeros(3), &ComplexMatrix::zeros(3), 3), 0.0);
    }

    #[test]
    fn singular_inverse_is_an_error() {
        assert_eq!(ComplexMatrix::zeros(3).inverse(), Err(Error::Singular));
    }

    #[test]
    fn triangular_structure() {
        let upper = ComplexMatrix::from_fn(4, |i, j| if i <= j { c(1.0, 1.0) } else { Complex64::ZERO });
        assert!(upper.is_upper_triangular());
        assert!(!upper.transpose().is_upper_triangular());
    }
}
