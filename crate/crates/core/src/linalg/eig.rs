use nalgebra::{Schur, SymmetricEigen};
use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

const HERMITICITY_TOL: f64 = 1e-12;

/// Eigen-decomposition `S = V·diag(values)·V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` pairs with `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    /// `V·diag(f(values))·V†`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.vectors.inner();
        let mut scaled = v.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            scaled.column_mut(k).scale_mut(fk);
        }
        ComplexMatrix::from_inner(scaled * v.adjoint())
    }
}

pub fn herm_eig(s: &ComplexMatrix) -> Result<HermEig> {
    let norm = s.frobenius_norm();
    let residual = (s - &s.adjoint()).frobenius_norm();
    let bound = HERMITICITY_TOL * norm;
    if residual > bound {
        return Err(Error::NotHermitian { residual, bound });
    }
    let sym = (s + &s.adjoint()).scale_real(0.5);
    let eig = SymmetricEigen::try_new(sym.into_inner(), f64::EPSILON, 0).ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = order.len();
    let vectors = ComplexMatrix::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

/// `e^{scale·S}` for Hermitian `S`, through its eigen-decomposition.
pub fn herm_exp(s: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(s)?;
    let out = eig.map(|lambda| (scale * lambda).exp());
    if !out.is_finite() {
        return Err(Error::MatrixTooLarge(s.one_norm()));
    }
    Ok(out)
}

/// Eigenvalues of a general square matrix from its complex Schur form, sorted by
/// real part then imaginary part.
pub fn general_eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m.inner().clone(), f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let mut values: Vec<Complex64> = schur.eigenvalues().ok_or(Error::NoConvergence)?.iter().copied().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_residual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_values_are_sorted() {
        let s = ComplexMatrix::from_diagonal(&[c(3.0, 0.0), c(1.0, 0.0)]);
        let eig = herm_eig(&s).unwrap();
        assert_eq!(eig.values, vec![1.0, 3.0]);
    }

    #[test]
    fn swap_matrix_values() {
        let s = ComplexMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let eig = herm_eig(&s).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 16;
        let raw = ComplexMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let s = &raw + &raw.adjoint();
        let eig = herm_eig(&s).unwrap();
        let rebuilt = eig.map(|x| x);
        assert!(relative_residual(&rebuilt, &s, n) < 1e-12);
        let v = &eig.vectors;
        assert!(relative_residual(&(&v.adjoint() * v), &ComplexMatrix::identity(n), n) < 1e-13);
        let d = ComplexMatrix::from_diagonal(&eig.values.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let lhs = &s * v;
        let rhs = v * &d;
        assert!((&lhs - &rhs).frobenius_norm() <= 1e-11 * s.frobenius_norm());
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let s = ComplexMatrix::from_fn(2, |i, j| if i < j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(herm_eig(&s), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn general_eigenvalues_of_triangular_matrix() {
        let m = ComplexMatrix::from_fn(5, |i, j| {
            if i == j {
                c(i as f64 + 0.5, 0.0)
            } else if j > i {
                c(0.3, -0.2)
            } else {
                c(0.0, 0.0)
            }
        });
        let values = general_eigenvalues(&m).unwrap();
        for (k, v) in values.iter().enumerate() {
            assert!((v - c(k as f64 + 0.5, 0.0)).norm() < 1e-12);
        }
    }
}
