//! Scaling-and-squaring matrix exponential with the degree-13 Padé approximant.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Computes `e^M`.
///
/// The input is scaled by `2^-s` so that its 1-norm falls below θ₁₃, the
/// [13/13] Padé approximant is evaluated, and the result squared `s` times.
pub fn mat_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let norm = m.one_norm();
    if !norm.is_finite() {
        return Err(Error::MatrixTooLarge(norm));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(m.clone());
    }

    let squarings = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = m.scale_real(2f64.powi(-squarings));

    let ident = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| Complex64::new(PADE_13[k], 0.0);

    let lin = |c6: usize, c4: usize, c2: usize| -> ComplexMatrix {
        &(&a6.scale(b(c6)) + &a4.scale(b(c4))) + &a2.scale(b(c2))
    };

    let u_inner = &(&a6 * &lin(13, 11, 9)) + &(&lin(7, 5, 3) + &ident.scale(b(1)));
    let u = &a * &u_inner;
    let v = &(&a6 * &lin(12, 10, 8)) + &(&lin(6, 4, 2) + &ident.scale(b(0)));

    let numer = &v + &u;
    let denom = &v - &u;
    let lu = denom.into_inner().lu();
    let mut result = ComplexMatrix::from_inner(lu.solve(numer.inner()).ok_or(Error::Singular)?);

    for _ in 0..squarings {
        result = &result * &result;
    }
    if !result.is_finite() {
        return Err(Error::MatrixTooLarge(norm));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, herm_exp, relative_residual};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matrix_strategy(max_dim: usize, bound: f64) -> impl Strategy<Value = ComplexMatrix> {
        (1..=max_dim).prop_flat_map(move |n| {
            proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |entries| {
                let m = ComplexMatrix::from_fn(n, |i, j| {
                    let (re, im) = entries[i * n + j];
                    c(re, im)
                });
                let norm = m.frobenius_norm().max(1e-300);
                m.scale_real(bound / norm)
            })
        })
    }

    #[test]
    fn zero_gives_identity() {
        let e = mat_exp(&ComplexMatrix::zeros(6)).unwrap();
        assert_eq!(relative_residual(&e, &ComplexMatrix::identity(6), 6), 0.0);
    }

    #[test]
    fn diagonal_case() {
        let m = ComplexMatrix::from_diagonal(&[c(2f64.ln(), 0.0), c(0.0, 0.0)]);
        let e = mat_exp(&m).unwrap();
        assert!((e.get(0, 0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((e.get(1, 1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(e.get(0, 1).norm() < 1e-15 && e.get(1, 0).norm() < 1e-15);
    }

    #[test]
    fn hermitian_input_matches_eigendecomposition_route() {
        let n = 12;
        let raw = ComplexMatrix::from_fn(n, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0));
        let s = (&raw + &raw.adjoint()).scale_real(0.25);
        let direct = mat_exp(&s).unwrap();
        let spectral = herm_exp(&s, 1.0).unwrap();
        assert!(relative_residual(&direct, &spectral, n) < 1e-11);
        let eig = herm_eig(&direct).unwrap();
        assert!(eig.values[0] > 0.0);
    }

    #[test]
    fn commutes_with_its_generator_at_norm_fifty() {
        // d/dt e^{tM} = M e^{tM} = e^{tM} M at t = 1.
        let n = 16;
        let m = ComplexMatrix::from_fn(n, |i, j| c(((i * 5 + j * 11) % 7) as f64 - 3.0, ((3 * i + j) % 4) as f64 - 1.5));
        let m = m.scale_real(50.0 / m.one_norm());
        let e = mat_exp(&m).unwrap();
        assert!(relative_residual(&(&m * &e), &(&e * &m), n) < 1e-11);
    }

    #[test]
    fn huge_norm_is_rejected() {
        let m = ComplexMatrix::identity(3).scale_real(1e4);
        assert!(matches!(mat_exp(&m), Err(Error::MatrixTooLarge(_))));
        let m = ComplexMatrix::identity(2).scale_real(f64::INFINITY);
        assert!(matches!(mat_exp(&m), Err(Error::MatrixTooLarge(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn inverse_is_exp_of_negation(m in matrix_strategy(24, 5.0)) {
            let n = m.dim();
            let prod = &mat_exp(&m).unwrap() * &mat_exp(&(-&m)).unwrap();
            prop_assert!(relative_residual(&prod, &ComplexMatrix::identity(n), n) < 1e-10);
        }

        #[test]
        fn hermitian_exponential_is_positive_definite(m in matrix_strategy(16, 5.0)) {
            let s = (&m + &m.adjoint()).scale_real(0.5);
            let e = mat_exp(&s).unwrap();
            let n = e.dim();
            prop_assert!(relative_residual(&e, &e.adjoint(), n) < 1e-12);
            let eig = herm_eig(&(&e + &e.adjoint()).scale_real(0.5)).unwrap();
            prop_assert!(eig.values[0] > 0.0);
        }
    }

    #[test]
    fn large_dimension_inverse_identity() {
        let n = 64;
        let m = ComplexMatrix::from_fn(n, |i, j| c((((i * 13 + j * 7) % 17) as f64 - 8.0) / 8.0, (((i * 3 + j * 5) % 11) as f64 - 5.0) / 5.0));
        let m = m.scale_real(5.0 / m.frobenius_norm());
        let prod = &mat_exp(&m).unwrap() * &mat_exp(&(-&m)).unwrap();
        assert!(relative_residual(&prod, &ComplexMatrix::identity(n), n) < 1e-10);
    }
}
