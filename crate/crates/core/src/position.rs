//! Position-space views: the orthonormal Hermite functions, probability
//! densities in the pseudo-position (X) and ordinary position (x) pictures,
//! the complex-position decomposition, and η-mode uncertainties.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gauss_hermite, ComplexMatrix, StateVector};
use crate::metric::{expectation, inner, InnerProduct, MetricBundle};
use crate::model::{BiorthogonalSystem, ModelParams, OperatorSet};

pub use crate::linalg::{hermite_function, hermite_functions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Representation {
    #[serde(rename = "X_SPACE")]
    PseudoPosition,
    #[serde(rename = "x_SPACE")]
    Position,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub representation: Representation,
    /// ∫ density, by Gauss–Hermite quadrature of order ≥ N.
    pub total: f64,
}

impl DensityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coordinate,density\n");
        for (x, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        out
    }
}

pub const DEFAULT_GRID_MIN: f64 = -6.0;
pub const DEFAULT_GRID_MAX: f64 = 6.0;
pub const DEFAULT_GRID_POINTS: usize = 481;

pub fn uniform_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (points - 1) as f64;
            (0..points).map(|i| if i + 1 == points { max } else { min + step * i as f64 }).collect()
        }
    }
}

pub fn default_grid() -> Vec<f64> {
    uniform_grid(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_POINTS)
}

/// `|Σ_n c_n ψ_n(x)|²`
fn expansion_density(coeffs: &[Complex64], x: f64) -> f64 {
    let psi = hermite_functions(coeffs.len(), x);
    coeffs.iter().zip(&psi).map(|(c, &h)| c * h).sum::<Complex64>().norm_sqr()
}

/// X-space uses the b-expansion coefficients `c_n = dual_n†·ψ` and the
/// η-norm; x-space uses the a-amplitudes and the L² norm.
pub fn density(
    psi: &StateVector,
    representation: Representation,
    grid: &[f64],
    system: &BiorthogonalSystem,
    bundle: &MetricBundle,
) -> Result<DensityProfile> {
    if psi.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    let (coeffs, norm) = match representation {
        Representation::PseudoPosition => {
            let coeffs = system.duals.adjoint().apply(psi);
            (coeffs, inner(psi, psi, InnerProduct::Eta, bundle)?.re)
        }
        Representation::Position => (psi.clone(), psi.norm().powi(2)),
    };
    if !(norm > 0.0) {
        return Err(Error::ZeroState);
    }
    let coeffs = coeffs.amplitudes();
    let values = grid.par_iter().map(|&x| expansion_density(coeffs, x) / norm).collect();
    let rule = gauss_hermite(coeffs.len().max(2))?;
    let total = rule.integrate(|x| expansion_density(coeffs, x)) / norm;
    Ok(DensityProfile { grid: grid.to_vec(), values, representation, total })
}

/// η-mode expectations of x and p, split into real and imaginary parts, with
/// the pseudo-observable route `x = cosθ·X + sinθ·P + z*`,
/// `p = −sinθ·X + cosθ·P + iz*` evaluated alongside.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositionDecomposition {
    pub re_x: f64,
    pub im_x: f64,
    pub re_p: f64,
    pub im_p: f64,
    pub mean_pseudo_x: f64,
    pub mean_pseudo_p: f64,
    /// Largest imaginary part of ⟨X⟩_η, ⟨P⟩_η.
    pub pseudo_imaginary: f64,
    /// |⟨x⟩_η − (cosθ⟨X⟩_η + sinθ⟨P⟩_η + z*)|
    pub x_route_residual: f64,
    pub p_route_residual: f64,
}

impl PositionDecomposition {
    pub fn im_x_deviation(&self, params: &ModelParams) -> f64 {
        (self.im_x - params.z_star.im).abs()
    }

    pub fn im_p_deviation(&self, params: &ModelParams) -> f64 {
        (self.im_p - params.z_star.re).abs()
    }
}

pub fn position_decomposition(
    psi: &StateVector,
    ops: &OperatorSet,
    bundle: &MetricBundle,
    params: &ModelParams,
) -> Result<PositionDecomposition> {
    let mean = |op: &ComplexMatrix| expectation(op, psi, InnerProduct::Eta, bundle);
    let x = mean(&ops.x)?;
    let p = mean(&ops.p)?;
    let big_x = mean(&ops.pseudo_x)?;
    let big_p = mean(&ops.pseudo_p)?;
    let (cos, sin) = (params.theta.cos(), params.theta.sin());
    let zs = params.z_star;
    let x_route = big_x * cos + big_p * sin + zs;
    let p_route = -big_x * sin + big_p * cos + Complex64::i() * zs;
    Ok(PositionDecomposition {
        re_x: x.re,
        im_x: x.im,
        re_p: p.re,
        im_p: p.im,
        mean_pseudo_x: big_x.re,
        mean_pseudo_p: big_p.re,
        pseudo_imaginary: big_x.im.abs().max(big_p.im.abs()),
        x_route_residual: (x - x_route).norm(),
        p_route_residual: (p - p_route).norm(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Uncertainties {
    pub dx: f64,
    pub dp: f64,
    pub product: f64,
    /// η-expectation of `(x − ⟨x⟩_η)²`; real for interior-supported states.
    pub var_x: Complex64,
    pub var_p: Complex64,
}

fn variance(op: &ComplexMatrix, psi: &StateVector, bundle: &MetricBundle) -> Result<Complex64> {
    let mean = expectation(op, psi, InnerProduct::Eta, bundle)?;
    let shifted = op.shifted(-mean);
    expectation(&(&shifted * &shifted), psi, InnerProduct::Eta, bundle)
}

pub fn uncertainties(psi: &StateVector, ops: &OperatorSet, bundle: &MetricBundle) -> Result<Uncertainties> {
    let var_x = variance(&ops.x, psi, bundle)?;
    let var_p = variance(&ops.p, psi, bundle)?;
    for var in [var_x, var_p] {
        if !(var.re > 0.0) {
            return Err(Error::NegativeVariance(var.re));
        }
    }
    let (dx, dp) = (var_x.re.sqrt(), var_p.re.sqrt());
    Ok(Uncertainties { dx, dp, product: dx * dp, var_x, var_p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::build_metric;
    use crate::model::{build_operators, Branch};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    struct Fixture {
        params: ModelParams,
        ops: OperatorSet,
        system: BiorthogonalSystem,
        bundle: MetricBundle,
    }

    fn fixture(zs: Complex64, n: usize) -> Fixture {
        let params = ModelParams::on_branch(zs, Branch::HalfIntegerPi, n).unwrap();
        let ops = build_operators(&params).unwrap();
        let system = BiorthogonalSystem::build(&params).unwrap();
        let bundle = build_metric(&params, &ops, &system).unwrap();
        Fixture { params, ops, system, bundle }
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize, levels: usize) -> StateVector {
        let mut amps = vec![Complex64::ZERO; dim];
        for a in amps.iter_mut().take(levels) {
            *a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        StateVector::from_amplitudes(amps)
    }

    #[test]
    fn ground_function() {
        assert!((hermite_function(0, 0.0) - PI.powf(-0.25)).abs() < 1e-16);
        assert!((hermite_function(0, 1.3) - PI.powf(-0.25) * (-0.845f64).exp()).abs() < 1e-16);
        // ψ_2 = (2x² − 1)·ψ_0/√2
        let x = 0.9;
        let expected = (2.0 * x * x - 1.0) * hermite_function(0, x) / 2f64.sqrt();
        assert!((hermite_function(2, x) - expected).abs() < 1e-15);
        assert!(hermite_functions(0, 1.0).is_empty());
    }

    #[test]
    fn vacuum_condition() {
        let (x, h) = (0.7, 1e-5);
        let derivative = (hermite_function(0, x + h) - hermite_function(0, x - h)) / (2.0 * h);
        assert!((derivative + x * hermite_function(0, x)).abs() < 1e-6);
    }

    #[test]
    fn orthonormal_under_quadrature() {
        let rule = gauss_hermite(128).unwrap();
        let table: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| hermite_functions(21, x)).collect();
        for m in 0..=20 {
            for n in 0..=20 {
                let integral: f64 = table.iter().zip(&rule.scaled_weights).map(|(psi, w)| w * psi[m] * psi[n]).sum();
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((integral - expected).abs() < 1e-10, "({m},{n}): {integral}");
            }
        }
    }

    #[test]
    fn high_order_stays_finite() {
        for &x in &[0.0, 3.0, 15.0, -20.0] {
            assert!(hermite_function(511, x).is_finite());
        }
    }

    proptest! {
        #[test]
        fn squared_functions_are_even(n in 0usize..64, x in -6.0f64..6.0) {
            let (left, right) = (hermite_function(n, -x), hermite_function(n, x));
            prop_assert!((left * left - right * right).abs() <= 1e-14);
        }
    }

    #[test]
    fn vacuum_profiles_are_gaussian() {
        let f = fixture(Complex64::new(0.3, 0.2), 64);
        let grid = default_grid();
        assert_eq!(grid.len(), 481);
        let b_vacuum = f.system.basis.column(0);
        let pseudo = density(&b_vacuum, Representation::PseudoPosition, &grid, &f.system, &f.bundle).unwrap();
        let a_vacuum = StateVector::basis(64, 0);
        let plain = density(&a_vacuum, Representation::Position, &grid, &f.system, &f.bundle).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let gauss = (-x * x).exp() / PI.sqrt();
            assert!((pseudo.values[i] - gauss).abs() < 1e-9);
            assert!((plain.values[i] - gauss).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_column_density_is_squared_hermite_function() {
        let f = fixture(Complex64::new(0.3, 0.2), 64);
        let grid = uniform_grid(-4.0, 4.0, 33);
        let profile = density(&f.system.basis.column(5), Representation::PseudoPosition, &grid, &f.system, &f.bundle).unwrap();
        for (x, v) in grid.iter().zip(&profile.values) {
            assert!((v - hermite_function(5, *x).powi(2)).abs() < 1e-9);
        }
        for i in 0..grid.len() {
            assert!((profile.values[i] - profile.values[grid.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn totals_are_unity() {
        let f = fixture(Complex64::new(0.3, 0.2), 64);
        let psi = StateVector::basis(64, 1);
        for rep in [Representation::PseudoPosition, Representation::Position] {
            let profile = density(&psi, rep, &default_grid(), &f.system, &f.bundle).unwrap();
            assert!((profile.total - 1.0).abs() < 1e-6, "{rep:?}: {}", profile.total);
            assert!(profile.values.iter().all(|&v| v >= 0.0));
        }
        let zero = StateVector::zeros(64);
        assert!(matches!(density(&zero, Representation::Position, &[0.0], &f.system, &f.bundle), Err(Error::ZeroState)));
    }

    #[test]
    fn parseval_on_interior_states() {
        let f = fixture(Complex64::new(0.3, 0.2), 64);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(&mut rng, 64, 20);
        let coeffs = f.system.duals.adjoint().apply(&psi);
        let eta_norm = inner(&psi, &psi, InnerProduct::Eta, &f.bundle).unwrap().re;
        let k = f.params.interior();
        let sum: f64 = coeffs.amplitudes()[..k].iter().map(|c| c.norm_sqr()).sum();
        assert!((sum / eta_norm - 1.0).abs() < 1e-8);
    }

    #[test]
    fn decomposition_reproduces_shift() {
        let f = fixture(Complex64::new(0.3, 0.2), 64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let psi = random_state(&mut rng, 64, 16);
            let d = position_decomposition(&psi, &f.ops, &f.bundle, &f.params).unwrap();
            assert!(d.im_x_deviation(&f.params) < 1e-8, "{d:?}");
            assert!(d.im_p_deviation(&f.params) < 1e-8, "{d:?}");
            assert!(d.x_route_residual < 1e-9 && d.p_route_residual < 1e-9);
            assert!(d.pseudo_imaginary < 1e-9);
        }
    }

    #[test]
    fn real_shift_has_no_imaginary_position() {
        let f = fixture(Complex64::new(0.4, 0.0), 64);
        let d = position_decomposition(&StateVector::basis(64, 2), &f.ops, &f.bundle, &f.params).unwrap();
        assert!(d.im_x.abs() < 1e-10);
    }

    #[test]
    fn vacuum_uncertainties() {
        for zs in [Complex64::ZERO, Complex64::new(0.3, 0.2), Complex64::new(0.6, -0.8)] {
            let f = fixture(zs, 64);
            let u = uncertainties(&f.system.basis.column(0), &f.ops, &f.bundle).unwrap();
            assert!((u.dx - FRAC_1_SQRT_2).abs() < 1e-9, "{zs}: {u:?}");
            assert!((u.dp - FRAC_1_SQRT_2).abs() < 1e-9, "{zs}: {u:?}");
            assert!((u.product - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn random_states_respect_the_uncertainty_bound() {
        let f = fixture(Complex64::new(0.3, 0.2), 64);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let psi = random_state(&mut rng, 64, 16);
            let u = uncertainties(&psi, &f.ops, &f.bundle).unwrap();
            assert!(u.product >= 0.5 - 1e-9, "{u:?}");
            assert!(u.var_x.im.abs() <= 1e-9 && u.var_p.im.abs() <= 1e-9, "{u:?}");
        }
    }

    #[test]
    fn csv_header() {
        let profile = DensityProfile {
            grid: vec![0.0],
            values: vec![0.5],
            representation: Representation::Position,
            total: 1.0,
        };
        assert_eq!(profile.to_csv(), "coordinate,density\n0.0000000000000000e0,5.0000000000000000e-1\n");
    }
}
