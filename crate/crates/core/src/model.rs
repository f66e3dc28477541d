//! Operators and bases of the complex-shifted oscillator in the truncated a-Fock basis.
//!
//! Units are fixed to m = ħ = ω = 1. The complex shift is stored as `z_star`
//! (= ρe^{iλ}); the phase `theta` fixes the b-ladder operators `b = a·e^{iθ}`
//! and `b♯ = e^{-iθ}(a† − z*√2)`. The Hamiltonian `(a† − z*√2)a + 1/2` is upper
//! triangular in this basis, so its spectrum is read off the diagonal.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{relative_residual, ComplexMatrix, I};

pub const MIN_CUTOFF: usize = 8;
pub const MAX_CUTOFF: usize = 256;
const BRANCH_TOL: f64 = 1e-12;

/// Which family θ − λ belongs to: integer or half-integer multiples of π.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "INTEGER_PI")]
    IntegerPi,
    #[serde(rename = "HALF_INTEGER_PI")]
    HalfIntegerPi,
}

impl Branch {
    /// Upper sign (+1) on the integer branch, lower sign (−1) on the half-integer one.
    pub fn sign(self) -> f64 {
        match self {
            Branch::IntegerPi => 1.0,
            Branch::HalfIntegerPi => -1.0,
        }
    }

    pub fn theta_offset(self) -> f64 {
        match self {
            Branch::IntegerPi => 0.0,
            Branch::HalfIntegerPi => FRAC_PI_2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub z_star: Complex64,
    pub theta: f64,
    pub cutoff: usize,
    pub margin: usize,
}

impl ModelParams {
    pub fn new(z_star: Complex64, theta: f64, cutoff: usize, margin: usize) -> Result<Self> {
        if !(z_star.re.is_finite() && z_star.im.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidParams("z* and θ must be finite".into()));
        }
        if cutoff > MAX_CUTOFF {
            return Err(Error::CutoffTooLarge(cutoff));
        }
        if cutoff < MIN_CUTOFF {
            return Err(Error::InvalidParams(format!("cutoff N = {cutoff} must be at least {MIN_CUTOFF}")));
        }
        if margin < 2 || margin >= cutoff {
            return Err(Error::InvalidParams(format!("margin M = {margin} must satisfy 2 ≤ M < N (N = {cutoff})")));
        }
        Ok(Self { z_star, theta, cutoff, margin })
    }

    /// θ = λ (integer branch) or θ = λ + π/2 (half-integer branch), default margin.
    pub fn on_branch(z_star: Complex64, branch: Branch, cutoff: usize) -> Result<Self> {
        let lambda = phase(z_star);
        Self::new(z_star, lambda + branch.theta_offset(), cutoff, Self::default_margin(cutoff))
    }

    pub fn default_margin(cutoff: usize) -> usize {
        (cutoff / 4).max(2)
    }

    pub fn with_margin(self, margin: usize) -> Result<Self> {
        Self::new(self.z_star, self.theta, self.cutoff, margin)
    }

    pub fn with_cutoff(self, cutoff: usize) -> Result<Self> {
        Self::new(self.z_star, self.theta, cutoff, Self::default_margin(cutoff))
    }

    pub fn rho(&self) -> f64 {
        self.z_star.norm()
    }

    /// Phase of z* in (−π, π]; zero when z* = 0.
    pub fn lambda(&self) -> f64 {
        phase(self.z_star)
    }

    /// z, the conjugate of the stored shift.
    pub fn z(&self) -> Complex64 {
        self.z_star.conj()
    }

    pub fn z_abs2(&self) -> f64 {
        self.z_star.norm_sqr()
    }

    /// Size of the top-left block on which truncation-sensitive identities are checked.
    pub fn interior(&self) -> usize {
        self.cutoff - self.margin
    }

    pub fn branch(&self) -> Option<Branch> {
        let offset = self.theta - self.lambda();
        let quarter_turns = (offset / FRAC_PI_2).round();
        if (offset - quarter_turns * FRAC_PI_2).abs() > BRANCH_TOL * offset.abs().max(1.0) {
            return None;
        }
        Some(if (quarter_turns as i64).rem_euclid(2) == 0 { Branch::IntegerPi } else { Branch::HalfIntegerPi })
    }

    pub fn require_branch(&self) -> Result<Branch> {
        self.branch().ok_or(Error::BranchViolation { offset: self.theta - self.lambda() })
    }
}

fn phase(z: Complex64) -> f64 {
    if z == Complex64::ZERO {
        0.0
    } else {
        z.arg()
    }
}

/// Truncated Fock-space ladder operators and the canonical pair built from them.
#[derive(Clone, Debug)]
pub struct LadderOps {
    pub a: ComplexMatrix,
    pub a_dag: ComplexMatrix,
    pub x: ComplexMatrix,
    pub p: ComplexMatrix,
}

pub fn ladder_ops(dim: usize) -> Result<LadderOps> {
    if dim < 2 {
        return Err(Error::InvalidParams(format!("ladder operators need N ≥ 2, got {dim}")));
    }
    let a = ComplexMatrix::from_fn(dim, |m, n| {
        if n == m + 1 {
            Complex64::new((n as f64).sqrt(), 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let a_dag = a.adjoint();
    let x = (&a + &a_dag).scale_real(1.0 / SQRT_2);
    let p = (&a - &a_dag).scale(-I / SQRT_2);
    Ok(LadderOps { a, a_dag, x, p })
}

#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub a: ComplexMatrix,
    pub a_dag: ComplexMatrix,
    pub x: ComplexMatrix,
    pub p: ComplexMatrix,
    pub b: ComplexMatrix,
    pub b_sharp: ComplexMatrix,
    pub h: ComplexMatrix,
    pub h_dag: ComplexMatrix,
    /// Pseudo-Hermitian position `(b + b♯)/√2`.
    pub pseudo_x: ComplexMatrix,
    /// Pseudo-Hermitian momentum `−i(b − b♯)/√2`.
    pub pseudo_p: ComplexMatrix,
    /// Position-space form `(p − iz*)²/2 + (x − z*)²/2`.
    pub h_xp: ComplexMatrix,
    /// Relative discrepancy between `h` and `h_xp` on the (N−2)-block.
    pub xp_discrepancy: f64,
}

pub fn build_operators(params: &ModelParams) -> Result<OperatorSet> {
    let n = params.cutoff;
    let LadderOps { a, a_dag, x, p } = ladder_ops(n)?;
    let zs = params.z_star;
    let shifted_raise = a_dag.shifted(-zs * SQRT_2);

    // (a† − z*√2)a + 1/2 with a†a taken as the exact number operator.
    let number = ComplexMatrix::from_diagonal(&(0..n).map(|k| Complex64::new(k as f64, 0.0)).collect::<Vec<_>>());
    let h = (&number - &a.scale(zs * SQRT_2)).shifted(Complex64::new(0.5, 0.0));
    let h_dag = h.adjoint();
    let phase = Complex64::from_polar(1.0, params.theta);
    let b = a.scale(phase);
    let b_sharp = shifted_raise.scale(phase.conj());
    let pseudo_x = (&b + &b_sharp).scale_real(1.0 / SQRT_2);
    let pseudo_p = (&b - &b_sharp).scale(-I / SQRT_2);

    let p_shift = p.shifted(-I * zs);
    let x_shift = x.shifted(-zs);
    let h_xp = (&(&p_shift * &p_shift) + &(&x_shift * &x_shift)).scale_real(0.5);
    let xp_discrepancy = relative_residual(&h, &h_xp, n - 2);

    Ok(OperatorSet { a, a_dag, x, p, b, b_sharp, h, h_dag, pseudo_x, pseudo_p, h_xp, xp_discrepancy })
}

/// Column `n` holds |n⟩_b expanded in the a-basis:
/// `e^{-inθ} Σ_l √C(n,l)·(−z*√2)^l/√(l!)·|n−l⟩_a`.
pub fn b_basis(params: &ModelParams) -> Result<ComplexMatrix> {
    let dim = params.cutoff;
    if dim > MAX_CUTOFF {
        return Err(Error::CutoffTooLarge(dim));
    }
    let step = -params.z_star * SQRT_2;
    let mut basis = ComplexMatrix::zeros(dim);
    for n in 0..dim {
        let phase = Complex64::from_polar(1.0, -(n as f64) * params.theta);
        // c_{l+1} / c_l = (−z*√2)·√(n − l)/(l + 1)
        let mut coeff = Complex64::ONE;
        for l in 0..=n {
            basis.set(n - l, n, phase * coeff);
            coeff *= step * (((n - l) as f64).sqrt() / (l + 1) as f64);
        }
    }
    Ok(basis)
}

/// Normalized duals: the columns of `(basis†)^{-1}`, so that `duals†·basis = I`.
pub fn dual_basis(basis: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !basis.is_upper_triangular() {
        return Err(Error::InvalidParams("b-basis must be upper triangular".into()));
    }
    if basis.diagonal().iter().any(|d| *d == Complex64::ZERO) {
        return Err(Error::Singular);
    }
    basis.adjoint().solve_lower_triangular(&ComplexMatrix::identity(basis.dim()))
}

/// The b-eigenbasis of `H`, its biorthonormal duals, and the spectrum `n + 1/2`.
#[derive(Clone, Debug)]
pub struct BiorthogonalSystem {
    pub basis: ComplexMatrix,
    pub duals: ComplexMatrix,
    pub energies: Vec<f64>,
}

impl BiorthogonalSystem {
    pub fn build(params: &ModelParams) -> Result<Self> {
        let basis = b_basis(params)?;
        let duals = dual_basis(&basis)?;
        let energies = (0..params.cutoff).map(|n| n as f64 + 0.5).collect();
        Ok(Self { basis, duals, energies })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn energy_diag(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.energies.iter().map(|&e| Complex64::new(e, 0.0)).collect::<Vec<_>>())
    }

    /// `duals†·basis` against the identity.
    pub fn biorthonormality_residual(&self) -> f64 {
        let n = self.dim();
        relative_residual(&(&self.duals.adjoint() * &self.basis), &ComplexMatrix::identity(n), n)
    }

    /// `H·basis` against `basis·diag(E)` on the first `k` columns.
    pub fn right_residual(&self, h: &ComplexMatrix, k: usize) -> f64 {
        relative_residual(&(h * &self.basis), &(&self.basis * &self.energy_diag()), k)
    }

    /// `H†·duals` against `duals·diag(E)` on the first `k` columns.
    pub fn left_residual(&self, h_dag: &ComplexMatrix, k: usize) -> f64 {
        relative_residual(&(h_dag * &self.duals), &(&self.duals * &self.energy_diag()), k)
    }
}

/// Closed form of the L² overlap `_b⟨m|n⟩_b`:
/// `e^{i(m−n)θ}(−√2)^{m+n} Σ_k √(m!n!)/(k!(m−k)!(n−k)!)·2^{-k}·z^{m−k}(z*)^{n−k}`.
///
/// Each k-term carries 2^{-k}; dropping it gives 2 + 2|z|² at m = n = 1
/// instead of the true 1 + 2|z|². At z = 0 only k = m = n survives, giving δ_{mn}.
pub fn overlap_formula(m: usize, n: usize, params: &ModelParams) -> Complex64 {
    overlap_series(m, n, params, 2.0)
}

/// The same series with the 2^{-k} weights removed, kept to quantify how far
/// that variant sits from the true overlap.
pub fn overlap_formula_unweighted(m: usize, n: usize, params: &ModelParams) -> Complex64 {
    overlap_series(m, n, params, 1.0)
}

fn overlap_series(m: usize, n: usize, params: &ModelParams, k_weight: f64) -> Complex64 {
    if m < n {
        return overlap_series(n, m, params, k_weight).conj();
    }
    let z = params.z();
    let z_abs2 = params.z_abs2();
    let d = m - n;

    // Leading term k = n, then walk k downward so no division by |z|² occurs.
    let mut lead = Complex64::new(if (m + n) % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    for j in 1..=d {
        lead *= z * (((n + j) as f64).sqrt() / j as f64);
    }
    let magnitude = 2f64.powf((m + n) as f64 / 2.0) / k_weight.powi(n as i32);
    let mut sum = Complex64::ZERO;
    let mut term = Complex64::ONE;
    for k in (1..=n).rev() {
        sum += term;
        // term_{k−1}/term_k = k_weight·k·|z|²/((m−k+1)(n−k+1))
        term *= k_weight * k as f64 * z_abs2 / (((m - k + 1) * (n - k + 1)) as f64);
    }
    sum += term;
    Complex64::from_polar(1.0, (m as f64 - n as f64) * params.theta) * lead * sum * magnitude
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(zs: Complex64, n: usize) -> ModelParams {
        ModelParams::on_branch(zs, Branch::HalfIntegerPi, n).unwrap()
    }

    #[test]
    fn ladder_matrix_elements() {
        let ops = ladder_ops(3).unwrap();
        assert_eq!(ops.a.get(0, 1), c(1.0, 0.0));
        assert_eq!(ops.a.get(1, 2), c(2f64.sqrt(), 0.0));
        let nonzero = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| ops.a.get(i, j) != Complex64::ZERO).count();
        assert_eq!(nonzero, 2);
        let comm = ops.a.commutator(&ops.a_dag);
        let expected = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)]);
        assert!(relative_residual(&comm, &expected, 3) < 1e-15);
        assert!((ops.x.get(0, 1) - c(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(ladder_ops(1).is_err());
    }

    #[test]
    fn params_validation() {
        let zs = c(0.3, 0.2);
        assert!(ModelParams::new(zs, 0.0, 7, 2).is_err());
        assert!(matches!(ModelParams::new(zs, 0.0, 300, 8), Err(Error::CutoffTooLarge(300))));
        assert!(ModelParams::new(zs, 0.0, 16, 16).is_err());
        assert!(ModelParams::new(zs, 0.0, 16, 15).is_ok());
        assert!(ModelParams::new(zs, 0.0, 16, 1).is_err());
        assert!(ModelParams::new(zs, 0.0, 16, 7).is_ok());
        let p = ModelParams::on_branch(zs, Branch::HalfIntegerPi, 64).unwrap();
        assert_eq!(p.margin, 16);
        assert_eq!(p.interior(), 48);
        assert_eq!(p.branch(), Some(Branch::HalfIntegerPi));
        let p = ModelParams::on_branch(zs, Branch::IntegerPi, 64).unwrap();
        assert_eq!(p.branch(), Some(Branch::IntegerPi));
        let shifted = ModelParams::new(zs, p.theta + PI, 64, 16).unwrap();
        assert_eq!(shifted.branch(), Some(Branch::IntegerPi));
        let shifted = ModelParams::new(zs, p.theta - 1.5 * PI, 64, 16).unwrap();
        assert_eq!(shifted.branch(), Some(Branch::HalfIntegerPi));
        let off = ModelParams::new(zs, 0.1, 64, 16).unwrap();
        assert_eq!(off.branch(), None);
        assert!(matches!(off.require_branch(), Err(Error::BranchViolation { .. })));
    }

    #[test]
    fn lambda_convention() {
        let p = ModelParams::new(c(-1.0, 0.0), 0.0, 8, 2).unwrap();
        assert!((p.lambda() - PI).abs() < 1e-15);
        let p = ModelParams::new(Complex64::ZERO, 0.0, 8, 2).unwrap();
        assert_eq!(p.lambda(), 0.0);
        assert_eq!(p.branch(), Some(Branch::IntegerPi));
    }

    #[test]
    fn harmonic_limit() {
        let p = ModelParams::new(Complex64::ZERO, 0.0, 16, 4).unwrap();
        let ops = build_operators(&p).unwrap();
        assert_eq!(ops.b, ops.a);
        for n in 0..16 {
            for m in 0..16 {
                let expected = if m == n { c(n as f64 + 0.5, 0.0) } else { Complex64::ZERO };
                assert_eq!(ops.h.get(m, n), expected);
            }
        }
    }

    #[test]
    fn hamiltonian_diagonal_is_exact() {
        let ops = build_operators(&params(c(0.7, -0.4), 32)).unwrap();
        for (n, d) in ops.h.diagonal().iter().enumerate() {
            assert_eq!(*d, c(n as f64 + 0.5, 0.0));
        }
        assert!(ops.h.is_upper_triangular());
    }

    #[test]
    fn position_space_form_agrees() {
        let ops = build_operators(&params(c(0.3, 0.2), 64)).unwrap();
        assert!(ops.xp_discrepancy <= 1e-12, "{}", ops.xp_discrepancy);
    }

    #[test]
    fn pseudo_phase_variables_are_exact() {
        let ops = build_operators(&params(c(0.3, 0.2), 16)).unwrap();
        let x = (&ops.b + &ops.b_sharp).scale_real(1.0 / SQRT_2);
        let p = (&ops.b - &ops.b_sharp).scale(-I / SQRT_2);
        assert_eq!(x, ops.pseudo_x);
        assert_eq!(p, ops.pseudo_p);
    }

    #[test]
    fn basis_low_columns() {
        let p = params(c(0.3, 0.2), 16);
        let basis = b_basis(&p).unwrap();
        assert_eq!(basis.column(0), crate::linalg::StateVector::basis(16, 0));
        let phase = Complex64::from_polar(1.0, -p.theta);
        assert!((basis.get(0, 1) - phase * (-p.z_star * SQRT_2)).norm() < 1e-15);
        assert!((basis.get(1, 1) - phase).norm() < 1e-15);
        assert!((2..16).all(|r| basis.get(r, 1) == Complex64::ZERO));
        assert!(basis.is_upper_triangular());
    }

    #[test]
    fn basis_matches_repeated_raising() {
        let p = params(c(0.3, 0.2), 64);
        let ops = build_operators(&p).unwrap();
        let basis = b_basis(&p).unwrap();
        let mut state = crate::linalg::StateVector::basis(64, 0);
        for n in 0..64 {
            let col = basis.column(n);
            let scale = col.norm().max(1.0);
            assert!(state.max_abs_diff(&col) <= 1e-12 * scale, "n = {n}");
            state = ops.b_sharp.apply(&state).scale(c(1.0 / ((n + 1) as f64).sqrt(), 0.0));
        }
    }

    #[test]
    fn duals_in_harmonic_limit() {
        let p = ModelParams::new(Complex64::ZERO, 0.4, 16, 4).unwrap();
        let sys = BiorthogonalSystem::build(&p).unwrap();
        for n in 0..16 {
            let mut expected = crate::linalg::StateVector::zeros(16);
            let mut amps = expected.amplitudes().to_vec();
            amps[n] = Complex64::from_polar(1.0, -(n as f64) * 0.4);
            expected = crate::linalg::StateVector::from_amplitudes(amps);
            assert!(sys.duals.column(n).max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn duals_are_biorthonormal_eigenvectors() {
        let p = params(c(0.3, 0.2), 64);
        let ops = build_operators(&p).unwrap();
        let sys = BiorthogonalSystem::build(&p).unwrap();
        assert!(sys.biorthonormality_residual() <= 1e-12);
        let k = p.interior();
        assert!(sys.right_residual(&ops.h, k) <= 1e-10);
        assert!(sys.left_residual(&ops.h_dag, k) <= 1e-10);
    }

    #[test]
    fn singular_basis_is_rejected() {
        let mut basis = ComplexMatrix::identity(4);
        basis.set(2, 2, Complex64::ZERO);
        assert_eq!(dual_basis(&basis), Err(Error::Singular));
    }

    #[test]
    fn overlap_low_orders() {
        let p = params(c(0.3, 0.2), 16);
        assert!((overlap_formula(0, 0, &p) - Complex64::ONE).norm() < 1e-15);
        let expected = -SQRT_2 * Complex64::from_polar(1.0, -p.theta) * p.z_star;
        assert!((overlap_formula(0, 1, &p) - expected).norm() < 1e-15);
        let one_one = overlap_formula(1, 1, &p);
        assert!((one_one - c(1.0 + 2.0 * p.z_abs2(), 0.0)).norm() < 1e-15);
        let unweighted = overlap_formula_unweighted(1, 1, &p);
        assert!((unweighted - c(2.0 + 2.0 * p.z_abs2(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn overlap_at_zero_shift_is_kronecker() {
        let p = ModelParams::new(Complex64::ZERO, 0.3, 16, 4).unwrap();
        for m in 0..10 {
            for n in 0..10 {
                let expected = if m == n { Complex64::ONE } else { Complex64::ZERO };
                assert!((overlap_formula(m, n, &p) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn overlap_matches_direct_inner_products() {
        for zs in [c(0.3, 0.2), c(-0.5, 0.7)] {
            let p = params(zs, 32);
            let basis = b_basis(&p).unwrap();
            for m in 0..12 {
                for n in 0..12 {
                    let direct = basis.column(m).dot(&basis.column(n));
                    let formula = overlap_formula(m, n, &p);
                    assert!((direct - formula).norm() <= 1e-10 * direct.norm().max(1.0), "({m},{n}): {direct} vs {formula}");
                }
            }
        }
    }
}
