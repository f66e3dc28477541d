//! Generalized parity, time reflection, charge, and their product, built as
//! spectral sums over the biorthonormal b-system.
//!
//! With `d_n` the normalized duals and `b_n` the b-basis columns:
//! `P = Σ σ_n d_n d_n†`, `T = Σ σ′_n d_n ⋆ d_n†`, `C = Σ σ_n b_n d_n†` and
//! `X = Σ σ_n σ′_n b_n ⋆ d_n†`, where `⋆` conjugates what stands to its right.
//! Antilinear operators are stored as `U` with action `ψ ↦ U·conj(ψ)`, the
//! conjugation taken in the a-basis, so `T` has matrix `Σ σ′_n d_n d_nᵀ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{relative_residual, ComplexMatrix, StateVector, I};
use crate::metric::MetricBundle;
use crate::model::{BiorthogonalSystem, Branch, ModelParams, OperatorSet};
use crate::report::{fixed, Check};

/// Conjugation `O ↦ V·O·V⁻¹` (linear) or `O ↦ U·conj(O)·U⁻¹` (antilinear).
pub trait Similarity {
    fn conjugate(&self, op: &ComplexMatrix) -> ComplexMatrix;
}

pub fn conjugate_by<S: Similarity + ?Sized>(similarity: &S, op: &ComplexMatrix) -> ComplexMatrix {
    similarity.conjugate(op)
}

#[derive(Clone, Debug)]
pub struct LinearOp {
    pub matrix: ComplexMatrix,
    pub inverse: ComplexMatrix,
}

impl LinearOp {
    /// Inverts by LU; errors on a singular matrix.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let inverse = matrix.inverse()?;
        Ok(Self { matrix, inverse })
    }

    pub fn with_inverse(matrix: ComplexMatrix, inverse: ComplexMatrix) -> Self {
        Self { matrix, inverse }
    }
}

impl Similarity for LinearOp {
    fn conjugate(&self, op: &ComplexMatrix) -> ComplexMatrix {
        &(&self.matrix * op) * &self.inverse
    }
}

#[derive(Clone, Debug)]
pub struct AntilinearOp {
    pub matrix: ComplexMatrix,
    pub inverse: ComplexMatrix,
    /// Least-squares γ in `U·conj(U) ≈ γ·I` over the interior block.
    pub gamma: f64,
}

impl AntilinearOp {
    pub fn new(matrix: ComplexMatrix, interior: usize) -> Result<Self> {
        let inverse = matrix.inverse()?;
        Ok(Self::with_inverse(matrix, inverse, interior))
    }

    pub fn with_inverse(matrix: ComplexMatrix, inverse: ComplexMatrix, interior: usize) -> Self {
        let square = &matrix * &matrix.conj();
        let gamma = 1.0 / identity_fit(&square, interior);
        Self { matrix, inverse, gamma }
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        self.matrix.apply(&psi.conj())
    }

    /// Matrix of the (linear) square `U·conj(U)`.
    pub fn square(&self) -> ComplexMatrix {
        &self.matrix * &self.matrix.conj()
    }
}

impl Similarity for AntilinearOp {
    fn conjugate(&self, op: &ComplexMatrix) -> ComplexMatrix {
        &(&self.matrix * &op.conj()) * &self.inverse
    }
}

/// α minimizing `‖α·A − I‖_F` on the top-left `k` block: `Re tr(A)/‖A‖²_F`.
fn identity_fit(a: &ComplexMatrix, k: usize) -> f64 {
    let block = a.block(k);
    let norm = block.frobenius_norm();
    block.trace().re / (norm * norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizationReport {
    /// `P² ≈ γ_P·I` with P built from the normalized duals.
    #[serde(serialize_with = "fixed")]
    pub parity_gamma: f64,
    #[serde(serialize_with = "fixed")]
    pub time_gamma: f64,
    /// `s` with `(s·P)² = I`.
    #[serde(serialize_with = "fixed")]
    pub parity_scale: f64,
    #[serde(serialize_with = "fixed")]
    pub time_scale: f64,
    /// Scalar κ such that building P from `κ·η` makes it an exact involution.
    #[serde(serialize_with = "fixed")]
    pub involutive_metric_scale: f64,
    /// `e^{-|z|²}`
    #[serde(serialize_with = "fixed")]
    pub unit_gram_candidate: f64,
    /// `e^{-2|z|²}`
    #[serde(serialize_with = "fixed")]
    pub tilde_candidate: f64,
    #[serde(serialize_with = "fixed")]
    pub parity_residual: f64,
    #[serde(serialize_with = "fixed")]
    pub time_residual: f64,
}

#[derive(Clone, Debug)]
pub struct InvolutionSuite {
    pub parity: LinearOp,
    pub time: AntilinearOp,
    pub charge: LinearOp,
    pub combined: AntilinearOp,
    pub sigma: Vec<f64>,
    pub sigma_prime: Vec<f64>,
    pub branch: Branch,
    pub normalization: NormalizationReport,
}

impl InvolutionSuite {
    pub fn calibrated_parity(&self) -> ComplexMatrix {
        self.parity.matrix.scale_real(self.normalization.parity_scale)
    }

    pub fn calibrated_time(&self) -> ComplexMatrix {
        self.time.matrix.scale_real(self.normalization.time_scale)
    }
}

pub fn parity_signs(dim: usize) -> Vec<f64> {
    (0..dim).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// σ′_n: `(−1)^n` on the integer branch, 1 on the half-integer branch.
pub fn time_signs(dim: usize, branch: Branch) -> Vec<f64> {
    match branch {
        Branch::IntegerPi => parity_signs(dim),
        Branch::HalfIntegerPi => vec![1.0; dim],
    }
}

/// `L·diag(w)·R†`
fn weighted_outer(left: &ComplexMatrix, weights: &[f64], right_adjoint: &ComplexMatrix) -> ComplexMatrix {
    let diag = ComplexMatrix::from_diagonal(&weights.iter().map(|&w| Complex64::new(w, 0.0)).collect::<Vec<_>>());
    &(left * &diag) * right_adjoint
}

/// `U = Σ σ′_n d_n d_nᵀ` with inverse `conj(B)·diag(σ′)·B†`.
pub fn time_reflection(system: &BiorthogonalSystem, sigma_prime: &[f64], interior: usize) -> AntilinearOp {
    let matrix = weighted_outer(&system.duals, sigma_prime, &system.duals.transpose());
    let inverse = weighted_outer(&system.basis.conj(), sigma_prime, &system.basis.adjoint());
    AntilinearOp::with_inverse(matrix, inverse, interior)
}

pub fn build_suite(params: &ModelParams, system: &BiorthogonalSystem, bundle: &MetricBundle) -> Result<InvolutionSuite> {
    let branch = params.require_branch()?;
    let n = system.dim();
    let k = params.interior();
    let sigma = parity_signs(n);
    let sigma_prime = time_signs(n, branch);
    let product: Vec<f64> = sigma.iter().zip(&sigma_prime).map(|(a, b)| a * b).collect();
    let (basis, duals) = (&system.basis, &system.duals);

    // Exact inverses follow from duals† = basis⁻¹.
    let parity = LinearOp::with_inverse(
        weighted_outer(duals, &sigma, &duals.adjoint()),
        weighted_outer(basis, &sigma, &basis.adjoint()),
    );
    let charge_matrix = weighted_outer(basis, &sigma, &duals.adjoint());
    let charge = LinearOp::with_inverse(charge_matrix.clone(), charge_matrix);
    let time = time_reflection(system, &sigma_prime, k);
    let combined = AntilinearOp::with_inverse(
        weighted_outer(basis, &product, &duals.transpose()),
        weighted_outer(&basis.conj(), &product, &duals.adjoint()),
        k,
    );

    let parity_alpha = identity_fit(&(&parity.matrix * &parity.matrix), k);
    let time_alpha = 1.0 / time.gamma;
    let parity_residual = relative_residual(
        &(&parity.matrix * &parity.matrix).scale_real(parity_alpha),
        &ComplexMatrix::identity(n),
        k,
    );
    let time_residual = relative_residual(&time.square().scale_real(time_alpha), &ComplexMatrix::identity(n), k);
    let parity_gamma = 1.0 / parity_alpha;
    let normalization = NormalizationReport {
        parity_gamma,
        time_gamma: time.gamma,
        parity_scale: parity_alpha.sqrt(),
        time_scale: time_alpha.sqrt(),
        involutive_metric_scale: bundle.c_measured * parity_gamma.powf(-0.25),
        unit_gram_candidate: MetricBundle::unit_gram_candidate(params),
        tilde_candidate: MetricBundle::tilde_candidate(params),
        parity_residual,
        time_residual,
    };

    Ok(InvolutionSuite { parity, time, charge, combined, sigma, sigma_prime, branch, normalization })
}

pub const TRANSFORMATION_TOL: f64 = 1e-7;
pub const INVOLUTION_TOL: f64 = 1e-8;
pub const EXACT_TOL: f64 = 1e-10;

/// Involution and Hermiticity properties of the suite itself.
pub fn verify_involutions(suite: &InvolutionSuite, k: usize) -> Vec<Check> {
    let n = suite.charge.matrix.dim();
    let ident = ComplexMatrix::identity(n);
    let c = &suite.charge.matrix;
    let p = &suite.parity.matrix;
    let p_cal = suite.calibrated_parity();
    let t_cal = suite.calibrated_time();
    vec![
        Check::new("involution: C^2 = I", relative_residual(&(c * c), &ident, k), EXACT_TOL),
        Check::new("involution: P = P^dagger", relative_residual(p, &p.adjoint(), k), EXACT_TOL),
        Check::new("involution: (s_P P)^2 = I", relative_residual(&(&p_cal * &p_cal), &ident, k), INVOLUTION_TOL),
        Check::new("involution: (s_T T)(s_T T) = I", relative_residual(&(&t_cal * &t_cal.conj()), &ident, k), INVOLUTION_TOL),
        Check::flag("involution: T square is a positive multiple of I", suite.time.gamma.is_finite() && suite.time.gamma > 0.0),
    ]
}

/// Every displayed transformation rule, with signs bound to the branch
/// (upper sign on the integer branch, lower on the half-integer branch).
pub fn verify_transformations(suite: &InvolutionSuite, ops: &OperatorSet, params: &ModelParams, k: usize) -> Vec<Check> {
    let n = params.cutoff;
    let u = suite.branch.sign();
    let zs = params.z_star;
    let z = params.z();
    let (x, p) = (&ops.x, &ops.p);
    let (cos2, sin2) = ((2.0 * params.theta).cos(), (2.0 * params.theta).sin());
    let scalar = |c: Complex64| ComplexMatrix::identity(n).scale(c);
    let rotated_x = &x.scale_real(cos2) - &p.scale_real(sin2);
    let rotated_p = &x.scale_real(sin2) + &p.scale_real(cos2);
    let re_shift = scalar(z + zs);
    let im_shift = scalar(-I * (z - zs));

    let rule = |name: &str, image: ComplexMatrix, expected: ComplexMatrix| {
        Check::new(name, relative_residual(&image, &expected, k), TRANSFORMATION_TOL)
    };
    let par = &suite.parity;
    let time = &suite.time;
    let chg = &suite.charge;
    let comb = &suite.combined;
    let (big_x, big_p) = (&ops.pseudo_x, &ops.pseudo_p);

    vec![
        rule("transform P: x -> -x + (z+z*)I", par.conjugate(x), &(-x) + &re_shift),
        rule("transform P: p -> -p - i(z-z*)I", par.conjugate(p), &(-p) + &im_shift),
        rule(
            "transform T: x -> -+(x cos2θ - p sin2θ) + (z+z*)I",
            time.conjugate(x),
            &rotated_x.scale_real(-u) + &re_shift,
        ),
        rule(
            "transform T: p -> +-(x sin2θ + p cos2θ) - i(z-z*)I",
            time.conjugate(p),
            &rotated_p.scale_real(u) + &im_shift,
        ),
        rule("transform C: x -> -x + 2z*I", chg.conjugate(x), &(-x) + &scalar(zs * 2.0)),
        rule("transform C: p -> -p + 2iz*I", chg.conjugate(p), &(-p) + &scalar(I * zs * 2.0)),
        rule("transform PT: x -> +-(x cos2θ - p sin2θ)", comb.conjugate(x), rotated_x.scale_real(u)),
        rule("transform PT: p -> -+(x sin2θ + p cos2θ)", comb.conjugate(p), rotated_p.scale_real(-u)),
        rule("transform P: X -> -X^dagger", par.conjugate(big_x), -&big_x.adjoint()),
        rule("transform P: P -> -P^dagger", par.conjugate(big_p), -&big_p.adjoint()),
        rule("transform T: X -> -+X^dagger", time.conjugate(big_x), big_x.adjoint().scale_real(-u)),
        rule("transform T: P -> +-P^dagger", time.conjugate(big_p), big_p.adjoint().scale_real(u)),
        rule("transform C: X -> -X", chg.conjugate(big_x), -big_x),
        rule("transform C: P -> -P", chg.conjugate(big_p), -big_p),
        rule("transform P: iI -> iI", par.conjugate(&scalar(I)), scalar(I)),
        rule("transform T: iI -> -iI", time.conjugate(&scalar(I)), scalar(-I)),
        rule("transform C: iI -> iI", chg.conjugate(&scalar(I)), scalar(I)),
    ]
}

pub const PSEUDO_HERMITICITY_TOL: f64 = 1e-9;
pub const ANTILINEAR_SYMMETRY_TOL: f64 = 1e-8;

/// `H† = η H η⁻¹ = P H P⁻¹ = U_T conj(H) U_T⁻¹`, `[C, H] = 0`, `X conj(H) = H X`.
pub fn verify_symmetries(suite: &InvolutionSuite, ops: &OperatorSet, bundle: &MetricBundle, k: usize) -> Vec<Check> {
    let h = &ops.h;
    let h_dag = &ops.h_dag;
    let eta_image = &(&bundle.eta_norm * h) * &bundle.eta_norm_inv;
    let c = &suite.charge.matrix;
    let x = &suite.combined.matrix;
    vec![
        Check::new("symmetry: H^dagger = eta H eta^-1", relative_residual(&eta_image, h_dag, k), PSEUDO_HERMITICITY_TOL),
        Check::new("symmetry: H^dagger = P H P^-1", relative_residual(&suite.parity.conjugate(h), h_dag, k), PSEUDO_HERMITICITY_TOL),
        Check::new(
            "symmetry: H^dagger = U_T conj(H) U_T^-1",
            relative_residual(&suite.time.conjugate(h), h_dag, k),
            ANTILINEAR_SYMMETRY_TOL,
        ),
        Check::new("symmetry: [C, H] = 0", relative_residual(&(c * h), &(h * c), k), EXACT_TOL),
        Check::new(
            "symmetry: U_X conj(H) = H U_X",
            relative_residual(&(x * &h.conj()), &(h * x), k),
            ANTILINEAR_SYMMETRY_TOL,
        ),
    ]
}
