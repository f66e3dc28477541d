//! Runs every module invariant for one parameter set and assembles the
//! versioned JSON report.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::involutions::{build_suite, verify_involutions, verify_symmetries, verify_transformations, InvolutionSuite, NormalizationReport};
use crate::linalg::{general_eigenvalues, relative_residual, ComplexMatrix, StateVector};
use crate::metric::{build_metric, default_time_grid, energy_trajectory, evolve, propagator, MetricBundle};
use crate::model::{b_basis, build_operators, overlap_formula, overlap_formula_unweighted, BiorthogonalSystem, Branch, ModelParams, OperatorSet};
use crate::position::{default_grid, density, position_decomposition, uncertainties, Representation};
use crate::report::{all_pass, fixed, Check};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything derived from one parameter set.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: ModelParams,
    pub ops: OperatorSet,
    pub system: BiorthogonalSystem,
    pub bundle: MetricBundle,
    pub suite: InvolutionSuite,
}

impl Model {
    pub fn build(params: ModelParams) -> Result<Self> {
        params.require_branch()?;
        let ops = build_operators(&params)?;
        let system = BiorthogonalSystem::build(&params)?;
        let bundle = build_metric(&params, &ops, &system)?;
        let suite = build_suite(&params, &system, &bundle)?;
        Ok(Self { params, ops, system, bundle, suite })
    }

    pub fn dim(&self) -> usize {
        self.params.cutoff
    }
}

/// Largest `|E_n − (n + ½)|` over the first `k` sorted eigenvalues of a
/// general complex eigensolver applied to H.
pub fn eigensolver_deviation(h: &ComplexMatrix, k: usize) -> Result<f64> {
    let values = general_eigenvalues(h)?;
    Ok(values.iter().take(k).enumerate().map(|(n, e)| (e - Complex64::new(n as f64 + 0.5, 0.0)).norm()).fold(0.0, f64::max))
}

/// `max_n |b_n − (b♯)ⁿ|0⟩/√n!|`, relative to each column's size.
pub fn raising_deviation(model: &Model, levels: usize) -> f64 {
    let basis = &model.system.basis;
    let mut state = StateVector::basis(model.dim(), 0);
    let mut worst: f64 = 0.0;
    for n in 0..levels.min(model.dim()) {
        let col = basis.column(n);
        worst = worst.max(state.max_abs_diff(&col) / col.norm().max(1.0));
        state = model.ops.b_sharp.apply(&state).scale(Complex64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0));
    }
    worst
}

/// `(corrected, unweighted)` worst relative deviations of the overlap series
/// from direct inner products of basis columns, `m, n < levels`.
pub fn overlap_deviation(params: &ModelParams, levels: usize) -> Result<(f64, f64)> {
    let basis = b_basis(params)?;
    let (mut weighted, mut unweighted) = (0.0f64, 0.0f64);
    for m in 0..levels {
        for n in 0..levels {
            let direct = basis.column(m).dot(&basis.column(n));
            let scale = direct.norm().max(1.0);
            weighted = weighted.max((overlap_formula(m, n, params) - direct).norm() / scale);
            unweighted = unweighted.max((overlap_formula_unweighted(m, n, params) - direct).norm() / scale);
        }
    }
    Ok((weighted, unweighted))
}

/// Worst relative deviation of the interior Gram diagonal `basis†·η·basis`
/// from `e^{|z|²}`.
pub fn gram_diagonal_deviation(model: &Model, k: usize) -> f64 {
    let basis = &model.system.basis;
    let gram = &(&basis.adjoint() * &model.bundle.eta) * basis;
    let expected = model.params.z_abs2().exp();
    gram.diagonal()[..k].iter().map(|d| (d - expected).norm() / expected).fold(0.0, f64::max)
}

pub fn model_checks(model: &Model, k: usize) -> Result<Vec<Check>> {
    let h = &model.ops.h;
    let diag_error = h.diagonal().iter().enumerate().map(|(n, d)| (d - Complex64::new(n as f64 + 0.5, 0.0)).norm()).fold(0.0, f64::max);
    let (overlap, _) = overlap_deviation(&model.params, 12.min(k))?;
    Ok(vec![
        Check::flag("spectrum: H is upper triangular", h.is_upper_triangular()),
        Check::new("spectrum: diagonal equals n + 1/2", diag_error, 0.0),
        Check::new("spectrum: eigensolver agrees on interior levels", eigensolver_deviation(h, k)?, 1e-8),
        Check::new("basis: columns equal normalized repeated raising", raising_deviation(model, 32.min(k)), 1e-12),
        Check::new("basis: overlap series matches direct inner products", overlap, 1e-10),
        Check::new("basis: H basis = basis diag(E)", model.system.right_residual(h, k), 1e-10),
        Check::new("basis: H^dagger duals = duals diag(E)", model.system.left_residual(&model.ops.h_dag, k), 1e-10),
        Check::new("basis: duals^dagger basis = I", model.system.biorthonormality_residual(), 1e-10),
        Check::new("operators: H equals its (X, P) form", model.ops.xp_discrepancy, 1e-12),
    ])
}

pub fn metric_checks(model: &Model, k: usize, t_grid: &[f64]) -> Result<Vec<Check>> {
    let n = model.dim();
    let bundle = &model.bundle;
    let basis = &model.system.basis;
    let ident = ComplexMatrix::identity(n);
    let gram_norm = &(&basis.adjoint() * &bundle.eta_norm) * basis;
    let trajectory = energy_trajectory(&model.params, &model.ops, &model.system, bundle, t_grid)?;
    let psi0 = StateVector::basis(n, 1);
    let t = 1.3;
    let spectral = evolve(&psi0, t, &model.system)?;
    let direct = propagator(&model.ops.h, t)?.apply(&psi0);
    let keep = |v: &StateVector| StateVector::from_amplitudes(v.amplitudes()[..k].to_vec());
    Ok(vec![
        Check::new("metric: basis^dagger eta_norm basis = I", relative_residual(&gram_norm, &ident, k), 1e-9),
        Check::new("metric: basis^dagger eta basis diagonal = e^{|z|^2}", gram_diagonal_deviation(model, k), 1e-8),
        Check::flag("metric: eta positive definite", bundle.min_eigenvalue > 0.0),
        Check::new("metric: eta Hermitian", relative_residual(&bundle.eta, &bundle.eta.adjoint(), n), 1e-12),
        Check::new("metric: eta eta^-1 = I", relative_residual(&(&bundle.eta * &bundle.eta_inv), &ident, k), 1e-10),
        Check::new("metric: eta_norm = duals duals^dagger", bundle.spectral_residual, 1e-9),
        Check::new("evolution: spectral sum matches e^{-iHt}", keep(&spectral).max_abs_diff(&keep(&direct)), 1e-9),
        Check::new("evolution: L2 energy matches closed form", trajectory.max_deviation_l2, 1e-8),
        Check::new("evolution: eta energy matches closed form", trajectory.max_deviation_eta, 1e-9),
    ])
}

pub fn involution_checks(model: &Model, k: usize) -> Vec<Check> {
    let mut checks = verify_involutions(&model.suite, k);
    checks.extend(verify_transformations(&model.suite, &model.ops, &model.params, k));
    checks.extend(verify_symmetries(&model.suite, &model.ops, &model.bundle, k));
    checks
}

/// Deterministic probe states: the first a-levels, a b-level and a mixture.
pub fn probe_states(model: &Model, k: usize) -> Vec<StateVector> {
    let n = model.dim();
    let mut states: Vec<StateVector> = (0..4.min(k)).map(|level| StateVector::basis(n, level)).collect();
    states.push(model.system.basis.column(3.min(k - 1)));
    let mut mix = vec![Complex64::ZERO; n];
    for (level, amp) in mix.iter_mut().take(6.min(k)).enumerate() {
        *amp = Complex64::from_polar(1.0 / (level + 1) as f64, 0.7 * level as f64);
    }
    states.push(StateVector::from_amplitudes(mix));
    states
}

pub fn position_checks(model: &Model, k: usize) -> Result<Vec<Check>> {
    let n = model.dim();
    let (params, ops, bundle, system) = (&model.params, &model.ops, &model.bundle, &model.system);
    let grid = default_grid();
    let e1 = StateVector::basis(n, 1);
    let pseudo_total = density(&e1, Representation::PseudoPosition, &grid, system, bundle)?.total;
    let plain_total = density(&e1, Representation::Position, &grid, system, bundle)?.total;
    let vacuum = system.basis.column(0);
    let profile = density(&vacuum, Representation::PseudoPosition, &grid, system, bundle)?;
    let gaussian = profile.grid.iter().zip(&profile.values).map(|(x, v)| (v - (-x * x).exp() / PI.sqrt()).abs()).fold(0.0, f64::max);
    let vac = uncertainties(&vacuum, ops, bundle)?;

    let (mut im_x, mut im_p, mut route, mut bound, mut imag_var) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for psi in probe_states(model, k) {
        let d = position_decomposition(&psi, ops, bundle, params)?;
        im_x = im_x.max(d.im_x_deviation(params));
        im_p = im_p.max(d.im_p_deviation(params));
        route = route.max(d.x_route_residual).max(d.p_route_residual).max(d.pseudo_imaginary);
        let u = uncertainties(&psi, ops, bundle)?;
        bound = bound.max(0.5 - u.product);
        imag_var = imag_var.max(u.var_x.im.abs()).max(u.var_p.im.abs());
    }
    Ok(vec![
        Check::new("density: X-space total is 1", (pseudo_total - 1.0).abs(), 1e-6),
        Check::new("density: x-space total is 1", (plain_total - 1.0).abs(), 1e-6),
        Check::new("density: b-vacuum X-profile is Gaussian", gaussian, 1e-9),
        Check::new("position: Im<x>_eta = Im(z*)", im_x, 1e-8),
        Check::new("position: Im<p>_eta = Re(z*)", im_p, 1e-8),
        Check::new("position: <x>, <p> match the (X, P) route", route, 1e-9),
        Check::new("uncertainty: b-vacuum dx = 1/sqrt2", (vac.dx - FRAC_1_SQRT_2).abs(), 1e-9),
        Check::new("uncertainty: b-vacuum dp = 1/sqrt2", (vac.dp - FRAC_1_SQRT_2).abs(), 1e-9),
        Check::new("uncertainty: dx dp >= 1/2", bound.max(0.0), 1e-9),
        Check::new("uncertainty: variances are real", imag_var, 1e-9),
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct ParameterSummary {
    #[serde(serialize_with = "fixed")]
    pub z_star_re: f64,
    #[serde(serialize_with = "fixed")]
    pub z_star_im: f64,
    #[serde(serialize_with = "fixed")]
    pub theta: f64,
    pub cutoff: usize,
    pub margin: usize,
    pub interior: usize,
    pub branch: Branch,
}

impl ParameterSummary {
    pub fn new(params: &ModelParams, branch: Branch) -> Self {
        Self {
            z_star_re: params.z_star.re,
            z_star_im: params.z_star.im,
            theta: params.theta,
            cutoff: params.cutoff,
            margin: params.margin,
            interior: params.interior(),
            branch,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    #[serde(serialize_with = "fixed")]
    pub c_measured: f64,
    #[serde(serialize_with = "fixed")]
    pub gram_diagonal_mean: f64,
    /// `e^{|z|²}`
    #[serde(serialize_with = "fixed")]
    pub gram_diagonal_expected: f64,
    /// Worst deviation of the overlap series without 2^{-k} weights.
    #[serde(serialize_with = "fixed")]
    pub unweighted_overlap_deviation: f64,
    pub involutions: NormalizationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub command: &'static str,
    pub parameters: ParameterSummary,
    pub checks: Vec<Check>,
    pub calibration: Calibration,
    pub notes: Vec<String>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

pub fn verify_model(model: &Model, k: usize) -> Result<Vec<Check>> {
    let mut checks = model_checks(model, k)?;
    checks.extend(metric_checks(model, k, &default_time_grid())?);
    checks.extend(involution_checks(model, k));
    checks.extend(position_checks(model, k)?);
    Ok(checks)
}

pub fn verify_all(params: &ModelParams) -> Result<VerificationReport> {
    let model = Model::build(params.clone())?;
    let k = params.interior();
    let checks = verify_model(&model, k)?;
    let (_, unweighted) = overlap_deviation(params, 12.min(k))?;
    let normalization = &model.suite.normalization;
    let notes = vec![
        format!(
            "P^2 and T T calibrate to gamma = {} (e^{{2|z|^2}} = {}); the eta scale making P an exact involution is {}, against the e^{{-2|z|^2}} candidate {}",
            normalization.parity_gamma,
            (2.0 * params.z_abs2()).exp(),
            normalization.involutive_metric_scale,
            normalization.tilde_candidate,
        ),
        "overlap series uses 2^-k weights on each term; the unweighted variant is reported under calibration".to_owned(),
        "PT-combined rules act on the position operator x (written q in some conventions)".to_owned(),
        "Im<x>_eta = Im(z*) is the stated identity; Im<p>_eta = Re(z*) is its derived momentum counterpart".to_owned(),
    ];
    Ok(VerificationReport {
        schema: SCHEMA_VERSION,
        command: "verify",
        parameters: ParameterSummary::new(params, model.suite.branch),
        all_pass: all_pass(&checks),
        checks,
        calibration: Calibration {
            c_measured: model.bundle.c_measured,
            gram_diagonal_mean: model.bundle.gram_diagonal_mean,
            gram_diagonal_expected: params.z_abs2().exp(),
            unweighted_overlap_deviation: unweighted,
            involutions: normalization.clone(),
        },
        notes,
    })
}
