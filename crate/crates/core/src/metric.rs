//! The metric operator, the L² and η inner products, and time evolution.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gauss_hermite, hermite_functions, relative_residual, ComplexMatrix, HermEig, StateVector, I};
use crate::model::{BiorthogonalSystem, ModelParams, OperatorSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InnerProduct {
    #[serde(rename = "L2")]
    L2,
    #[serde(rename = "ETA")]
    Eta,
}

#[derive(Clone, Debug)]
pub struct MetricBundle {
    /// `exp(z*√2·a + z√2·a†)`
    pub eta: ComplexMatrix,
    pub eta_inv: ComplexMatrix,
    /// `c_measured·η`, under which the b-basis is η-orthonormal.
    pub eta_norm: ComplexMatrix,
    pub eta_norm_inv: ComplexMatrix,
    /// `e^{-2|z|²}·η`
    pub eta_tilde: ComplexMatrix,
    pub c_measured: f64,
    /// Mean of the interior diagonal of `basis†·η·basis`.
    pub gram_diagonal_mean: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `eta_norm` against `duals·duals†` on the interior block.
    pub spectral_residual: f64,
}

impl MetricBundle {
    /// `e^{-|z|²}`, the scalar that makes the b-basis exactly η-orthonormal.
    pub fn unit_gram_candidate(params: &ModelParams) -> f64 {
        (-params.z_abs2()).exp()
    }

    /// `e^{-2|z|²}`, the scalar defining `eta_tilde`.
    pub fn tilde_candidate(params: &ModelParams) -> f64 {
        (-2.0 * params.z_abs2()).exp()
    }
}

/// Hermitian generator `z*√2·a + z√2·a†` of the metric.
pub fn metric_generator(params: &ModelParams, ops: &OperatorSet) -> ComplexMatrix {
    &ops.a.scale(params.z_star * SQRT_2) + &ops.a_dag.scale(params.z() * SQRT_2)
}

const GENERATOR_TOL: f64 = 1e-12;

/// Eigen-decomposition of the generator without a dense eigensolver.
///
/// With `D = diag(e^{-in·arg z*})` the generator is `D·(2|z|·x)·D†`. The
/// eigenvalues of the truncated `x` are the Gauss–Hermite nodes of order N
/// and its eigenvectors are the normalized Hermite-function values at those
/// nodes, both of which are available to full relative accuracy. A generic
/// solver loses that accuracy once `e^{max eigenvalue}` is large, which
/// pollutes the interior block of `η` at larger cutoffs.
pub fn generator_eigensystem(params: &ModelParams) -> Result<HermEig> {
    let n = params.cutoff;
    let scale = 2.0 * params.z_abs2().sqrt();
    let phase = params.lambda();
    let nodes = gauss_hermite(n)?.nodes;
    let mut vectors = ComplexMatrix::zeros(n);
    for (j, &x) in nodes.iter().enumerate() {
        let column = hermite_functions(n, x);
        let norm = column.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (m, v) in column.iter().enumerate() {
            vectors.set(m, j, Complex64::from_polar(v / norm, -(m as f64) * phase));
        }
    }
    let values = nodes.iter().map(|x| scale * x).collect();
    Ok(HermEig { values, vectors })
}

pub fn build_metric(params: &ModelParams, ops: &OperatorSet, system: &BiorthogonalSystem) -> Result<MetricBundle> {
    let k = params.interior();
    let eig = generator_eigensystem(params)?;
    let n = params.cutoff;
    if relative_residual(&eig.map(|w| w), &metric_generator(params, ops), n) > GENERATOR_TOL {
        return Err(Error::NoConvergence);
    }
    let min_eigenvalue = eig.values[0].exp();
    let max_eigenvalue = eig.values[eig.values.len() - 1].exp();
    if !(min_eigenvalue > 0.0) || !max_eigenvalue.is_finite() {
        return Err(Error::MetricNotPositive(min_eigenvalue));
    }
    let eta = eig.map(f64::exp);
    let eta_inv = eig.map(|w| (-w).exp());

    let gram = &(&system.basis.adjoint() * &eta) * &system.basis;
    let gram_diagonal_mean = gram.diagonal()[..k].iter().map(|d| d.re).sum::<f64>() / k as f64;
    let c_measured = 1.0 / gram_diagonal_mean;

    let eta_norm = eta.scale_real(c_measured);
    let eta_norm_inv = eta_inv.scale_real(1.0 / c_measured);
    let eta_tilde = eta.scale_real(MetricBundle::tilde_candidate(params));
    let spectral_residual = relative_residual(&eta_norm, &(&system.duals * &system.duals.adjoint()), k);

    Ok(MetricBundle {
        eta,
        eta_inv,
        eta_norm,
        eta_norm_inv,
        eta_tilde,
        c_measured,
        gram_diagonal_mean,
        min_eigenvalue,
        max_eigenvalue,
        spectral_residual,
    })
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `φ†ψ` (L²) or `φ†·η_norm·ψ` (η).
pub fn inner(phi: &StateVector, psi: &StateVector, mode: InnerProduct, bundle: &MetricBundle) -> Result<Complex64> {
    check_dim(phi.dim(), psi.dim())?;
    match mode {
        InnerProduct::L2 => Ok(phi.dot(psi)),
        InnerProduct::Eta => {
            check_dim(bundle.eta_norm.dim(), psi.dim())?;
            Ok(phi.dot(&bundle.eta_norm.apply(psi)))
        }
    }
}

/// `⟨ψ|O ψ⟩ / ⟨ψ|ψ⟩` in the chosen inner product.
pub fn expectation(op: &ComplexMatrix, psi: &StateVector, mode: InnerProduct, bundle: &MetricBundle) -> Result<Complex64> {
    check_dim(op.dim(), psi.dim())?;
    let norm = inner(psi, psi, mode, bundle)?;
    if psi.norm() == 0.0 || norm.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(inner(psi, &op.apply(psi), mode, bundle)? / norm)
}

/// Spectral propagation `ψ_t = Σ_n e^{-iE_n t}·|n⟩_b·(dual_n†·ψ₀)`, unnormalized.
pub fn evolve(psi0: &StateVector, t: f64, system: &BiorthogonalSystem) -> Result<StateVector> {
    if !(t.abs() < 1e4) {
        return Err(Error::TimeOutOfRange(t));
    }
    check_dim(system.dim(), psi0.dim())?;
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let coeffs = system.duals.adjoint().apply(psi0);
    let phased: Vec<Complex64> = coeffs
        .amplitudes()
        .iter()
        .zip(&system.energies)
        .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
        .collect();
    Ok(system.basis.apply(&StateVector::from_amplitudes(phased)))
}

/// Energy of ψ = |1⟩_a under time evolution, in closed form.
///
/// L²: `1 + (1 + 4i|z|² sin t)/(2 + 8|z|²(1 − cos t))`; η: `(3 + 2|z|²)/(2 + 4|z|²)`.
pub fn closed_form_energy(t: f64, z_abs2: f64, mode: InnerProduct) -> Complex64 {
    match mode {
        InnerProduct::L2 => {
            let numer = Complex64::new(1.0, 4.0 * z_abs2 * t.sin());
            let denom = 2.0 + 8.0 * z_abs2 * (1.0 - t.cos());
            Complex64::ONE + numer / denom
        }
        InnerProduct::Eta => Complex64::new((3.0 + 2.0 * z_abs2) / (2.0 + 4.0 * z_abs2), 0.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub l2: Complex64,
    pub eta: Complex64,
    pub l2_closed: Complex64,
    pub eta_closed: Complex64,
}

#[derive(Clone, Debug)]
pub struct EnergyTrajectory {
    pub rows: Vec<TrajectoryRow>,
    pub max_deviation_l2: f64,
    pub max_deviation_eta: f64,
}

/// Uniform grid of `steps` points over `[t_min, t_max]`.
pub fn time_grid(t_min: f64, t_max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![t_min],
        _ => (0..steps).map(|i| t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64).collect(),
    }
}

pub fn default_time_grid() -> Vec<f64> {
    time_grid(0.0, 4.0 * PI, 513)
}

/// Energy expectation of the evolving state |1⟩_a in both inner products,
/// alongside the closed forms.
pub fn energy_trajectory(
    params: &ModelParams,
    ops: &OperatorSet,
    system: &BiorthogonalSystem,
    bundle: &MetricBundle,
    t_grid: &[f64],
) -> Result<EnergyTrajectory> {
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams("time grid must be finite".into()));
    }
    let psi0 = StateVector::basis(params.cutoff, 1);
    let z_abs2 = params.z_abs2();
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let psi = evolve(&psi0, t, system)?;
            Ok(TrajectoryRow {
                t,
                l2: expectation(&ops.h, &psi, InnerProduct::L2, bundle)?,
                eta: expectation(&ops.h, &psi, InnerProduct::Eta, bundle)?,
                l2_closed: closed_form_energy(t, z_abs2, InnerProduct::L2),
                eta_closed: closed_form_energy(t, z_abs2, InnerProduct::Eta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation_l2 = rows.iter().map(|r| (r.l2 - r.l2_closed).norm()).fold(0.0, f64::max);
    let max_deviation_eta = rows.iter().map(|r| (r.eta - r.eta_closed).norm()).fold(0.0, f64::max);
    Ok(EnergyTrajectory { rows, max_deviation_l2, max_deviation_eta })
}

/// `e^{-iHt}` by scaling and squaring, the cross-check for [`evolve`].
pub fn propagator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    crate::linalg::mat_exp(&h.scale(-I * t))
}
