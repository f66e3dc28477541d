//! Gauss–Hermite quadrature for the weight `e^{-x²}` on the real line.
//!
//! Nodes come from the Golub–Welsch eigenvalue problem and are then polished
//! by Newton steps on the orthonormal Hermite recurrence. Weights use the
//! Christoffel form `1 / (K·p_{K−1}(x)²)`, which keeps full relative accuracy
//! even for the tiny weights at the outermost nodes.

use num_complex::Complex64;

use super::{herm_eig, ComplexMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    /// Weights against `e^{-x²}`.
    pub weights: Vec<f64>,
    /// `weights[i]·e^{x_i²}`, for integrating `f` directly over ℝ.
    pub scaled_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫ f(x) e^{-x²} dx
    pub fn integrate_weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// ∫ f(x) dx, exact when `f·e^{x²}` is a polynomial of degree ≤ 2K − 1.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.scaled_weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::EmptyQuadrature);
    }
    let jacobi = ComplexMatrix::from_fn(order, |i, j| {
        if i + 1 == j || j + 1 == i {
            Complex64::new((i.max(j) as f64 / 2.0).sqrt(), 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let mut nodes = herm_eig(&jacobi)?.values;

    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (p_prev, p_k) = orthonormal_pair(order, *x);
            let step = p_k / ((2.0 * order as f64).sqrt() * p_prev);
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
    }
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let mag = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -mag;
        nodes[j] = mag;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }

    let scaled_weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let psi = hermite_function(order - 1, x);
            1.0 / (order as f64 * psi * psi)
        })
        .collect();
    let weights = nodes.iter().zip(&scaled_weights).map(|(&x, &w)| w * (-x * x).exp()).collect();
    Ok(QuadratureRule { nodes, weights, scaled_weights })
}

/// `(p_{K−1}(x), p_K(x))` for polynomials orthonormal against `e^{-x²}`.
fn orthonormal_pair(order: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for k in 0..order {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// `ψ_n(x) = e^{-x²/2} H_n(x) / √(2ⁿ n! √π)` via the orthonormal recurrence,
/// which stays finite where `H_n` alone would overflow.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    hermite_functions(n + 1, x)[n]
}

/// `[ψ_0(x), …, ψ_{count−1}(x)]`
pub fn hermite_functions(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if count > 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}
