// SPDX-License-Identifier: Apache-2.0

//! Cylinders `I × γ` over a circle `γ`, and the Dirichlet-to-Neumann spectrum
//! of a finite cylinder.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::expmix::Neumaier;
use crate::{Error, Result};

use super::{
    check_length, check_time, glue_intervals_i, k_circle, k_interval, spectral_tail, EvalParams,
    Representation,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderCheck {
    /// Largest `|K^{I×γ} − K^I·K^γ|` over the pieces `I₁`, `I₂` and the glued
    /// interval, with `K^{I×γ}` from the two-dimensional eigen-expansion.
    pub factorization_residual: f64,
    /// Largest `|K^{I×γ} − K^{I}·K^γ|` on the glued cylinder.
    pub glued_residual: f64,
    /// Largest `|K^{I×γ} − (K^{I₂} + glue_I)·K^γ|` over point pairs on the
    /// second piece; 0 if there are none.
    pub gluing_residual: f64,
}

/// Cylinder kernel by the double eigenfunction sum over `[0, L] × S¹_{lγ}`.
pub(crate) fn cylinder_kernel(l: f64, lg: f64, x: f64, y: f64, u: f64, v: f64, t: f64, p: &EvalParams) -> Result<f64> {
    let bi = PI * PI * t / (l * l);
    let bc = 4.0 * PI * PI * t / (lg * lg);
    let eps = 1e-3 * p.eps_abs;
    let nk = (1..=p.max_terms)
        .find(|&n| 2.0 / l * spectral_tail(bi, n, 0) < eps)
        .ok_or(Error::Truncation {
            terms: p.max_terms,
            bound: f64::INFINITY,
        })?;
    let nc = (1..=p.max_terms)
        .find(|&n| 2.0 / lg * spectral_tail(bc, n, 0) < eps)
        .ok_or(Error::Truncation {
            terms: p.max_terms,
            bound: f64::INFINITY,
        })?;
    let mut acc = Neumaier::default();
    for k in 1..=nk {
        let w = PI * k as f64 / l;
        let phi = 2.0 / l * (w * x).sin() * (w * y).sin();
        for n in 0..=nc {
            let mult = if n == 0 { 1.0 } else { 2.0 };
            let wc = 2.0 * PI * n as f64 / lg;
            let psi = mult / lg * (wc * (u - v)).cos();
            acc.add((-(bi * (k * k) as f64 + bc * (n * n) as f64)).exp() * phi * psi);
        }
    }
    Ok(acc.total())
}

/// Checks the product structure of cylinder kernels and the interval gluing
/// tensored with the circle. `points` are pairs `(x, y)` in `[0, L₁+L₂]`,
/// `gamma_points` pairs `(u, v)` on the circle.
pub fn cylinder_factorization_check(
    l1: f64,
    l2: f64,
    l_gamma: f64,
    points: &[(f64, f64)],
    gamma_points: &[(f64, f64)],
    t: f64,
    p: &EvalParams,
) -> Result<CylinderCheck> {
    check_time(t)?;
    check_length(l1)?;
    check_length(l2)?;
    check_length(l_gamma)?;
    p.validate()?;
    let l = l1 + l2;
    let auto = Representation::Auto;
    let mut fact: f64 = 0.0;
    let mut glued: f64 = 0.0;
    let mut gluing: f64 = 0.0;
    for &(x, y) in points {
        let kg = k_interval(l, x, y, t, auto, p)?.value;
        let pieces = [(0.0, l1), (l1, l2)]
            .into_iter()
            .filter(|&(a, len)| x >= a && x <= a + len && y >= a && y <= a + len)
            .map(|(a, len)| Ok((a, len, k_interval(len, x - a, y - a, t, auto, p)?.value)))
            .collect::<Result<Vec<_>>>()?;
        let glue = if x >= l1 && y >= l1 {
            Some(glue_intervals_i(l1, l2, x - l1, y - l1, t, p)?.value)
        } else {
            None
        };
        for &(u, v) in gamma_points {
            let kc = k_circle(l_gamma, u, v, t, auto, p)?.value;
            let cyl = cylinder_kernel(l, l_gamma, x, y, u, v, t, p)?;
            glued = glued.max((cyl - kg * kc).abs());
            for &(a, len, ki) in &pieces {
                let side = cylinder_kernel(len, l_gamma, x - a, y - a, u, v, t, p)?;
                fact = fact.max((side - ki * kc).abs());
                if a == l1 {
                    if let Some(g) = glue {
                        gluing = gluing.max((cyl - (ki + g) * kc).abs());
                    }
                }
            }
        }
    }
    Ok(CylinderCheck {
        factorization_residual: fact.max(glued),
        glued_residual: glued,
        gluing_residual: gluing,
    })
}

/// Dirichlet-to-Neumann eigenvalues `λ_k = μ_k coth(Lμ_k)`, `μ_k = √(m² + ω_k)`,
/// at one end of `[0, L] × γ` with Dirichlet condition at the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnSpectrum {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `λ_k − μ_k = 2μ_k / (e^{2Lμ_k} − 1)`, computed without cancellation.
    pub excess: Vec<f64>,
    /// `sup_k |λ_k − μ_k| / m`.
    pub ratio: f64,
}

pub fn dn_cylinder(l: f64, omegas: &[f64], m2: f64) -> Result<DnSpectrum> {
    check_length(l)?;
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::Domain(format!("m² must be positive, got {m2}")));
    }
    if let Some(w) = omegas.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidInput(format!("eigenvalues of γ must be >= 0, got {w}")));
    }
    let m = m2.sqrt();
    let mu: Vec<f64> = omegas.iter().map(|w| (m2 + w).sqrt()).collect();
    let excess: Vec<f64> = mu.iter().map(|&u| 2.0 * u / (2.0 * l * u).exp_m1()).collect();
    let lambda = mu.iter().zip(&excess).map(|(u, e)| u + e).collect();
    let ratio = excess.iter().fold(0.0f64, |a, &e| a.max(e)) / m;
    Ok(DnSpectrum {
        mu,
        lambda,
        excess,
        ratio,
    })
}
