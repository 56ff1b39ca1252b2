// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use clap::ValueEnum;
use heatglue::heat1d::{
    cut_circle_to_arc, cylinder_factorization_check, dn_cylinder, glue_intervals_i, glue_intervals_ii, glue_rays,
    EvalParams,
};
use serde_json::json;

use crate::error::CliError;
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    #[value(name = "I")]
    First,
    #[value(name = "II")]
    Second,
}

/// One interval gluing evaluation. The bound is the quadrature error estimate,
/// plus the series tail bound for the second formula. A supplied reference
/// replaces the computed one.
#[allow(clippy::too_many_arguments)]
pub fn interval_glue(
    l1: f64,
    l2: f64,
    x: f64,
    y: f64,
    t: f64,
    formula: Formula,
    n_max: usize,
    reference: Option<f64>,
    tol: f64,
) -> Result<Report, CliError> {
    let p = EvalParams::default();
    let (tag, value, computed, bound) = match formula {
        Formula::First => {
            let g = glue_intervals_i(l1, l2, x, y, t, &p)?;
            ("I", g.value, g.reference, g.error)
        }
        Formula::Second => {
            let g = glue_intervals_ii(l1, l2, x, y, t, n_max, &p)?;
            ("II", g.value, g.reference, g.tail_bound + g.error)
        }
    };
    let mut inputs = json!({"L1": l1, "L2": l2, "x": x, "y": y, "t": t, "formula": tag});
    if formula == Formula::Second {
        inputs["nmax"] = json!(n_max);
    }
    Ok(Report::new(
        format!("interval-{tag}"),
        inputs,
        value,
        reference.unwrap_or(computed),
        bound,
        tol,
    ))
}

pub fn ray_glue(x: f64, y: f64, t: f64, tol: f64) -> Result<Report, CliError> {
    let g = glue_rays(x, y, t)?;
    Ok(Report::new(
        "ray",
        json!({"x": x, "y": y, "t": t}),
        g.value,
        g.reference,
        g.error,
        tol,
    ))
}

/// The bound is the magnitude of the last included term: the series alternates
/// with decreasing terms, so the remainder is smaller than the next term.
#[allow(clippy::too_many_arguments)]
pub fn circle_cut(l: f64, cuts: (f64, f64), x: f64, y: f64, t: f64, k_max: usize, tol: f64) -> Result<Report, CliError> {
    let c = cut_circle_to_arc(l, cuts, x, y, t, k_max, &EvalParams::default())?;
    let last = c.terms.last().copied().unwrap_or(0.0).abs();
    Ok(Report::new(
        "circle",
        json!({"L": l, "cuts": [cuts.0, cuts.1], "x": x, "y": y, "t": t, "kmax": k_max}),
        c.value,
        c.reference,
        last + c.error,
        tol,
    ))
}

/// Point pairs on a grid strictly inside `[0, L₁+L₂]`, including pairs on
/// the second piece.
pub fn cylinder_points(l1: f64, l2: f64) -> Vec<(f64, f64)> {
    let xs = [0.2 * l1, 0.7 * l1, l1 + 0.3 * l2, l1 + 0.8 * l2];
    xs.iter().flat_map(|&x| xs.iter().map(move |&y| (x, y))).collect()
}

pub fn cylinder_check(
    l1: f64,
    l2: f64,
    l_gamma: f64,
    t: f64,
    points: &[(f64, f64)],
    gamma_points: &[(f64, f64)],
    tol: f64,
) -> Result<Vec<Report>, CliError> {
    let c = cylinder_factorization_check(l1, l2, l_gamma, points, gamma_points, t, &EvalParams::default())?;
    let inputs = json!({"L1": l1, "L2": l2, "Lgamma": l_gamma, "t": t, "points": points.len(), "gamma_points": gamma_points.len()});
    Ok([
        ("cylinder-factorization", c.factorization_residual),
        ("cylinder-gluing", c.gluing_residual),
    ]
    .into_iter()
    .map(|(name, r)| Report::new(name, inputs.clone(), r, 0.0, 0.0, tol))
    .collect())
}

/// `λ_k − μ_k` at one end of `[0, L] × γ` for the circle `γ` of circumference
/// `l_gamma`, against `2μ_k e^{−2Lμ_k}`. The relative residual is bounded by
/// `e^{−2Lμ_k}/(1 − e^{−2Lμ_k})`.
pub fn dn(l: f64, m2: f64, k_max: usize, l_gamma: f64, tol: f64) -> Result<Vec<Report>, CliError> {
    if !(l_gamma > 0.0) || !l_gamma.is_finite() {
        return Err(CliError::Input(format!("circumference must be positive, got {l_gamma}")));
    }
    let omegas: Vec<f64> = (0..=k_max).map(|k| (2.0 * PI * k as f64 / l_gamma).powi(2)).collect();
    let s = dn_cylinder(l, &omegas, m2)?;
    let mut out = Vec::with_capacity(omegas.len());
    for (k, (&mu, &excess)) in s.mu.iter().zip(&s.excess).enumerate() {
        let e = (-2.0 * l * mu).exp();
        let asymptotic = 2.0 * mu * e;
        let residual = if asymptotic > 0.0 {
            (excess / asymptotic - 1.0).abs()
        } else if excess == 0.0 {
            // both underflow
            0.0
        } else {
            f64::INFINITY
        };
        let bound = e / (1.0 - e) * (1.0 + 1e-9);
        out.push(Report::with_residual(
            format!("dn:{k}"),
            json!({"L": l, "m2": m2, "k": k, "Lgamma": l_gamma, "muL": mu * l}),
            excess,
            asymptotic,
            residual,
            bound,
            tol,
        ));
    }
    Ok(out)
}
