// SPDX-License-Identifier: Apache-2.0

//! Gluing two rays into a line and two intervals into one.
//!
//! The time-simplex integrals are done by [`crate::quadsim`]. A normal
//! derivative `−∂_y K(x, y)|_{y=0}` tends to `−δ(t)` as `x → 0⁺`; at `x = 0`
//! that atom is applied algebraically instead of being integrated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadsim::{conv2, conv_n, Estimate, Profile, TimeFactor};
use crate::{Error, Result};

use super::{
    check_in, check_length, check_time, dk_interval, dk_ray, free_diagonal, interface_two_intervals,
    k_interval, k_line, EvalParams, InterfaceForm, Representation,
};

/// Absolute quadrature tolerance for the gluing integrals.
const QUAD_TOL: f64 = 1e-11;

/// A glued value next to the directly computed kernel it should reproduce.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueValue {
    pub value: f64,
    pub reference: f64,
    pub residual: f64,
    /// Quadrature error estimate.
    pub error: f64,
}

impl GlueValue {
    fn new(value: f64, reference: f64, error: f64) -> Self {
        GlueValue {
            value,
            reference,
            residual: (value - reference).abs(),
            error,
        }
    }
}

fn free_factor() -> TimeFactor {
    TimeFactor::inverse_pow(0.5, free_diagonal).expect("1/2 < 1")
}

fn ray_factor(x: f64) -> Result<TimeFactor> {
    TimeFactor::inverse_pow_gaussian(x * x / 4.0, 1.5, move |t| dk_ray(x, t).unwrap_or(f64::NAN))
}

/// `∫_{t₀+t₁+t₂=t} ∂K(x,·|t₀) (4πt₁)^{-1/2} ∂K(·,y|t₂)` for two half-lines
/// glued at 0, against `K_line − K_ray = (4πt)^{-1/2} e^{-(x+y)²/4t}`.
pub fn glue_rays(x: f64, y: f64, t: f64) -> Result<GlueValue> {
    check_time(t)?;
    if !(x > 0.0) || !(y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("ray gluing needs x, y > 0, got {x}, {y}")));
    }
    let est = conv_n(&[ray_factor(x)?, free_factor(), ray_factor(y)?], t, QUAD_TOL)?;
    let reference = free_diagonal(t) * (-(x + y) * (x + y) / (4.0 * t)).exp();
    Ok(GlueValue::new(est.value, reference, est.error))
}

/// Half-spaces `[0,∞) × ℝ^{n−1}` glued along their boundary: the ray gluing
/// in the first coordinate times the free kernel in the others.
pub fn glue_half_space(x: &[f64], y: &[f64], t: f64) -> Result<GlueValue> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidInput(
            "points must have the same, positive dimension".into(),
        ));
    }
    let ray = glue_rays(x[0], y[0], t)?;
    let mut slice = 1.0;
    for (a, b) in x[1..].iter().zip(&y[1..]) {
        slice *= k_line(*a, *b, t)?;
    }
    let full = x.iter().zip(y).map(|(a, b)| k_line(*a, *b, t)).product::<Result<f64>>()?;
    let dirichlet = {
        let mut k = super::k_ray(x[0], y[0], t)?;
        for (a, b) in x[1..].iter().zip(&y[1..]) {
            k *= k_line(*a, *b, t)?;
        }
        k
    };
    Ok(GlueValue::new(
        ray.value * slice,
        full - dirichlet,
        ray.error * slice,
    ))
}

/// A boundary factor: a density in time, or a multiple of `δ(t)`.
enum Edge {
    Atom(f64),
    Density(TimeFactor),
}

/// `−∂K^{L}(x, 0|t)` as a time factor, `x` measured from the glued end.
fn interval_edge(l: f64, x: f64, p: EvalParams) -> Result<Edge> {
    check_in("x", x, 0.0, l)?;
    if x == 0.0 {
        return Ok(Edge::Atom(-1.0));
    }
    if x >= l {
        return Ok(Edge::Density(TimeFactor::zero()));
    }
    Ok(Edge::Density(TimeFactor::inverse_pow_gaussian(
        x * x / 4.0,
        1.5,
        move |t| {
            dk_interval(l, x, t, Representation::Auto, &p)
                .map(|v| v.value)
                .unwrap_or(f64::NAN)
        },
    )?))
}

/// `edge * f` evaluated at `t`.
fn apply_left(edge: &Edge, f: &TimeFactor, t: f64, tol: f64) -> Result<Estimate> {
    match edge {
        Edge::Atom(c) => Ok(Estimate {
            value: c * f.eval(t),
            error: 0.0,
        }),
        Edge::Density(e) => conv2(e, f, t, tol),
    }
}

/// `f * edge` as a time factor on `(0, t]`, with its L¹ error.
fn apply_right(f: &TimeFactor, edge: &Edge, t: f64, tol: f64) -> Result<(TimeFactor, f64)> {
    match edge {
        Edge::Atom(c) => Ok((f.scaled(*c), 0.0)),
        Edge::Density(e) => {
            let p = Profile::convolve(f, e, t, tol)?;
            Ok((p.to_factor(), p.error))
        }
    }
}

fn glued_reference(l1: f64, l2: f64, x: f64, y: f64, t: f64, p: &EvalParams) -> Result<f64> {
    let l = l1 + l2;
    let glued = k_interval(l, l1 + x, l1 + y, t, Representation::Auto, p)?;
    let side = k_interval(l2, x, y, t, Representation::Auto, p)?;
    Ok(glued.value - side.value)
}

fn check_glue_args(l1: f64, l2: f64, x: f64, y: f64, t: f64) -> Result<()> {
    check_time(t)?;
    check_length(l1)?;
    check_length(l2)?;
    check_in("x", x, 0.0, l2)?;
    check_in("y", y, 0.0, l2)?;
    Ok(())
}

/// First gluing formula for `[0, L₁] ∪ [L₁, L₁+L₂]`, both points on the
/// second interval at distances `x, y` from the gluing point.
/// The reference is `K^{L₁+L₂}(L₁+x, L₁+y) − K^{L₂}(x, y)`.
pub fn glue_intervals_i(l1: f64, l2: f64, x: f64, y: f64, t: f64, p: &EvalParams) -> Result<GlueValue> {
    check_glue_args(l1, l2, x, y, t)?;
    p.validate()?;
    let pc = *p;
    let interface = TimeFactor::inverse_pow(0.5, move |s| {
        interface_two_intervals(l1, l2, s, InterfaceForm::Auto, &pc)
            .map(|v| v.value)
            .unwrap_or(f64::NAN)
    })?;
    let left = interval_edge(l2, x, pc)?;
    let right = interval_edge(l2, y, pc)?;
    let est = match (&left, &right) {
        (Edge::Density(a), Edge::Density(b)) => conv_n(&[a.clone(), interface, b.clone()], t, QUAD_TOL)?,
        _ => {
            let (tail, err) = apply_right(&interface, &right, t, QUAD_TOL)?;
            let mut e = apply_left(&left, &tail, t, QUAD_TOL)?;
            e.error += err;
            e
        }
    };
    let reference = glued_reference(l1, l2, x, y, t, p)?;
    Ok(GlueValue::new(est.value, reference, est.error))
}

/// `Φ^L(t) = Σ_{k≥1} kL e^{-k²L²/t} / (√π t^{3/2})`, the inverse Laplace
/// transform of `(coth mL − 1)/2`. Positive.
pub fn phi(l: f64, t: f64) -> f64 {
    let pre = 1.0 / (PI.sqrt() * t.powf(1.5));
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = k * l * (-k * k * l * l / t).exp();
        sum += term;
        // terms decrease once k²L² > t/2
        if k * k * l * l > 0.5 * t && term <= 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    pre * sum
}

/// Inverse Laplace transform of `m(coth mL − 1)`:
/// `−Σ_{k≥1} (1 − 2k²L²/t) e^{-k²L²/t} / (√π t^{3/2})`. Convolved with
/// `(4πt)^{-1/2}` it gives [`phi`].
pub fn dn_excess(l: f64, t: f64) -> f64 {
    if t > l * l {
        // spectral form: 1/(2√π t^{3/2}) − (2π²/L³) Σ_{n≥1} n² e^{-π²n²t/L²}
        let lead = 0.5 / (PI.sqrt() * t.powf(1.5));
        let beta = PI * PI * t / (l * l);
        let mut sum = 0.0;
        let mut n = 1.0f64;
        loop {
            let term = n * n * (-beta * n * n).exp();
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            n += 1.0;
        }
        return lead - 2.0 * PI * PI / l.powi(3) * sum;
    }
    let pre = -1.0 / (PI.sqrt() * t.powf(1.5));
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let a = k * k * l * l / t;
        let term = (1.0 - 2.0 * a) * (-a).exp();
        sum += term;
        if a > 2.0 && term.abs() <= 1e-17 * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        k += 1.0;
    }
    pre * sum
}

/// `sup_{t>0} (Φ^{L₁} + Φ^{L₂})(t)`, by a log-grid scan refined with golden
/// section search.
pub fn phi_sup(l1: f64, l2: f64) -> f64 {
    let f = |t: f64| phi(l1, t) + phi(l2, t);
    let s = l1.min(l2).powi(2);
    let grid: Vec<f64> = (0..=600).map(|i| s * 10f64.powf(-2.0 + i as f64 / 100.0)).collect();
    let (imax, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, f(t)))
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let (mut a, mut b) = (grid[imax.saturating_sub(1)], grid[(imax + 1).min(grid.len() - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let best = grid.iter().map(|&t| f(t)).fold(f(0.5 * (a + b)), f64::max);
    // guard against the refinement stopping just below the peak
    best * (1.0 + 1e-9)
}

/// Second gluing formula for two intervals: partial sum up to `n_max` of
/// `Σ_n (−1)ⁿ ∂K * Φ^{*n} * (4πt)^{-1/2} * ∂K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueSeries {
    pub value: f64,
    pub reference: f64,
    pub residual: f64,
    /// Bound on `Σ_{n>n_max} |term_n|`.
    pub tail_bound: f64,
    /// Quadrature error estimate.
    pub error: f64,
    /// Unsigned terms `n = 0..=n_max`; the series alternates.
    pub terms: Vec<f64>,
    /// `sup_t Φ(t)` used in the tail bound.
    pub phi_sup: f64,
}

/// `|term_n| ≤ Cⁿ t^{n−1/2} / (2Γ(n+1/2))`: from `Φ^{*n}(s) ≤ Cⁿ s^{n−1}/(n−1)!`,
/// one convolution with `(4πs)^{-1/2}`, and `‖∂K‖_{L¹} ≤ 1` for both ends.
fn series_term_bound(c: f64, t: f64, n: usize) -> f64 {
    use crate::expmix::ln_factorial;
    if n == 0 {
        return f64::INFINITY;
    }
    // Γ(n+1/2) = (2n)! √π / (4ⁿ n!)
    let ln_gamma = ln_factorial(2 * n as u32) + 0.5 * PI.ln() - n as f64 * 4f64.ln() - ln_factorial(n as u32);
    (n as f64 * c.ln() + (n as f64 - 0.5) * t.ln() - ln_gamma).exp() / 2.0
}

fn series_tail(c: f64, t: f64, n_max: usize) -> f64 {
    let mut total = 0.0;
    let mut n = n_max + 1;
    loop {
        let b = series_term_bound(c, t, n);
        total += b;
        if (n as f64) > 2.0 * c * t + 1.0 && b <= 1e-17 * total {
            return total;
        }
        if n > 100_000 {
            return f64::INFINITY;
        }
        n += 1;
    }
}

pub fn glue_intervals_ii(
    l1: f64,
    l2: f64,
    x: f64,
    y: f64,
    t: f64,
    n_max: usize,
    p: &EvalParams,
) -> Result<GlueSeries> {
    check_glue_args(l1, l2, x, y, t)?;
    p.validate()?;
    let tol = QUAD_TOL * 10.0;
    let lmin = l1.min(l2);
    let big_phi = TimeFactor::inverse_pow_gaussian(lmin * lmin, 1.5, move |s| phi(l1, s) + phi(l2, s))?;
    let left = interval_edge(l2, x, *p)?;
    let right = interval_edge(l2, y, *p)?;
    let (mut tail, mut error) = apply_right(&free_factor(), &right, t, tol)?;
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut value = 0.0;
    for n in 0..=n_max {
        let e = apply_left(&left, &tail, t, tol)?;
        error += e.error;
        terms.push(e.value);
        value += if n % 2 == 0 { e.value } else { -e.value };
        if n < n_max {
            let prof = Profile::convolve(&big_phi, &tail, t, tol)?;
            error += prof.error;
            tail = prof.to_factor();
        }
    }
    let c = phi_sup(l1, l2);
    let reference = glued_reference(l1, l2, x, y, t, p)?;
    Ok(GlueSeries {
        value,
        reference,
        residual: (value - reference).abs(),
        tail_bound: series_tail(c, t, n_max),
        error,
        terms,
        phi_sup: c,
    })
}
