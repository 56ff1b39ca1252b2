// SPDX-License-Identifier: Apache-2.0

//! Heat kernels in one dimension and the gluing and cutting identities they
//! satisfy.
//!
//! Periodic and Dirichlet kernels come in two dual forms: a sum over image
//! charges, which converges fast for small `t`, and an eigenfunction
//! expansion, which converges fast for large `t`. Every truncated series
//! returns a [`Truncated`] value carrying a rigorous bound on the omitted
//! terms.

mod cut;
mod cylinder;
mod glue;


use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::expmix::Neumaier;
use crate::{Error, Result};

pub use cut::{cut_circle_contributions, cut_circle_to_arc, CircleCut};
pub use cylinder::{cylinder_factorization_check, dn_cylinder, CylinderCheck, DnSpectrum};
pub use glue::{
    dn_excess, glue_half_space, glue_intervals_i, glue_intervals_ii, glue_rays, phi, phi_sup,
    GlueSeries, GlueValue,
};

/// Truncation controls for the series evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Stop once the bound on the omitted terms is below `eps_abs / 2`.
    pub eps_abs: f64,
    pub max_terms: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            eps_abs: 1e-15,
            max_terms: 100_000,
        }
    }
}

impl EvalParams {
    pub fn new(eps_abs: f64, max_terms: usize) -> Result<Self> {
        let p = EvalParams { eps_abs, max_terms };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_abs >= 1e-15) || !self.eps_abs.is_finite() {
            return Err(Error::InvalidInput(format!(
                "eps_abs must be a finite number >= 1e-15, got {}",
                self.eps_abs
            )));
        }
        if self.max_terms == 0 || self.max_terms > 1_000_000 {
            return Err(Error::InvalidInput(format!(
                "max_terms must lie in 1..=1000000, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

/// A truncated series value and a bound on what was left out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    pub bound: f64,
    pub terms: usize,
}

impl Truncated {
    fn exact(value: f64) -> Self {
        Truncated {
            value,
            bound: 0.0,
            terms: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Images,
    Spectral,
    /// Images for `t` below the crossover `ℓ²/π` (`ℓ` the interval length, or
    /// half the circumference), spectral above.
    Auto,
}

impl Representation {
    fn resolve(self, half_period: f64, t: f64) -> Representation {
        match self {
            Representation::Auto if t < half_period * half_period / PI => Representation::Images,
            Representation::Auto => Representation::Spectral,
            r => r,
        }
    }
}

/// Two-interval interface kernel forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterfaceForm {
    /// Sum over the poles of the inverse Dirichlet-to-Neumann symbol.
    Residues,
    /// Gaussian sum obtained by Poisson resummation.
    Poisson,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "length")]
pub enum Geometry {
    Line,
    /// `[0, ∞)` with Dirichlet condition at 0.
    Ray,
    /// `[0, L]` with Dirichlet conditions at both ends.
    Interval(f64),
    /// Circle of circumference `L`.
    Circle(f64),
}

/// A one-dimensional heat kernel with a chosen representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel1D {
    pub geometry: Geometry,
    pub representation: Representation,
}

impl Kernel1D {
    pub fn new(geometry: Geometry, representation: Representation) -> Result<Self> {
        match geometry {
            Geometry::Interval(l) | Geometry::Circle(l) if !(l > 0.0) || !l.is_finite() => {
                Err(Error::InvalidInput(format!("length must be positive, got {l}")))
            }
            _ => Ok(Kernel1D {
                geometry,
                representation,
            }),
        }
    }

    pub fn value(&self, x: f64, y: f64, t: f64, p: &EvalParams) -> Result<Truncated> {
        match self.geometry {
            Geometry::Line => k_line(x, y, t).map(Truncated::exact),
            Geometry::Ray => k_ray(x, y, t).map(Truncated::exact),
            Geometry::Interval(l) => k_interval(l, x, y, t, self.representation, p),
            Geometry::Circle(l) => k_circle(l, x, y, t, self.representation, p),
        }
    }

    /// Outward normal derivative in the second argument at the boundary
    /// point 0.
    pub fn normal_derivative(&self, x: f64, t: f64, p: &EvalParams) -> Result<Truncated> {
        match self.geometry {
            Geometry::Ray => dk_ray(x, t).map(Truncated::exact),
            Geometry::Interval(l) => dk_interval(l, x, t, self.representation, p),
            Geometry::Line | Geometry::Circle(_) => Err(Error::InvalidInput(
                "line and circle have no boundary".into(),
            )),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")))
    }
}

fn check_in(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    let slack = 1e-12 * (1.0 + hi.abs());
    if v >= lo - slack && v <= hi + slack {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

fn gauss(z: f64, t: f64) -> f64 {
    (-z * z / (4.0 * t)).exp()
}

/// `(4πt)^{-1/2}`, the free kernel on the diagonal.
pub fn free_diagonal(t: f64) -> f64 {
    1.0 / (4.0 * PI * t).sqrt()
}

pub fn k_line(x: f64, y: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(free_diagonal(t) * gauss(x - y, t))
}

/// Dirichlet kernel on `[0, ∞)` by one image charge.
pub fn k_ray(x: f64, y: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if x < 0.0 || y < 0.0 {
        return Err(Error::Domain(format!("ray points must be >= 0, got {x}, {y}")));
    }
    // e^{-(x-y)²/4t} - e^{-(x+y)²/4t} = e^{-(x-y)²/4t}(1 - e^{-xy/t})
    Ok(free_diagonal(t) * gauss(x - y, t) * -(-x * y / t).exp_m1())
}

/// `-∂_y k_ray(x, y, t)` at `y = 0`.
pub fn dk_ray(x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if x < 0.0 {
        return Err(Error::Domain(format!("ray point must be >= 0, got {x}")));
    }
    Ok(-x * gauss(x, t) / (2.0 * PI.sqrt() * t.powf(1.5)))
}

/// `Σ_{|j|≥k+1} e^{-γ z_j²}` over a lattice `z_j = a + j·s` with `|a| ≤ s`,
/// given `g = γ s²` and `k ≥ 1`: since `|z_j| ≥ (|j|−1)s`, it is at most
/// `2 Σ_{i≥k} e^{-g i²}`.
fn lattice_tail(g: f64, k: usize) -> f64 {
    let k = k as f64;
    let r = (-g * (2.0 * k + 1.0)).exp();
    if r >= 1.0 {
        return f64::INFINITY;
    }
    2.0 * (-g * k * k).exp() / (1.0 - r)
}

/// `Σ_{k>n} k^p e^{-β k²}`, dominated by a geometric series once the term
/// ratio drops below 1.
fn spectral_tail(beta: f64, n: usize, p: i32) -> f64 {
    let n1 = (n + 1) as f64;
    let r = ((n1 + 1.0) / n1).powi(p) * (-beta * (2.0 * n1 + 1.0)).exp();
    if r >= 1.0 {
        return f64::INFINITY;
    }
    n1.powi(p) * (-beta * n1 * n1).exp() / (1.0 - r)
}

/// Sums `term(0) + Σ_{k≥1} (term(k) + term(−k))` until `tail(k)`, a bound on
/// the terms with `|j| > k`, drops below `eps/2`.
fn image_sum(
    term: impl Fn(i64) -> f64,
    tail: impl Fn(usize) -> f64,
    p: &EvalParams,
) -> Result<Truncated> {
    let mut acc = Neumaier::default();
    acc.add(term(0));
    let mut k = 1usize;
    loop {
        acc.add(term(k as i64));
        acc.add(term(-(k as i64)));
        let bound = tail(k);
        let terms = 2 * k + 1;
        if bound < 0.5 * p.eps_abs {
            return Ok(Truncated {
                value: acc.total(),
                bound,
                terms,
            });
        }
        if terms + 2 > p.max_terms {
            return Err(Error::Truncation { terms, bound });
        }
        k += 1;
    }
}

/// Sums `Σ_{k≥1} term(k)` until `tail(n)` bounds the rest below `eps/2`.
fn spectral_sum(
    term: impl Fn(usize) -> f64,
    tail: impl Fn(usize) -> f64,
    p: &EvalParams,
) -> Result<Truncated> {
    let mut acc = Neumaier::default();
    let mut n = 0usize;
    loop {
        n += 1;
        acc.add(term(n));
        let bound = tail(n);
        if bound < 0.5 * p.eps_abs {
            return Ok(Truncated {
                value: acc.total(),
                bound,
                terms: n,
            });
        }
        if n >= p.max_terms {
            return Err(Error::Truncation { terms: n, bound });
        }
    }
}

/// Dirichlet kernel on `[0, L]`.
pub fn k_interval(
    l: f64,
    x: f64,
    y: f64,
    t: f64,
    rep: Representation,
    p: &EvalParams,
) -> Result<Truncated> {
    check_time(t)?;
    check_length(l)?;
    check_in("x", x, 0.0, l)?;
    check_in("y", y, 0.0, l)?;
    p.validate()?;
    match rep.resolve(l, t) {
        Representation::Images => {
            let pre = free_diagonal(t);
            image_sum(
                |k| {
                    let s = 2.0 * k as f64 * l;
                    pre * (gauss(x - y + s, t) - gauss(x + y + s, t))
                },
                |k| 2.0 * pre * lattice_tail(l * l / t, k),
                p,
            )
        }
        _ => {
            let beta = PI * PI * t / (l * l);
            spectral_sum(
                |k| {
                    let w = PI * k as f64 / l;
                    2.0 / l * (-beta * (k * k) as f64).exp() * (w * x).sin() * (w * y).sin()
                },
                |n| 2.0 / l * spectral_tail(beta, n, 0),
                p,
            )
        }
    }
}

/// `-∂_y K^L(x, y, t)` at `y = 0`.
pub fn dk_interval(l: f64, x: f64, t: f64, rep: Representation, p: &EvalParams) -> Result<Truncated> {
    check_time(t)?;
    check_length(l)?;
    check_in("x", x, 0.0, l)?;
    p.validate()?;
    match rep.resolve(l, t) {
        Representation::Images => {
            let pre = -1.0 / ((4.0 * PI).sqrt() * t.powf(1.5));
            // |z| e^{-z²/4t} ≤ √(4t/e) e^{-z²/8t}
            let envelope = (4.0 * t / std::f64::consts::E).sqrt();
            image_sum(
                |k| {
                    let z = x + 2.0 * k as f64 * l;
                    pre * z * gauss(z, t)
                },
                |k| -pre * envelope * lattice_tail(l * l / (2.0 * t), k),
                p,
            )
        }
        _ => {
            let beta = PI * PI * t / (l * l);
            spectral_sum(
                |k| {
                    let w = PI * k as f64 / l;
                    -2.0 / l * (-beta * (k * k) as f64).exp() * w * (w * x).sin()
                },
                |n| 2.0 * PI / (l * l) * spectral_tail(beta, n, 1),
                p,
            )
        }
    }
}

fn check_length(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("length must be positive, got {l}")))
    }
}

/// Signed offset `u − v` reduced to `[−L/2, L/2]`.
pub(crate) fn circle_offset(l: f64, u: f64, v: f64) -> f64 {
    let d = (u - v).rem_euclid(l);
    if d > 0.5 * l {
        d - l
    } else {
        d
    }
}

/// Heat kernel on the circle of circumference `L` (theta series).
pub fn k_circle(l: f64, u: f64, v: f64, t: f64, rep: Representation, p: &EvalParams) -> Result<Truncated> {
    circle_series(l, circle_offset(l, u, v), t, rep, CircleTerm::Kernel, p)
}

/// `∂_t` of the circle kernel.
pub fn k_circle_dt(l: f64, u: f64, v: f64, t: f64, rep: Representation, p: &EvalParams) -> Result<Truncated> {
    circle_series(l, circle_offset(l, u, v), t, rep, CircleTerm::TimeDerivative, p)
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum CircleTerm {
    Kernel,
    TimeDerivative,
    /// Time derivative with the direct (zero-winding) Gaussian removed.
    TimeDerivativeWithoutDirect,
}

pub(crate) fn circle_series(
    l: f64,
    d: f64,
    t: f64,
    rep: Representation,
    what: CircleTerm,
    p: &EvalParams,
) -> Result<Truncated> {
    check_time(t)?;
    check_length(l)?;
    p.validate()?;
    let deriv = matches!(what, CircleTerm::TimeDerivative | CircleTerm::TimeDerivativeWithoutDirect);
    let skip_direct = what == CircleTerm::TimeDerivativeWithoutDirect;
    let pre = free_diagonal(t);
    match rep.resolve(0.5 * l, t) {
        Representation::Images => {
            let image = |z: f64| {
                let g = gauss(z, t);
                if deriv {
                    pre * g * (z * z / (4.0 * t * t) - 0.5 / t)
                } else {
                    pre * g
                }
            };
            // (z²/4t² + 1/2t) e^{-z²/4t} ≤ (2/(e t) + 1/2t) e^{-z²/8t}
            let (scale, gamma) = if deriv {
                (pre * (2.0 / (std::f64::consts::E * t) + 0.5 / t), 1.0 / (8.0 * t))
            } else {
                (pre, 1.0 / (4.0 * t))
            };
            image_sum(
                |k| {
                    if k == 0 && skip_direct {
                        0.0
                    } else {
                        image(d + k as f64 * l)
                    }
                },
                |k| scale * lattice_tail(gamma * l * l, k),
                p,
            )
        }
        _ => {
            let beta = 4.0 * PI * PI * t / (l * l);
            let mut s = spectral_sum(
                |n| {
                    let w = 2.0 * PI * n as f64 / l;
                    let e = (-beta * (n * n) as f64).exp() * (w * d).cos();
                    if deriv {
                        -2.0 / l * w * w * e
                    } else {
                        2.0 / l * e
                    }
                },
                |n| {
                    if deriv {
                        2.0 / l * (2.0 * PI / l).powi(2) * spectral_tail(beta, n, 2)
                    } else {
                        2.0 / l * spectral_tail(beta, n, 0)
                    }
                },
                p,
            )?;
            if !deriv {
                s.value += 1.0 / l;
            }
            if skip_direct {
                let g = gauss(d, t);
                s.value -= if deriv {
                    pre * g * (d * d / (4.0 * t * t) - 0.5 / t)
                } else {
                    pre * g
                };
            }
            Ok(s)
        }
    }
}

/// Two-interval interface kernel: the glued-interval kernel on the diagonal
/// at the gluing point, `L⁻¹[𝔻⁻¹](t)` with `𝔻 = m(coth mL₁ + coth mL₂)`.
pub fn interface_two_intervals(
    l1: f64,
    l2: f64,
    t: f64,
    form: InterfaceForm,
    p: &EvalParams,
) -> Result<Truncated> {
    check_time(t)?;
    check_length(l1)?;
    check_length(l2)?;
    p.validate()?;
    let ls = l1 + l2;
    let form = match form {
        InterfaceForm::Auto if t < ls * ls / PI => InterfaceForm::Poisson,
        InterfaceForm::Auto => InterfaceForm::Residues,
        f => f,
    };
    match form {
        InterfaceForm::Residues => {
            let beta = PI * PI * t / (ls * ls);
            spectral_sum(
                |k| {
                    let kf = k as f64;
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    2.0 * sign / ls
                        * (-beta * kf * kf).exp()
                        * (PI * kf * l1 / ls).sin()
                        * (PI * kf * l2 / ls).sin()
                },
                |n| 2.0 / ls * spectral_tail(beta, n, 0),
                p,
            )
        }
        _ => {
            let pre = free_diagonal(t);
            let e = |z: f64| (-z * z / t).exp();
            image_sum(
                |n| {
                    let nf = n as f64;
                    pre * (e(ls * nf) - e((nf + 1.0) * l1 + nf * l2))
                },
                |k| 2.0 * pre * lattice_tail(ls * ls / t, k),
                p,
            )
        }
    }
}
