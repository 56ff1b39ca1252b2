// SPDX-License-Identifier: Apache-2.0

//! Recovering the Dirichlet kernel of an arc from the circle kernel by
//! cutting at two points `γ = {p, q}`.
//!
//! With `A = 2√(Δ^γ + m²) = 2m` on the two points and `K̃ = K|_γ − δ/√(4πt)`,
//! `L⁻¹[𝔻] = Σ_k (−1)^k a * (K̃ * a)^{*k}` where `a = L⁻¹[2m]` is not a
//! locally integrable function. Writing `2m = s · 2/√s` turns every
//! `a * f` with `f(0⁺) = 0` into `b * f′` with `b(t) = 2/√(πt)`, so the
//! `k`-th term is
//! `K(x,·) * (b * K̃′)^{*k} * b * K′(·,y)`, all factors integrable.

use serde::{Deserialize, Serialize};

use crate::quadsim::{conv2, Profile, TimeFactor};
use crate::{Error, Result};

use super::{
    check_length, check_time, circle_offset, circle_series, k_circle, k_interval, CircleTerm, EvalParams,
    Representation,
};

const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleCut {
    pub value: f64,
    /// `K^{S¹}(x,y) − δ_{ab} K^{arc}(x,y)`.
    pub reference: f64,
    pub residual: f64,
    /// Unsigned terms `k = 0..=k_max`; the series alternates.
    pub terms: Vec<f64>,
    /// Residual of each partial sum.
    pub partial_residuals: Vec<f64>,
    pub error: f64,
}

struct Setup {
    cuts: [f64; 2],
    kx: [TimeFactor; 2],
    ky_dt: [TimeFactor; 2],
    reduced_dt: [[TimeFactor; 2]; 2],
    b: TimeFactor,
    reference: f64,
}

/// Arc containing `x` (0: from p to q, 1: from q to p + L), with the offset of
/// `x` from the arc start and the arc length.
fn locate(l: f64, cuts: [f64; 2], x: f64) -> Option<(usize, f64, f64)> {
    let len0 = cuts[1] - cuts[0];
    let off = (x - cuts[0]).rem_euclid(l);
    if off > 0.0 && off < len0 {
        Some((0, off, len0))
    } else if off > len0 && off < l {
        Some((1, off - len0, l - len0))
    } else {
        None
    }
}

fn setup(l: f64, cuts: (f64, f64), x: f64, y: f64, t: f64, p: &EvalParams) -> Result<Setup> {
    check_time(t)?;
    check_length(l)?;
    p.validate()?;
    let (a, b) = (cuts.0.rem_euclid(l), cuts.1.rem_euclid(l));
    if (a - b).abs() < 1e-12 * l {
        return Err(Error::InvalidInput(
            "cutting needs two distinct points".into(),
        ));
    }
    let cuts = [a.min(b), a.max(b)];
    let (arc_x, off_x, len) = locate(l, cuts, x)
        .ok_or_else(|| Error::Domain(format!("x = {x} lies on a cut point")))?;
    let (arc_y, off_y, _) = locate(l, cuts, y)
        .ok_or_else(|| Error::Domain(format!("y = {y} lies on a cut point")))?;
    let full = k_circle(l, x, y, t, Representation::Auto, p)?.value;
    let reference = if arc_x == arc_y {
        full - k_interval(len, off_x, off_y, t, Representation::Auto, p)?.value
    } else {
        full
    };

    let pc = *p;
    let factor = |u: f64, v: f64, what: CircleTerm, alpha: f64| -> Result<TimeFactor> {
        let d = circle_offset(l, u, v);
        let c = if what == CircleTerm::TimeDerivativeWithoutDirect {
            // nearest remaining image is one full turn away
            l * l / 4.0
        } else {
            d * d / 4.0
        };
        TimeFactor::inverse_pow_gaussian(c, alpha, move |s| {
            circle_series(l, d, s, Representation::Auto, what, &pc)
                .map(|v| v.value)
                .unwrap_or(f64::NAN)
        })
    };
    let kx = [
        factor(x, cuts[0], CircleTerm::Kernel, 0.5)?,
        factor(x, cuts[1], CircleTerm::Kernel, 0.5)?,
    ];
    let ky_dt = [
        factor(cuts[0], y, CircleTerm::TimeDerivative, 2.5)?,
        factor(cuts[1], y, CircleTerm::TimeDerivative, 2.5)?,
    ];
    let reduced = |i: usize, j: usize| {
        if i == j {
            factor(cuts[i], cuts[j], CircleTerm::TimeDerivativeWithoutDirect, 2.5)
        } else {
            factor(cuts[i], cuts[j], CircleTerm::TimeDerivative, 2.5)
        }
    };
    let reduced_dt = [[reduced(0, 0)?, reduced(0, 1)?], [reduced(1, 0)?, reduced(1, 1)?]];
    let b = TimeFactor::inverse_pow(0.5, |s| 2.0 / (std::f64::consts::PI * s).sqrt())?;
    Ok(Setup {
        cuts,
        kx,
        ky_dt,
        reduced_dt,
        b,
        reference,
    })
}

/// Terms `k = 0..=k_max` split by the first cut point `u₀`; if `last` is
/// given only chains ending at that cut point are kept.
fn chain_terms(s: &Setup, t: f64, k_max: usize, last: Option<usize>) -> Result<(Vec<[f64; 2]>, f64)> {
    let mut error = 0.0;
    let mut v: Vec<TimeFactor> = Vec::with_capacity(2);
    for w in 0..2 {
        if last.is_some_and(|l| l != w) {
            v.push(TimeFactor::zero());
            continue;
        }
        let prof = Profile::convolve(&s.b, &s.ky_dt[w], t, QUAD_TOL)?;
        error += prof.error;
        v.push(prof.to_factor());
    }
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut row = [0.0; 2];
        for u in 0..2 {
            let e = conv2(&s.kx[u], &v[u], t, QUAD_TOL)?;
            error += e.error;
            row[u] = e.value;
        }
        out.push(row);
        if k == k_max {
            break;
        }
        let mut next = Vec::with_capacity(2);
        for u in 0..2 {
            let point_tol = QUAD_TOL / (4.0 * t.max(1.0));
            let inner = Profile::tabulate(
                |r| {
                    let mut acc = 0.0;
                    for w in 0..2 {
                        acc += conv2(&s.reduced_dt[u][w], &v[w], r, point_tol)?.value;
                    }
                    Ok(acc)
                },
                0.0,
                t,
                QUAD_TOL,
            )?;
            error += inner.error;
            let prof = Profile::convolve(&s.b, &inner.to_factor(), t, QUAD_TOL)?;
            error += prof.error;
            next.push(prof.to_factor());
        }
        v = next;
    }
    Ok((out, error))
}

/// Second cutting formula on a circle of circumference `l` cut at two points,
/// truncated after `k_max`.
pub fn cut_circle_to_arc(
    l: f64,
    cuts: (f64, f64),
    x: f64,
    y: f64,
    t: f64,
    k_max: usize,
    p: &EvalParams,
) -> Result<CircleCut> {
    let s = setup(l, cuts, x, y, t, p)?;
    let (rows, error) = chain_terms(&s, t, k_max, None)?;
    let terms: Vec<f64> = rows.iter().map(|r| r[0] + r[1]).collect();
    let mut value = 0.0;
    let mut partial_residuals = Vec::with_capacity(terms.len());
    for (k, term) in terms.iter().enumerate() {
        value += if k % 2 == 0 { *term } else { -term };
        partial_residuals.push((value - s.reference).abs());
    }
    Ok(CircleCut {
        value,
        reference: s.reference,
        residual: (value - s.reference).abs(),
        terms,
        partial_residuals,
        error,
    })
}

/// The unsigned `k`-th term split by its first and last cut point:
/// entry `[i][j]` collects chains `x → cuts[i] → … → cuts[j] → y`, with
/// the cut points sorted increasingly.
pub fn cut_circle_contributions(
    l: f64,
    cuts: (f64, f64),
    x: f64,
    y: f64,
    t: f64,
    k: usize,
    p: &EvalParams,
) -> Result<[[f64; 2]; 2]> {
    let s = setup(l, cuts, x, y, t, p)?;
    let mut out = [[0.0; 2]; 2];
    for last in 0..2 {
        let (rows, _) = chain_terms(&s, t, k, Some(last))?;
        for first in 0..2 {
            out[first][last] = rows[k][first];
        }
    }
    debug_assert!(s.cuts[0] < s.cuts[1]);
    Ok(out)
}
