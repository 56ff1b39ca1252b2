// SPDX-License-Identifier: Apache-2.0

//! Truncated interface series `Σ_{k≤K} Λ⁻¹ * (𝔻′ * Λ⁻¹)^{*k}` and the second
//! gluing formula built from it.
//!
//! Expanding the series term by term as ExpMix is exact in principle, but the
//! high powers it produces cancel catastrophically in floating point once
//! `K` passes a handful. For evaluation the truncated series is instead
//! recognised as the transition function of a walk on `X` that carries a
//! counter of how many times it has arrived in `Y`: the `k`-th term collects
//! walks with `k+1` arrivals (the start counts when it lies in `Y`). Walks
//! exceeding `K+1` arrivals are killed. Everything is then a positive
//! propagation by uniformization, and the killed mass is an exact bound on
//! what the truncation dropped. The literal ExpMix expansion is kept in
//! [`SeriesKernel::to_expmix`] for small `K`.

use crate::symlin::Matrix;
use crate::{Error, Result};

use super::{dn_prime_kernel, glue_pieces, lambda_inverse_kernel, Decomposition, KernelMatrix};

/// Largest `q·τ` per uniformization chunk; keeps `e^{-qτ}` far from underflow.
const CHUNK_RATE: f64 = 30.0;
/// Allowance for rounding in the propagated masses.
const ROUNDING_SLACK: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Interface,
    Glued,
}

/// A truncated series kernel, evaluable at any `t > 0` with error bounds.
#[derive(Clone, Debug)]
pub struct SeriesKernel {
    decomposition: Decomposition,
    kind: Kind,
    k_max: usize,
    starts: Vec<usize>,
    /// `max_{y∈Y} val_X(y)`
    d_y: f64,
}

/// Values of a [`SeriesKernel`] at one time.
#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub value: Matrix,
    /// `Σ_{k>K} (d t)^k / k!`, uniform over entries.
    pub tail_bound: f64,
    /// Per row: mass of walks killed for exceeding the truncation, which
    /// dominates the omitted terms of every entry in the row.
    pub escape_bound: Vec<f64>,
}

impl SeriesValue {
    /// The sharper of the two truncation bounds for row `i`, plus an
    /// allowance for rounding in the evaluation itself.
    pub fn bound(&self, i: usize) -> f64 {
        self.tail_bound.min(self.escape_bound[i]) + ROUNDING_SLACK
    }

    pub fn max_bound(&self) -> f64 {
        (0..self.value.nrows())
            .map(|i| self.bound(i))
            .fold(0.0, f64::max)
    }
}

/// `𝐋⁻¹[𝔻⁻¹]` on `Y×Y` from the series in `Λ⁻¹` and `𝔻′`, using only the
/// two sides and the interface.
pub fn interface_kernel_series(d: &Decomposition, k_max: usize) -> Result<SeriesKernel> {
    SeriesKernel::new(d, Kind::Interface, k_max)
}

/// Second gluing formula `K^{X,Y} + ε * S_K * εᵀ`, with `S_K` the truncated
/// interface series.
pub fn glue_ii(d: &Decomposition, k_max: usize) -> Result<SeriesKernel> {
    SeriesKernel::new(d, Kind::Glued, k_max)
}

impl SeriesKernel {
    fn new(d: &Decomposition, kind: Kind, k_max: usize) -> Result<Self> {
        d.require_interface()?;
        let g = d.graph();
        let starts: Vec<usize> = match kind {
            Kind::Interface => d.interface_indices(),
            Kind::Glued => (0..g.n()).collect(),
        };
        let d_y = d.interface().map(|y| g.valency(y)).max().unwrap_or(0) as f64;
        Ok(SeriesKernel {
            decomposition: d.clone(),
            kind,
            k_max,
            starts,
            d_y,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn rows(&self) -> Vec<String> {
        let g = self.decomposition.graph();
        self.starts.iter().map(|&v| g.label(v).to_string()).collect()
    }

    /// `Σ_{k>K} (d t)^k / k!` with `d` the largest valency of an interface
    /// vertex.
    pub fn tail_bound(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("tail bound needs t > 0, got {t}")));
        }
        Ok(poisson_tail(self.d_y * t, self.k_max + 1))
    }

    pub fn evaluate(&self, t: f64) -> Result<SeriesValue> {
        let tail_bound = self.tail_bound(t)?;
        let g = self.decomposition.graph();
        let n = g.n();
        let levels = self.k_max + 2;
        let in_y: Vec<bool> = (0..n).map(|v| self.decomposition.is_interface(v)).collect();
        let targets = &self.starts;
        let q = g.max_valency() as f64;
        let mut value = Matrix::zeros(self.starts.len(), targets.len());
        let mut escape_bound = Vec::with_capacity(self.starts.len());
        for (i, &s) in self.starts.iter().enumerate() {
            let mut mass = vec![0.0; n * levels];
            mass[s * levels + usize::from(in_y[s])] = 1.0;
            let mut killed = 0.0;
            if q > 0.0 {
                let chunks = (q * t / CHUNK_RATE).ceil().max(1.0);
                let lam = q * t / chunks;
                for _ in 0..chunks as usize {
                    self.propagate(&mut mass, &mut killed, lam, q, &in_y, levels);
                }
            }
            for (j, &c) in targets.iter().enumerate() {
                value[(i, j)] = mass[c * levels..(c + 1) * levels].iter().sum();
            }
            escape_bound.push(killed);
        }
        Ok(SeriesValue {
            value,
            tail_bound,
            escape_bound,
        })
    }

    /// One uniformized step of length `lam / q`:
    /// `mass ← Σ_n Poisson(n; lam) mass·Pⁿ` with `P = I − Δ/q` on the
    /// counted walk.
    fn propagate(
        &self,
        mass: &mut Vec<f64>,
        killed: &mut f64,
        lam: f64,
        q: f64,
        in_y: &[bool],
        levels: usize,
    ) {
        let g = self.decomposition.graph();
        let n = g.n();
        let mut p = mass.clone();
        let mut pk = *killed;
        let mut w = (-lam).exp();
        let mut acc: Vec<f64> = p.iter().map(|x| w * x).collect();
        let mut acc_k = w * pk;
        let mut next = vec![0.0; p.len()];
        let mut step = 0usize;
        loop {
            step += 1;
            next.iter_mut().for_each(|x| *x = 0.0);
            for v in 0..n {
                let stay = 1.0 - g.valency(v) as f64 / q;
                for l in 0..levels {
                    let m = p[v * levels + l];
                    if m == 0.0 {
                        continue;
                    }
                    next[v * levels + l] += stay * m;
                    let share = m / q;
                    for &u in g.neighbors(v) {
                        let lu = l + usize::from(in_y[u]);
                        if lu < levels {
                            next[u * levels + lu] += share;
                        } else {
                            pk += share;
                        }
                    }
                }
            }
            std::mem::swap(&mut p, &mut next);
            w *= lam / step as f64;
            for (a, x) in acc.iter_mut().zip(&p) {
                *a += w * x;
            }
            acc_k += w * pk;
            let k = step as f64;
            if k > lam && w * (k + 1.0) / (k + 1.0 - lam) < 1e-18 {
                break;
            }
        }
        *mass = acc;
        *killed = acc_k;
    }

    /// Literal term-by-term expansion as ExpMix. Practical for small `K` only:
    /// the expansion is exact but cancels badly as powers grow.
    pub fn to_expmix(&self) -> Result<KernelMatrix> {
        let d = &self.decomposition;
        let (rel, ext) = glue_pieces(d)?;
        let lam_inv = lambda_inverse_kernel(d)?;
        let dprime = dn_prime_kernel(d)?;
        let step = dprime.convolve(&lam_inv)?;
        let mut term = lam_inv.clone();
        let mut series = lam_inv;
        for _ in 0..self.k_max {
            term = term.convolve(&step)?;
            series = series.add(&term)?;
        }
        match self.kind {
            Kind::Interface => Ok(series),
            Kind::Glued => rel.add(&ext.convolve(&series)?.convolve(&ext.transpose())?),
        }
    }
}

/// `Σ_{k≥k0} x^k / k!` for `x ≥ 0`, summed in log space from the first term.
pub(crate) fn poisson_tail(x: f64, k0: usize) -> f64 {
    if x <= 0.0 {
        return if k0 == 0 { 1.0 } else { 0.0 };
    }
    let ln_x = x.ln();
    let mut k = k0 as f64;
    let mut ln_term = k * ln_x - crate::expmix::ln_factorial(k0 as u32);
    let mut total = 0.0;
    loop {
        let term = ln_term.exp();
        total += term;
        if term == 0.0 || (k > x && term < 1e-17 * total) {
            break;
        }
        if total.is_infinite() {
            return f64::INFINITY;
        }
        k += 1.0;
        ln_term += ln_x - k.ln();
    }
    total
}
