// SPDX-License-Identifier: Apache-2.0

//! Exponential-polynomial time profiles with a Dirac atom at `t = 0`.
//!
//! An [`ExpMix`] is `c·δ(t) + Σ a_j t^{k_j} e^{-λ_j t}`. Its Laplace image is
//! the rational function `c + Σ a_j k_j! / (s+λ_j)^{k_j+1}`, so products of
//! images (convolutions in time) are re-expanded by partial fractions.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_POWER: u32 = 64;

/// Knobs for canonicalization and convolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixConfig {
    /// Rates closer than `merge_tol·(1+max)` are treated as the same pole.
    pub merge_tol: f64,
    pub max_power: u32,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            merge_tol: DEFAULT_MERGE_TOL,
            max_power: DEFAULT_MAX_POWER,
        }
    }
}

/// One summand `coef · t^power · e^{-rate·t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coef: f64,
    pub power: u32,
    pub rate: f64,
}

impl ExpTerm {
    pub fn new(coef: f64, power: u32, rate: f64) -> Self {
        ExpTerm { coef, power, rate }
    }

    fn value(&self, t: f64, ln_t: f64) -> f64 {
        if self.power == 0 {
            self.coef * (-self.rate * t).exp()
        } else {
            self.coef * (self.power as f64 * ln_t - self.rate * t).exp()
        }
    }
}

#[derive(Deserialize)]
struct RawMix {
    #[serde(default)]
    atom: f64,
    #[serde(default)]
    terms: Vec<ExpTerm>,
}

/// A canonical exponential-polynomial profile.
///
/// Terms are sorted by `(rate, power)`, rates within the merge tolerance are
/// collapsed onto the smallest member of their cluster, and exactly zero
/// coefficients are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMix")]
pub struct ExpMix {
    atom: f64,
    terms: Vec<ExpTerm>,
}

impl TryFrom<RawMix> for ExpMix {
    type Error = Error;

    fn try_from(raw: RawMix) -> Result<Self> {
        ExpMix::new(raw.atom, raw.terms)
    }
}

impl Default for ExpMix {
    fn default() -> Self {
        ExpMix::zero()
    }
}

impl ExpMix {
    /// Builds and canonicalizes a mix with the default configuration.
    pub fn new(atom: f64, terms: Vec<ExpTerm>) -> Result<Self> {
        Self::with_config(atom, terms, &MixConfig::default())
    }

    pub fn with_config(atom: f64, terms: Vec<ExpTerm>, cfg: &MixConfig) -> Result<Self> {
        if !atom.is_finite() {
            return Err(Error::NonFinite(format!("atom {atom}")));
        }
        for term in &terms {
            if !term.coef.is_finite() {
                return Err(Error::NonFinite(format!("coefficient {}", term.coef)));
            }
            if !term.rate.is_finite() || term.rate < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "rate must be finite and non-negative, got {}",
                    term.rate
                )));
            }
            if term.power > cfg.max_power {
                return Err(Error::PowerOverflow {
                    power: term.power,
                    max: cfg.max_power,
                });
            }
        }
        Ok(ExpMix {
            atom,
            terms: canonical_terms(terms, cfg.merge_tol),
        })
    }

    pub fn zero() -> Self {
        ExpMix {
            atom: 0.0,
            terms: Vec::new(),
        }
    }

    /// `c·δ(t)`.
    pub fn delta(c: f64) -> Self {
        ExpMix {
            atom: c,
            terms: Vec::new(),
        }
    }

    /// `coef · e^{-rate·t}`.
    pub fn exp(coef: f64, rate: f64) -> Self {
        Self::term(coef, 0, rate)
    }

    /// `coef · t^power · e^{-rate·t}`; panics on a negative or non-finite rate.
    pub fn term(coef: f64, power: u32, rate: f64) -> Self {
        Self::new(0.0, vec![ExpTerm::new(coef, power, rate)]).expect("valid single term")
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.atom == 0.0 && self.terms.is_empty()
    }

    /// Smallest rate present, if any term is.
    pub fn min_rate(&self) -> Option<f64> {
        self.terms.first().map(|t| t.rate)
    }

    pub fn max_power(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    /// Re-applies canonicalization; a no-op on values built by this module.
    pub fn canonicalize(&self) -> Self {
        ExpMix {
            atom: self.atom,
            terms: canonical_terms(self.terms.clone(), DEFAULT_MERGE_TOL),
        }
    }

    /// Drops terms with `|coef| ≤ tol`; the atom is zeroed under the same rule.
    pub fn prune(&self, tol: f64) -> Self {
        ExpMix {
            atom: if self.atom.abs() <= tol { 0.0 } else { self.atom },
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| t.coef.abs() > tol)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return ExpMix::zero();
        }
        ExpMix {
            atom: self.atom * c,
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm::new(t.coef * c, t.power, t.rate))
                .collect(),
        }
    }

    pub fn add(&self, other: &ExpMix) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        ExpMix {
            atom: self.atom + other.atom,
            terms: canonical_terms(terms, DEFAULT_MERGE_TOL),
        }
    }

    pub fn sub(&self, other: &ExpMix) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Sum of many mixes with a single canonicalization pass.
    pub fn sum<'a, I: IntoIterator<Item = &'a ExpMix>>(mixes: I) -> Self {
        let mut atom = 0.0;
        let mut terms = Vec::new();
        for m in mixes {
            atom += m.atom;
            terms.extend_from_slice(&m.terms);
        }
        ExpMix {
            atom,
            terms: canonical_terms(terms, DEFAULT_MERGE_TOL),
        }
    }

    /// Largest absolute coefficient (atom included) of `self − other`.
    pub fn max_coef_diff(&self, other: &ExpMix) -> f64 {
        let d = self.sub(other);
        d.terms
            .iter()
            .map(|t| t.coef.abs())
            .fold(d.atom.abs(), f64::max)
    }

    /// Time convolution with the default configuration.
    pub fn convolve(&self, other: &ExpMix) -> Result<Self> {
        self.convolve_with(other, &MixConfig::default())
    }

    /// `(αδ + F) * (βδ + G) = αβδ + αG + βF + F*G`, with `F*G` expanded by
    /// partial fractions pole by pole.
    pub fn convolve_with(&self, other: &ExpMix, cfg: &MixConfig) -> Result<Self> {
        let mut out: Vec<ExpTerm> =
            Vec::with_capacity(self.terms.len() * other.terms.len() * 2 + 8);
        if self.atom != 0.0 {
            out.extend(
                other
                    .terms
                    .iter()
                    .map(|t| ExpTerm::new(t.coef * self.atom, t.power, t.rate)),
            );
        }
        if other.atom != 0.0 {
            out.extend(
                self.terms
                    .iter()
                    .map(|t| ExpTerm::new(t.coef * other.atom, t.power, t.rate)),
            );
        }
        for a in &self.terms {
            for b in &other.terms {
                convolve_pair(a, b, cfg, &mut out)?;
            }
        }
        if let Some(bad) = out.iter().find(|t| !t.coef.is_finite()) {
            return Err(Error::NonFinite(format!(
                "partial-fraction coefficient {} at rate {}",
                bad.coef, bad.rate
            )));
        }
        Ok(ExpMix {
            atom: self.atom * other.atom,
            terms: canonical_terms(out, cfg.merge_tol),
        })
    }

    /// Value at `t > 0`; the atom does not contribute.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("evaluate needs t > 0, got {t}")));
        }
        let ln_t = t.ln();
        Ok(neumaier_sum(self.terms.iter().map(|term| term.value(t, ln_t))))
    }

    /// `L[f](s) = atom + Σ coef·k!/(s+λ)^{k+1}` for `s > −min rate`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("laplace at non-finite s={s}")));
        }
        if let Some(r) = self.min_rate() {
            if s + r <= 0.0 {
                return Err(Error::Domain(format!(
                    "laplace at s={s} is at or left of the pole −{r}"
                )));
            }
        }
        let parts = self.terms.iter().map(|t| {
            let k = t.power;
            t.coef * (ln_factorial(k) - (k as f64 + 1.0) * (s + t.rate).ln()).exp()
        });
        Ok(self.atom + neumaier_sum(parts))
    }

    /// `∫₀^∞ e^{-m² t} f(t) dt`; the bridge from heat kernels to Green's
    /// functions.
    pub fn integrate_against_exp(&self, m2: f64) -> Result<f64> {
        self.laplace(m2)
    }

    /// `∫₀ᵗ f(τ) dτ`, the atom included (it sits inside `[0, t]`).
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("cumulative needs t > 0, got {t}")));
        }
        let parts = self
            .terms
            .iter()
            .map(|term| term.coef * power_exp_integral(term.power, term.rate, t));
        Ok(self.atom + neumaier_sum(parts))
    }
}

/// Left fold of [`ExpMix::convolve`]: the integral of the product over the
/// time simplex `{t_0+…+t_n = t}`, atoms collapsing faces.
pub fn simplex_convolve(fs: &[ExpMix]) -> Result<ExpMix> {
    simplex_convolve_with(fs, &MixConfig::default())
}

pub fn simplex_convolve_with(fs: &[ExpMix], cfg: &MixConfig) -> Result<ExpMix> {
    let (first, rest) = fs
        .split_first()
        .ok_or_else(|| Error::InvalidInput("simplex_convolve needs at least one factor".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, f| acc.convolve_with(f, cfg))
}

impl fmt::Display for ExpMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        if self.atom != 0.0 {
            write!(f, "{}·δ(t)", self.atom)?;
            wrote = true;
        }
        for t in &self.terms {
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coef)?;
            match t.power {
                0 => {}
                1 => write!(f, "·t")?,
                k => write!(f, "·t^{k}")?,
            }
            if t.rate != 0.0 {
                write!(f, "·e^(-{}t)", t.rate)?;
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn rates_merge(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol * (1.0 + a.max(b))
}

/// Sorts, merges rate clusters onto the cluster minimum, sums equal powers and
/// drops exact zeros. Merging against the cluster minimum (not a chain of
/// neighbours) keeps the operation idempotent.
fn canonical_terms(mut terms: Vec<ExpTerm>, merge_tol: f64) -> Vec<ExpTerm> {
    terms.sort_by(|a, b| a.rate.partial_cmp(&b.rate).unwrap_or(Ordering::Equal));
    let mut i = 0;
    while i < terms.len() {
        let rep = terms[i].rate;
        let mut j = i + 1;
        while j < terms.len() && rates_merge(rep, terms[j].rate, merge_tol) {
            terms[j].rate = rep;
            j += 1;
        }
        i = j;
    }
    terms.sort_by(|a, b| {
        a.rate
            .partial_cmp(&b.rate)
            .unwrap_or(Ordering::Equal)
            .then(a.power.cmp(&b.power))
    });
    let mut out: Vec<ExpTerm> = Vec::with_capacity(terms.len());
    let mut k = 0;
    while k < terms.len() {
        let (rate, power) = (terms[k].rate, terms[k].power);
        let mut sum = Neumaier::default();
        while k < terms.len() && terms[k].rate == rate && terms[k].power == power {
            sum.add(terms[k].coef);
            k += 1;
        }
        let coef = sum.total();
        if coef != 0.0 {
            out.push(ExpTerm::new(coef, power, rate));
        }
    }
    out
}

/// Pushes the expansion of `a * b` (both atom-free single terms) onto `out`.
fn convolve_pair(a: &ExpTerm, b: &ExpTerm, cfg: &MixConfig, out: &mut Vec<ExpTerm>) -> Result<()> {
    let c = a.coef * b.coef;
    if c == 0.0 {
        return Ok(());
    }
    let (p, q) = (a.power, b.power);
    if rates_merge(a.rate, b.rate, cfg.merge_tol) {
        // t^p e^{-λt} * t^q e^{-λt} = p! q! / (p+q+1)! · t^{p+q+1} e^{-λt}
        let power = p + q + 1;
        if power > cfg.max_power {
            return Err(Error::PowerOverflow {
                power,
                max: cfg.max_power,
            });
        }
        let w = (ln_factorial(p) + ln_factorial(q) - ln_factorial(power)).exp();
        out.push(ExpTerm::new(c * w, power, a.rate.min(b.rate)));
        return Ok(());
    }
    // c p! q! / ((s+α)^P (s+β)^Q), P = p+1, Q = q+1, d = β − α.
    let (pp, qq) = (p + 1, q + 1);
    let d = b.rate - a.rate;
    let ln_d = d.abs().ln();
    let base = c.abs().ln() + ln_factorial(p) + ln_factorial(q);
    let sign_c = c.signum();
    for j in 1..=pp {
        let e = pp + qq - j;
        let ln_mag = base + ln_binomial(e - 1, qq - 1) - ln_factorial(j - 1) - e as f64 * ln_d;
        let mut sign = sign_c;
        if (pp - j) % 2 == 1 {
            sign = -sign;
        }
        if d < 0.0 && e % 2 == 1 {
            sign = -sign;
        }
        out.push(ExpTerm::new(sign * ln_mag.exp(), j - 1, a.rate));
    }
    for j in 1..=qq {
        let e = pp + qq - j;
        let ln_mag = base + ln_binomial(e - 1, pp - 1) - ln_factorial(j - 1) - e as f64 * ln_d;
        let mut sign = sign_c;
        if (qq - j) % 2 == 1 {
            sign = -sign;
        }
        // denominator is (−d)^e
        if d > 0.0 && e % 2 == 1 {
            sign = -sign;
        }
        out.push(ExpTerm::new(sign * ln_mag.exp(), j - 1, b.rate));
    }
    Ok(())
}

/// `∫₀ᵗ τ^k e^{-λτ} dτ` without cancellation in either regime.
pub(crate) fn power_exp_integral(k: u32, rate: f64, t: f64) -> f64 {
    let kf = k as f64;
    if rate == 0.0 {
        return t.powf(kf + 1.0) / (kf + 1.0);
    }
    let x = rate * t;
    if x <= 40.0 + kf {
        // t^{k+1} e^{-x} Σ_n x^n / ((k+1)(k+2)…(k+1+n)); all terms positive.
        let mut term = 1.0 / (kf + 1.0);
        let mut sum = term;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= x / (kf + 1.0 + n);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        (((kf + 1.0) * t.ln() - x).exp()) * sum
    } else {
        // k!/λ^{k+1} (1 − e^{-x} Σ_{j≤k} x^j/j!), the subtracted part is tiny.
        let ln_x = x.ln();
        let tail: f64 = (0..=k)
            .map(|j| (j as f64 * ln_x - x - ln_factorial(j)).exp())
            .sum();
        (ln_factorial(k) - (kf + 1.0) * rate.ln()).exp() * (1.0 - tail)
    }
}

const LN_FACT_TABLE: usize = 1024;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0_f64;
        v.push(0.0);
        for n in 1..LN_FACT_TABLE {
            acc += (n as f64).ln();
            v.push(acc);
        }
        v
    })
}

/// `ln n!`.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    let table = ln_factorial_table();
    match table.get(n as usize) {
        Some(v) => *v,
        None => {
            let mut acc = table[LN_FACT_TABLE - 1];
            for m in LN_FACT_TABLE..=n as usize {
                acc += (m as f64).ln();
            }
            acc
        }
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Compensated (Neumaier) running sum.
#[derive(Default, Clone, Copy, Debug)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Composite 10-point Gauss-Legendre on many panels; independent of quadsim.
    fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [
            0.148_874_338_981_631_2,
            0.433_395_394_129_247_2,
            0.679_409_568_299_024_4,
            0.865_063_366_688_984_5,
            0.973_906_528_517_171_7,
        ];
        const W: [f64; 5] = [
            0.295_524_224_714_752_9,
            0.269_266_719_309_996_4,
            0.219_086_362_515_982_0,
            0.149_451_349_150_580_6,
            0.066_671_344_308_688_1,
        ];
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for i in 0..panels {
            let c = a + (i as f64 + 0.5) * h;
            let r = 0.5 * h;
            for k in 0..5 {
                total += W[k] * r * (f(c - r * X[k]) + f(c + r * X[k]));
            }
        }
        total
    }

    fn numeric_conv(f: &ExpMix, g: &ExpMix, t: f64) -> f64 {
        gl_integrate(
            |s| f.evaluate(s.max(1e-300)).unwrap() * g.evaluate((t - s).max(1e-300)).unwrap(),
            0.0,
            t,
            200,
        )
    }

    #[test]
    fn delta_is_identity() {
        let f = ExpMix::new(0.0, vec![ExpTerm::new(2.0, 1, 0.5), ExpTerm::new(-1.0, 0, 3.0)]).unwrap();
        assert_eq!(ExpMix::delta(1.0).convolve(&f).unwrap(), f);
        assert_eq!(f.convolve(&ExpMix::delta(1.0)).unwrap(), f);
    }

    #[test]
    fn distinct_rates() {
        let h = ExpMix::exp(1.0, 1.0).convolve(&ExpMix::exp(1.0, 2.0)).unwrap();
        let want = ExpMix::exp(1.0, 1.0).sub(&ExpMix::exp(1.0, 2.0));
        assert!(h.max_coef_diff(&want) < 1e-15);
        for t in [0.5, 1.0, 2.0] {
            let q = numeric_conv(&ExpMix::exp(1.0, 1.0), &ExpMix::exp(1.0, 2.0), t);
            assert!((h.evaluate(t).unwrap() - q).abs() < 1e-13);
        }
    }

    #[test]
    fn confluent_rates() {
        let h = ExpMix::exp(1.0, 1.0).convolve(&ExpMix::exp(1.0, 1.0)).unwrap();
        assert_eq!(h, ExpMix::term(1.0, 1, 1.0));
        for t in [0.5, 1.0, 2.0] {
            let q = numeric_conv(&ExpMix::exp(1.0, 1.0), &ExpMix::exp(1.0, 1.0), t);
            assert!((h.evaluate(t).unwrap() - q).abs() < 1e-13);
        }
    }

    #[test]
    fn three_vertex_corner_entry() {
        let e1 = ExpMix::exp(1.0, 1.0);
        let mid = ExpMix::new(0.0, vec![ExpTerm::new(1.0 / 3.0, 0, 0.0), ExpTerm::new(2.0 / 3.0, 0, 3.0)]).unwrap();
        let h = simplex_convolve(&[e1.clone(), mid, e1]).unwrap();
        let want = ExpMix::new(
            0.0,
            vec![
                ExpTerm::new(1.0 / 3.0, 0, 0.0),
                ExpTerm::new(-0.5, 0, 1.0),
                ExpTerm::new(1.0 / 6.0, 0, 3.0),
            ],
        )
        .unwrap();
        assert!(h.max_coef_diff(&want) < 1e-14, "{h}");
    }

    #[test]
    fn atom_face_term() {
        // e^{-t} * (2δ + e^{-3t}) = 2e^{-t} + (e^{-t} − e^{-3t})/2
        let f = ExpMix::exp(1.0, 1.0);
        let g = ExpMix::new(2.0, vec![ExpTerm::new(1.0, 0, 3.0)]).unwrap();
        let h = f.convolve(&g).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let smooth = numeric_conv(&f, &ExpMix::exp(1.0, 3.0), t);
            let want = 2.0 * (-t).exp() + smooth;
            assert!((h.evaluate(t).unwrap() - want).abs() < 1e-13);
        }
        assert_eq!(h.atom(), 0.0);
        let hh = ExpMix::delta(3.0).convolve(&ExpMix::delta(-0.5)).unwrap();
        assert_eq!(hh.atom(), -1.5);
    }

    #[test]
    fn single_factor_fold() {
        let f = ExpMix::term(0.7, 2, 1.5);
        assert_eq!(simplex_convolve(std::slice::from_ref(&f)).unwrap(), f);
        assert!(simplex_convolve(&[]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let k22 = ExpMix::new(0.0, vec![ExpTerm::new(1.0 / 3.0, 0, 0.0), ExpTerm::new(2.0 / 3.0, 0, 3.0)]).unwrap();
        for t in [0.1f64, 1.0, 5.0] {
            let want = 1.0 / 3.0 + 2.0 / 3.0 * (-3.0 * t).exp();
            assert!((k22.evaluate(t).unwrap() - want).abs() < 1e-16);
        }
        assert_eq!(ExpMix::zero().evaluate(2.0).unwrap(), 0.0);
        let v = ExpMix::term(1.0, 1, 1.0).evaluate(1.0).unwrap();
        assert!((v - 0.367_879_441_171_442_33).abs() < 1e-16);
        assert!(ExpMix::zero().evaluate(0.0).is_err());
        assert!(ExpMix::zero().evaluate(-1.0).is_err());
        assert_eq!(ExpMix::delta(5.0).evaluate(1.0).unwrap(), 0.0);
    }

    #[test]
    fn laplace_examples() {
        assert_eq!(ExpMix::delta(1.0).laplace(3.0).unwrap(), 1.0);
        assert!((ExpMix::exp(1.0, 1.0).laplace(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let k22 = ExpMix::new(0.0, vec![ExpTerm::new(1.0 / 3.0, 0, 0.0), ExpTerm::new(2.0 / 3.0, 0, 3.0)]).unwrap();
        for m2 in [0.5, 1.0, 2.0] {
            let want = (1.0 + m2) / (m2 * (3.0 + m2));
            assert!((k22.laplace(m2).unwrap() - want).abs() < 1e-15);
        }
        assert!(k22.laplace(0.0).is_err());
        assert!(ExpMix::exp(1.0, 3.0).laplace(-3.0).is_err());
        assert_eq!(ExpMix::exp(1.0, 3.0).integrate_against_exp(1.0).unwrap(), 0.25);
        assert_eq!(ExpMix::delta(1.0).integrate_against_exp(0.3).unwrap(), 1.0);
    }

    #[test]
    fn merge_uses_cluster_minimum() {
        let m = ExpMix::new(
            0.0,
            vec![ExpTerm::new(1.0, 0, 2.0), ExpTerm::new(1.0, 0, 2.0 + 1e-12), ExpTerm::new(1.0, 0, 2.0 + 2e-12)],
        )
        .unwrap();
        assert_eq!(m.terms(), &[ExpTerm::new(3.0, 0, 2.0)]);
        let n = ExpMix::new(0.0, vec![ExpTerm::new(1.0, 0, 1.0), ExpTerm::new(-1.0, 0, 1.0)]).unwrap();
        assert!(n.is_zero());
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(ExpMix::new(0.0, vec![ExpTerm::new(1.0, 0, -0.1)]).is_err());
        assert!(ExpMix::new(0.0, vec![ExpTerm::new(f64::NAN, 0, 1.0)]).is_err());
        assert!(ExpMix::new(f64::INFINITY, vec![]).is_err());
        assert!(matches!(
            ExpMix::new(0.0, vec![ExpTerm::new(1.0, 65, 1.0)]),
            Err(Error::PowerOverflow { .. })
        ));
    }

    #[test]
    fn power_overflow_is_an_error() {
        let cfg = MixConfig {
            max_power: 3,
            ..MixConfig::default()
        };
        let f = ExpMix::with_config(0.0, vec![ExpTerm::new(1.0, 2, 1.0)], &cfg).unwrap();
        assert!(matches!(
            f.convolve_with(&f, &cfg),
            Err(Error::PowerOverflow { power: 5, max: 3 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let f = ExpMix::new(0.5, vec![ExpTerm::new(2.0, 1, 3.0), ExpTerm::new(-1.0, 0, 0.0)]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"atom":0.5,"terms":[{"coef":-1.0,"power":0,"rate":0.0},{"coef":2.0,"power":1,"rate":3.0}]}"#
        );
        let back: ExpMix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<ExpMix>(r#"{"atom":0,"terms":[{"coef":1,"power":0,"rate":-2}]}"#).is_err());
    }

    #[test]
    fn cumulative_matches_quadrature() {
        let f = ExpMix::new(
            0.25,
            vec![ExpTerm::new(1.0, 0, 0.0), ExpTerm::new(-2.0, 3, 0.7), ExpTerm::new(0.5, 1, 60.0)],
        )
        .unwrap();
        for t in [0.01, 0.5, 3.0, 20.0] {
            let q = gl_integrate(|s| f.evaluate(s.max(1e-300)).unwrap(), 0.0, t, 400);
            assert!((f.cumulative(t).unwrap() - 0.25 - q).abs() < 1e-12 * (1.0 + q.abs()), "t={t}");
        }
    }

    // Integer rates in [0, 20): exactly confluent or at least 1 apart, like the
    // spectra of small graphs. Near-confluent pairs are covered by the merge tests.
    fn grid_rate(i: u32) -> f64 {
        i as f64
    }

    fn arb_mix() -> impl Strategy<Value = ExpMix> {
        (
            -2.0..2.0f64,
            prop::collection::vec((-3.0..3.0f64, 0u32..3, 0u32..20), 0..5),
        )
            .prop_map(|(atom, ts)| {
                let terms = ts.into_iter().map(|(c, k, r)| ExpTerm::new(c, k, grid_rate(r))).collect();
                ExpMix::new(atom, terms).unwrap()
            })
    }

    fn arb_smooth_mix() -> impl Strategy<Value = ExpMix> {
        prop::collection::vec((-3.0..3.0f64, 0u32..3, 0u32..20), 1..4).prop_map(|ts| {
            let terms = ts.into_iter().map(|(c, k, r)| ExpTerm::new(c, k, grid_rate(r))).collect();
            ExpMix::new(0.0, terms).unwrap()
        })
    }

    fn same_function(a: &ExpMix, b: &ExpMix, tol: f64) -> bool {
        (a.atom() - b.atom()).abs() <= tol
            && [0.05, 0.4, 1.0, 3.0].iter().all(|&t| {
                let (x, y) = (a.evaluate(t).unwrap(), b.evaluate(t).unwrap());
                (x - y).abs() <= tol * (1.0 + x.abs())
            })
    }

    proptest! {
        #[test]
        fn laplace_homomorphism(f in arb_mix(), g in arb_mix(), ss in prop::collection::vec(0.1..10.0f64, 5)) {
            let h = f.convolve(&g).unwrap();
            for s in ss {
                let prod = f.laplace(s).unwrap() * g.laplace(s).unwrap();
                let lhs = h.laplace(s).unwrap();
                prop_assert!((lhs - prod).abs() < 1e-12 * (1.0 + prod.abs()), "s={} lhs={} rhs={}", s, lhs, prod);
            }
        }

        #[test]
        fn convolution_commutes_and_associates(f in arb_mix(), g in arb_mix(), h in arb_mix()) {
            let fg = f.convolve(&g).unwrap();
            let gf = g.convolve(&f).unwrap();
            prop_assert!(same_function(&fg, &gf, 1e-10));
            let left = fg.convolve(&h).unwrap();
            let right = f.convolve(&g.convolve(&h).unwrap()).unwrap();
            prop_assert!(same_function(&left, &right, 1e-9));
        }

        #[test]
        fn canonical_idempotent(f in arb_mix(), g in arb_mix()) {
            let h = f.add(&g).convolve(&g).unwrap();
            prop_assert_eq!(h.canonicalize(), h.clone());
            prop_assert_eq!(h.canonicalize().canonicalize(), h);
        }

        #[test]
        fn quadrature_oracle(f in arb_smooth_mix(), g in arb_smooth_mix(), t in 0.01..10.0f64) {
            let h = f.convolve(&g).unwrap();
            let q = numeric_conv(&f, &g, t);
            let scale = gl_integrate(
                |s| (f.evaluate(s.max(1e-300)).unwrap() * g.evaluate((t - s).max(1e-300)).unwrap()).abs(),
                0.0, t, 200,
            );
            let v = h.evaluate(t).unwrap();
            // partial fractions of distinct rates cancel for small t
            let abs_terms = h.terms().iter().map(|e| ExpTerm::new(e.coef.abs(), e.power, e.rate)).collect();
            let cancel = ExpMix::new(0.0, abs_terms).unwrap().evaluate(t).unwrap();
            let tol = 1e-10 * (q.abs().max(scale) + 1e-300) + 64.0 * f64::EPSILON * cancel;
            prop_assert!((v - q).abs() <= tol, "t={} closed={} quad={}", t, v, q);
        }
    }
}
