// SPDX-License-Identifier: Apache-2.0

//! Adaptive quadrature for convolutions over time simplices.
//!
//! `conv_n(f₁,…,f_n)(t) = ∫_{t₁+…+t_n=t} Π fᵢ(tᵢ)` is evaluated from the last
//! factor inwards: each partial convolution becomes a piecewise Chebyshev
//! profile on `(0, t]` (panels graded geometrically towards 0), and only the
//! outermost convolution is a plain adaptive integral. Endpoint behaviour of
//! every factor is declared through [`Singularity`], which selects a change of
//! variables near `t = 0`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use crate::expmix::ExpMix;
use crate::{Error, Result};

/// Default limit on the number of panels of one adaptive integral.
pub const DEFAULT_MAX_PANELS: usize = 1 << 14;

/// Behaviour of a factor as `t → 0⁺`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Singularity {
    /// Bounded near 0.
    Regular,
    /// `~ t^{-α} e^{-c/t}` with `c > 0`: flat at 0 but possibly sharply peaked.
    InversePowGaussian { c: f64, alpha: f64 },
    /// `~ t^{-α}` with `α < 1`.
    InversePow { alpha: f64 },
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A density in time on `(0, ∞)` with declared behaviour at 0.
#[derive(Clone)]
pub struct TimeFactor {
    eval: Eval,
    sing: Singularity,
    zero: bool,
}

impl fmt::Debug for TimeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeFactor")
            .field("singularity", &self.sing)
            .field("zero", &self.zero)
            .finish()
    }
}

impl TimeFactor {
    pub fn regular(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFactor {
            eval: Arc::new(f),
            sing: Singularity::Regular,
            zero: false,
        }
    }

    pub fn inverse_pow_gaussian(
        c: f64,
        alpha: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "inverse_pow_gaussian needs c > 0, got c = {c}, alpha = {alpha}"
            )));
        }
        Ok(TimeFactor {
            eval: Arc::new(f),
            sing: Singularity::InversePowGaussian { c, alpha },
            zero: false,
        })
    }

    pub fn inverse_pow(alpha: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(alpha < 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "t^-alpha is integrable at 0 only for alpha < 1, got {alpha}"
            )));
        }
        let sing = if alpha <= 0.0 {
            Singularity::Regular
        } else {
            Singularity::InversePow { alpha }
        };
        Ok(TimeFactor {
            eval: Arc::new(f),
            sing,
            zero: false,
        })
    }

    /// Density part of an ExpMix; atoms must be split off by the caller.
    pub fn from_expmix(mix: &ExpMix) -> Result<Self> {
        if mix.atom() != 0.0 {
            return Err(Error::InvalidInput(
                "quadrature factors cannot carry a delta atom".into(),
            ));
        }
        if mix.is_zero() {
            return Ok(TimeFactor::zero());
        }
        let m = mix.clone();
        Ok(TimeFactor::regular(move |t| m.evaluate(t).unwrap_or(f64::NAN)))
    }

    pub fn zero() -> Self {
        TimeFactor {
            eval: Arc::new(|_| 0.0),
            sing: Singularity::Regular,
            zero: true,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn singularity(&self) -> Singularity {
        self.sing
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// `t ↦ c·f(t)`.
    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return TimeFactor::zero();
        }
        let f = self.eval.clone();
        TimeFactor {
            eval: Arc::new(move |t| c * f(t)),
            sing: self.sing,
            zero: self.zero,
        }
    }

    /// `t ↦ f(s·t)`, same kind of endpoint behaviour.
    pub fn rescaled(&self, s: f64) -> Self {
        let f = self.eval.clone();
        let sing = match self.sing {
            Singularity::InversePowGaussian { c, alpha } => Singularity::InversePowGaussian { c: c / s, alpha },
            other => other,
        };
        TimeFactor {
            eval: Arc::new(move |t| f(s * t)),
            sing,
            zero: self.zero,
        }
    }

    /// Exponent of the power-law blow-up at 0, or `None` if flat.
    fn power(&self) -> Option<f64> {
        match self.sing {
            Singularity::Regular => Some(0.0),
            Singularity::InversePow { alpha } => Some(alpha),
            Singularity::InversePowGaussian { .. } => None,
        }
    }
}

/// A value with an estimate of its absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

// Gauss–Kronrod 10/21 nodes on [-1, 1] (non-negative half) and weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_308_930,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], …, XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    let mut abs = WGK[10] * fc.abs();
    for i in 0..10 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    Ok(Panel {
        a,
        b,
        value,
        error: ((k - g) * h).abs(),
        abs: abs * h.abs(),
    })
}

struct ByError(f64, usize);

impl PartialEq for ByError {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for ByError {
    fn cmp(&self, o: &Self) -> Ordering {
        // largest error first; earlier panel wins ties
        self.0.total_cmp(&o.0).then(o.1.cmp(&self.1))
    }
}

/// Adaptive GK21 with global bisection of the worst panel.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    integrate_with(f, a, b, tol, DEFAULT_MAX_PANELS)
}

pub fn integrate_with(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be > 0, got {tol}")));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut panels = vec![gk21(&f, a, b)?];
    let mut heap = BinaryHeap::new();
    heap.push(ByError(panels[0].error, 0));
    let mut err = panels[0].error;
    let mut abs = panels[0].abs;
    loop {
        let floor = 50.0 * f64::EPSILON * abs;
        if err <= tol.max(floor) {
            break;
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] with {max_panels} panels (error {err:e}, tol {tol:e})"
            )));
        }
        let Some(ByError(_, idx)) = heap.pop() else {
            break;
        };
        let (pa, pb) = (panels[idx].a, panels[idx].b);
        let mid = 0.5 * (pa + pb);
        if mid <= pa.min(pb) || mid >= pa.max(pb) {
            // cannot split further; leave its error in the total
            continue;
        }
        let left = gk21(&f, pa, mid)?;
        let right = gk21(&f, mid, pb)?;
        err += left.error + right.error - panels[idx].error;
        abs += left.abs + right.abs - panels[idx].abs;
        panels[idx] = left;
        heap.push(ByError(panels[idx].error, idx));
        panels.push(right);
        heap.push(ByError(panels[panels.len() - 1].error, panels.len() - 1));
    }
    // sum in panel order for reproducibility
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| panels[i].a.total_cmp(&panels[j].a));
    let value = crate::expmix::neumaier_sum(order.iter().map(|&i| panels[i].value));
    let error: f64 = panels.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error: error.max(50.0 * f64::EPSILON * abs),
    })
}

/// `∫_a^∞ f`, through `u = a + w/(1−w)`. `f` must decay fast enough for the
/// transformed integrand to stay bounded.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> Result<Estimate> {
    integrate(
        |w| {
            if w >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - w;
            let v = f(a + w / d);
            if v == 0.0 {
                0.0
            } else {
                v / (d * d)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_0^h F`, where `F` behaves near 0 as described by `sing`.
pub fn integrate_singular(f: impl Fn(f64) -> f64, sing: Singularity, h: f64, tol: f64) -> Result<Estimate> {
    match sing {
        Singularity::Regular => integrate(f, 0.0, h, tol),
        Singularity::InversePow { alpha } => {
            // s = u^p makes s^{-α} ds bounded in u
            let p = 1.0 / (1.0 - alpha);
            integrate(
                |u| {
                    if u <= 0.0 {
                        return 0.0;
                    }
                    f(u.powf(p)) * p * u.powf(p - 1.0)
                },
                0.0,
                h.powf(1.0 - alpha),
                tol,
            )
        }
        Singularity::InversePowGaussian { c, alpha } => {
            let s0 = if alpha > 0.0 { h.min(c / alpha) } else { h };
            // s = c/u on (0, s0]: t^{-α}e^{-c/t} becomes ~u^{α-2}e^{-u}
            let near = integrate_to_infinity(
                |u| {
                    let s = c / u;
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let v = f(s);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * c / (u * u)
                    }
                },
                c / s0,
                tol / 2.0,
            )?;
            let far = if s0 < h {
                integrate(&f, s0, h, tol / 2.0)?
            } else {
                Estimate {
                    value: 0.0,
                    error: 0.0,
                }
            };
            Ok(near + far)
        }
    }
}

/// `(f * g)(t) = ∫_0^t f(s) g(t−s) ds`, split at `t/2` so each factor's
/// endpoint treatment is applied at its own end.
pub fn conv2(f: &TimeFactor, g: &TimeFactor, t: f64, tol: f64) -> Result<Estimate> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("convolution needs t > 0, got {t}")));
    }
    if f.zero || g.zero {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let h = 0.5 * t;
    let left = integrate_singular(|s| f.eval(s) * g.eval(t - s), f.sing, h, tol / 2.0)?;
    let right = integrate_singular(|r| f.eval(t - r) * g.eval(r), g.sing, h, tol / 2.0)?;
    Ok(left + right)
}

/// Simplex convolution of at least two factors at time `t`, to absolute
/// tolerance `tol`.
pub fn conv_n(factors: &[TimeFactor], t: f64, tol: f64) -> Result<Estimate> {
    if factors.len() < 2 {
        return Err(Error::InvalidInput("conv_n needs at least two factors".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be > 0, got {tol}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("convolution needs t > 0, got {t}")));
    }
    if factors.iter().any(|f| f.zero) {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let n = factors.len();
    let step_tol = tol / (2.0 * n as f64);
    let mut tail = factors[n - 1].clone();
    let mut profile_error = 0.0;
    for f in factors[1..n - 1].iter().rev() {
        let p = Profile::convolve(f, &tail, t, step_tol)?;
        profile_error += p.error;
        tail = p.to_factor();
    }
    let mut est = conv2(&factors[0], &tail, t, step_tol)?;
    est.error += profile_error;
    Ok(est)
}

const CHEB_N: usize = 17;
/// Dyadic panels `[t/2^{j+1}, t/2^j]` used before the last panel `[0, t/2^J]`.
const GRADING_LEVELS: usize = 50;
const MAX_SPLIT_DEPTH: usize = 24;

#[derive(Clone, Debug)]
struct ChebPanel {
    a: f64,
    b: f64,
    coef: [f64; CHEB_N],
}

impl ChebPanel {
    fn eval(&self, s: f64) -> f64 {
        let x = (2.0 * s - self.a - self.b) / (self.b - self.a);
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for k in (1..CHEB_N).rev() {
            let b0 = 2.0 * x * b1 - b2 + self.coef[k];
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * self.coef[0]
    }
}

fn cheb_nodes() -> [f64; CHEB_N] {
    let mut x = [0.0; CHEB_N];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * CHEB_N) as f64).cos();
    }
    x
}

fn cheb_coefficients(vals: &[f64; CHEB_N]) -> [f64; CHEB_N] {
    let mut c = [0.0; CHEB_N];
    let n = CHEB_N as f64;
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, v) in vals.iter().enumerate() {
            s += v * ((k * (2 * j + 1)) as f64 * std::f64::consts::PI / (2.0 * n)).cos();
        }
        *ck = 2.0 * s / n;
    }
    c
}

/// A partial convolution tabulated on `(0, t_max]` as `s^{-α}·φ(s)` with `φ`
/// piecewise Chebyshev.
#[derive(Clone, Debug)]
pub struct Profile {
    panels: Vec<ChebPanel>,
    alpha: f64,
    t_max: f64,
    /// Estimated sup-norm error of `φ` times `t_max`, i.e. an L¹ bound.
    pub error: f64,
}

impl Profile {
    /// Tabulates `f * g` on `(0, t_max]`.
    pub fn convolve(f: &TimeFactor, g: &TimeFactor, t_max: f64, tol: f64) -> Result<Profile> {
        let alpha = match (f.power(), g.power()) {
            (Some(a), Some(b)) => (a + b - 1.0).max(0.0),
            _ => 0.0,
        };
        if f.zero || g.zero {
            return Profile::tabulate(|_| Ok(0.0), alpha, t_max, tol);
        }
        let point_tol = tol / (4.0 * t_max.max(1.0));
        Profile::tabulate(|s| Ok(conv2(f, g, s, point_tol)?.value), alpha, t_max, tol)
    }

    /// Tabulates `h` on `(0, t_max]`, assuming `h(s) = O(s^{-alpha})` as
    /// `s → 0` with `0 ≤ alpha < 1`. `tol` bounds the L¹ error on `(0, t_max]`.
    pub fn tabulate(
        h: impl Fn(f64) -> Result<f64>,
        alpha: f64,
        t_max: f64,
        tol: f64,
    ) -> Result<Profile> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("profile needs t_max > 0, got {t_max}")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!(
                "profile exponent must lie in [0, 1), got {alpha}"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be > 0, got {tol}")));
        }
        let point_tol = tol / (4.0 * t_max.max(1.0));
        let phi = |s: f64| -> Result<f64> {
            let v = h(s)?;
            Ok(if alpha > 0.0 { v * s.powf(alpha) } else { v })
        };
        let nodes = cheb_nodes();
        let mut panels = Vec::new();
        let mut max_err: f64 = 0.0;
        let mut hi = t_max;
        for level in 0..=GRADING_LEVELS {
            let lo = if level == GRADING_LEVELS { 0.0 } else { 0.5 * hi };
            let before = panels.len();
            build_panel(&phi, &nodes, lo, hi, point_tol, 0, &mut panels, &mut max_err)?;
            let flat = panels[before..].iter().all(|p| p.coef.iter().all(|&c| c == 0.0));
            if flat && alpha == 0.0 && level < GRADING_LEVELS {
                // vanished to underflow: the rest towards 0 is zero as well
                panels.push(ChebPanel {
                    a: 0.0,
                    b: lo,
                    coef: [0.0; CHEB_N],
                });
                break;
            }
            hi = lo;
        }
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        Ok(Profile {
            panels,
            alpha,
            t_max,
            error: (max_err + point_tol) * t_max,
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        if !(s > 0.0) || s > self.t_max * (1.0 + 1e-12) {
            return 0.0;
        }
        let i = self.panels.partition_point(|p| p.b < s).min(self.panels.len() - 1);
        let v = self.panels[i].eval(s);
        if self.alpha > 0.0 {
            v * s.powf(-self.alpha)
        } else {
            v
        }
    }

    pub fn to_factor(&self) -> TimeFactor {
        let p = Arc::new(self.clone());
        let f = move |s: f64| p.eval(s);
        if self.alpha > 0.0 {
            TimeFactor {
                eval: Arc::new(f),
                sing: Singularity::InversePow { alpha: self.alpha },
                zero: false,
            }
        } else {
            TimeFactor::regular(f)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_panel(
    phi: &impl Fn(f64) -> Result<f64>,
    nodes: &[f64; CHEB_N],
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    out: &mut Vec<ChebPanel>,
    max_err: &mut f64,
) -> Result<()> {
    let mut vals = [0.0; CHEB_N];
    for (v, x) in vals.iter_mut().zip(nodes) {
        *v = phi(0.5 * (a + b) + 0.5 * (b - a) * x)?;
    }
    let coef = cheb_coefficients(&vals);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = coef[CHEB_N - 1].abs() + coef[CHEB_N - 2].abs() + coef[CHEB_N - 3].abs();
    if tail <= tol.max(1e-14 * scale) || depth >= MAX_SPLIT_DEPTH {
        if depth >= MAX_SPLIT_DEPTH && tail > tol.max(1e-14 * scale) {
            return Err(Error::Quadrature(format!(
                "profile does not resolve on [{a:e}, {b:e}] (tail {tail:e})"
            )));
        }
        *max_err = max_err.max(tail);
        out.push(ChebPanel { a, b, coef });
        return Ok(());
    }
    let m = 0.5 * (a + b);
    build_panel(phi, nodes, a, m, tol, depth + 1, out, max_err)?;
    build_panel(phi, nodes, m, b, tol, depth + 1, out, max_err)
}
