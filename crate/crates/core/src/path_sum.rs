// SPDX-License-Identifier: Apache-2.0

//! Path-sum expansions of graph heat kernels.
//!
//! The weight of a path `(v₀,…,v_k)` is the simplex convolution of
//! `e^{-t·val(vᵢ)}`, so it depends only on the multiset of valencies along the
//! path. Sums over long paths are therefore accumulated per multiset (with an
//! integer path count) instead of path by path; [`enumerate`] still lists
//! individual paths for inspection and small cutoffs.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::expmix::{ln_factorial, simplex_convolve, ExpMix, Neumaier};
use crate::graph_heat::{poisson_tail, Decomposition, Graph, KernelMatrix};
use crate::{Error, Result};

/// Default cap on path length for enumeration and truncated sums.
pub const DEFAULT_CAP: usize = 24;

/// A walk with distinct consecutive vertices, stored as vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Path {
    vertices: Vec<usize>,
}

impl Path {
    pub fn new(g: &Graph, vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("a path has at least one vertex".into()));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= g.n()) {
            return Err(Error::InvalidInput(format!("vertex index {v} out of range")));
        }
        for w in vertices.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return Err(Error::InvalidInput(format!(
                    "{:?} and {:?} are not adjacent",
                    g.label(w[0]),
                    g.label(w[1])
                )));
            }
        }
        Ok(Path { vertices })
    }

    pub fn from_labels<S: AsRef<str>>(g: &Graph, labels: &[S]) -> Result<Self> {
        Path::new(g, g.indices_of(labels)?)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of edges.
    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        self.vertices[self.vertices.len() - 1]
    }

    /// `γ̄`: the last vertex dropped (empty for a length-0 path).
    pub fn bar(&self) -> &[usize] {
        &self.vertices[..self.vertices.len() - 1]
    }

    /// `γ̲`: the first vertex dropped.
    pub fn underbar(&self) -> &[usize] {
        &self.vertices[1..]
    }

    /// Both endpoints dropped; empty for a single edge. `None` for length 0.
    pub fn interior(&self) -> Option<&[usize]> {
        (self.length() >= 1).then(|| &self.vertices[1..self.vertices.len() - 1])
    }

    /// `γ₁ * γ₂`, sharing the joint vertex.
    pub fn concat(&self, other: &Path) -> Result<Path> {
        if self.end() != other.start() {
            return Err(Error::InvalidInput("paths are not composable".into()));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(other.underbar());
        Ok(Path { vertices })
    }

    pub fn labels(&self, g: &Graph) -> Vec<String> {
        self.vertices.iter().map(|&v| g.label(v).to_string()).collect()
    }

    /// Splits at the first and last visit to `Y`: `γ = γ₁ * γ₂ * γ₃` with
    /// `γ₁ ∈ P′(u,y)`, `γ₂ ∈ P(y,y′)`, `γ₃ ∈ P′(y′,v)`. `None` if the path
    /// avoids `Y`.
    pub fn split_at_interface(&self, in_y: &[bool]) -> Option<(Path, Path, Path)> {
        let first = self.vertices.iter().position(|&v| in_y[v])?;
        let last = self.vertices.iter().rposition(|&v| in_y[v])?;
        let piece = |r: std::ops::RangeInclusive<usize>| Path {
            vertices: self.vertices[r].to_vec(),
        };
        Some((
            piece(0..=first),
            piece(first..=last),
            piece(last..=self.vertices.len() - 1),
        ))
    }
}

/// Path classes relative to an interface `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PathClass {
    /// All paths.
    P,
    /// Paths meeting `Y` only in their last vertex.
    PPrimeEnd,
    /// Paths meeting `Y` only in their first vertex.
    PPrimeStart,
    /// Paths of length ≥ 1 meeting `Y` only in both endpoints.
    PDoublePrime,
    /// Paths avoiding `Y`.
    Avoiding,
}

impl PathClass {
    fn start_ok(self, start_in_y: bool) -> bool {
        match self {
            PathClass::PPrimeStart | PathClass::PDoublePrime => start_in_y,
            PathClass::Avoiding => !start_in_y,
            PathClass::P | PathClass::PPrimeEnd => true,
        }
    }

    fn step_ok(self, w_in_y: bool) -> bool {
        match self {
            PathClass::PPrimeStart | PathClass::Avoiding => !w_in_y,
            _ => true,
        }
    }

    fn end_ok(self, v_in_y: bool, len: usize) -> bool {
        match self {
            PathClass::PPrimeEnd => v_in_y,
            PathClass::PDoublePrime => v_in_y && len >= 1,
            _ => true,
        }
    }

    /// Whether the path can no longer be extended.
    fn stops(self, v_in_y: bool, len: usize) -> bool {
        match self {
            PathClass::PPrimeEnd => v_in_y,
            PathClass::PDoublePrime => v_in_y && len >= 1,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathClassSpec {
    pub class: PathClass,
    pub from: usize,
    pub to: usize,
    pub interface: Vec<usize>,
    pub max_length: usize,
}

fn interface_mask(n: usize, y: &[usize]) -> Result<Vec<bool>> {
    let mut in_y = vec![false; n];
    for &v in y {
        if v >= n {
            return Err(Error::InvalidInput(format!("vertex index {v} out of range")));
        }
        in_y[v] = true;
    }
    Ok(in_y)
}

pub fn enumerate(g: &Graph, spec: &PathClassSpec) -> Result<Vec<Path>> {
    enumerate_with_cap(g, spec, DEFAULT_CAP)
}

/// All paths of the class up to `max_length`, ordered by length and then
/// lexicographically by vertex index.
pub fn enumerate_with_cap(g: &Graph, spec: &PathClassSpec, cap: usize) -> Result<Vec<Path>> {
    if spec.max_length > cap {
        return Err(Error::CapExceeded {
            cap,
            best_bound: f64::INFINITY,
        });
    }
    let n = g.n();
    if spec.from >= n || spec.to >= n {
        return Err(Error::InvalidInput("path endpoint out of range".into()));
    }
    let in_y = interface_mask(n, &spec.interface)?;
    let mut out = Vec::new();
    if spec.class.start_ok(in_y[spec.from]) {
        let mut cur = vec![spec.from];
        dfs(g, spec, &in_y, &mut cur, &mut out);
    }
    out.sort_by(|a: &Path, b: &Path| {
        (a.length(), &a.vertices).cmp(&(b.length(), &b.vertices))
    });
    let d = g.max_valency() as f64;
    for len in 0..=spec.max_length {
        let count = out.iter().filter(|p| p.length() == len).count();
        debug_assert!(count as f64 <= d.powi(len as i32) + 0.5);
    }
    Ok(out)
}

fn dfs(g: &Graph, spec: &PathClassSpec, in_y: &[bool], cur: &mut Vec<usize>, out: &mut Vec<Path>) {
    let v = *cur.last().expect("nonempty");
    let len = cur.len() - 1;
    if v == spec.to && spec.class.end_ok(in_y[v], len) {
        out.push(Path {
            vertices: cur.clone(),
        });
    }
    if len == spec.max_length || spec.class.stops(in_y[v], len) {
        return;
    }
    for &w in g.neighbors(v) {
        if spec.class.step_ok(in_y[w]) {
            cur.push(w);
            dfs(g, spec, in_y, cur, out);
            cur.pop();
        }
    }
}

/// Multiset of valencies: `key[d]` = number of vertices of valency `d`.
type Key = Vec<u8>;

fn key_of(g: &Graph, vertices: &[usize]) -> Key {
    let mut key = vec![0u8; g.max_valency() + 1];
    for &v in vertices {
        key[g.valency(v)] += 1;
    }
    key
}

/// For every path of the class starting at `from` with length ≤ `max_len`:
/// count of paths per (end vertex, valency multiset of all its vertices).
fn grouped(
    g: &Graph,
    class: PathClass,
    in_y: &[bool],
    from: usize,
    max_len: usize,
) -> Result<BTreeMap<(usize, Key), u128>> {
    let mut result: BTreeMap<(usize, Key), u128> = BTreeMap::new();
    if !class.start_ok(in_y[from]) {
        return Ok(result);
    }
    let mut frontier: BTreeMap<(usize, Key), u128> = BTreeMap::new();
    frontier.insert((from, key_of(g, &[from])), 1);
    let overflow = || Error::NonFinite("path count overflow".into());
    for len in 0..=max_len {
        let mut next: BTreeMap<(usize, Key), u128> = BTreeMap::new();
        for ((v, key), count) in frontier {
            if class.end_ok(in_y[v], len) {
                let slot = result.entry((v, key.clone())).or_insert(0);
                *slot = slot.checked_add(count).ok_or_else(overflow)?;
            }
            if len == max_len || class.stops(in_y[v], len) {
                continue;
            }
            for &w in g.neighbors(v) {
                if !class.step_ok(in_y[w]) {
                    continue;
                }
                let mut k2 = key.clone();
                k2[g.valency(w)] += 1;
                let slot = next.entry((w, k2)).or_insert(0);
                *slot = slot.checked_add(count).ok_or_else(overflow)?;
            }
        }
        frontier = next;
    }
    Ok(result)
}

/// `W` as a function of `t`, for a valency multiset; the empty multiset is
/// `δ(t)`.
fn mix_weight(key: &[u8], cache: &mut HashMap<Key, ExpMix>) -> Result<ExpMix> {
    if let Some(w) = cache.get(key) {
        return Ok(w.clone());
    }
    let factors: Vec<ExpMix> = key
        .iter()
        .enumerate()
        .flat_map(|(d, &c)| std::iter::repeat_n(ExpMix::exp(1.0, d as f64), c as usize))
        .collect();
    let w = if factors.is_empty() {
        ExpMix::delta(1.0)
    } else {
        simplex_convolve(&factors)?
    };
    cache.insert(key.to_vec(), w.clone());
    Ok(w)
}

/// `W(t)` for a valency multiset with at least one element.
///
/// With `q` the largest rate and `μⱼ = 1 − λⱼ/q ∈ [0,1]`,
/// `W = e^{-qt} t^k Σ_m (qt)^m h_m(μ)/(m+k)!`, where `h_m` are the complete
/// homogeneous symmetric polynomials. Every term is non-negative.
fn numeric_weight(key: &[u8], t: f64) -> f64 {
    let rates: Vec<f64> = key
        .iter()
        .enumerate()
        .flat_map(|(d, &c)| std::iter::repeat_n(d as f64, c as usize))
        .collect();
    let k = rates.len() - 1;
    let q = rates.iter().cloned().fold(0.0, f64::max);
    let ln_t = t.ln();
    if q == 0.0 {
        return (k as f64 * ln_t - ln_factorial(k as u32)).exp();
    }
    let qt = q * t;
    let m_max = (qt + 12.0 * qt.sqrt() + 60.0).ceil() as usize;
    let mut h = vec![0.0; m_max + 1];
    h[0] = 1.0;
    for &r in &rates {
        let mu = 1.0 - r / q;
        if mu == 0.0 {
            continue;
        }
        for m in 1..=m_max {
            h[m] += mu * h[m - 1];
        }
    }
    let ln_qt = qt.ln();
    let base = k as f64 * ln_t - qt;
    let mut sum = Neumaier::default();
    for (m, &hm) in h.iter().enumerate() {
        if hm == 0.0 {
            continue;
        }
        let ln_term = base + m as f64 * ln_qt - ln_factorial((m + k) as u32);
        sum.add(hm * ln_term.exp());
    }
    sum.total()
}

/// Exact weight `W(γ,t)` of a vertex sequence; the empty sequence is `δ(t)`.
pub fn weight_of(g: &Graph, vertices: &[usize]) -> Result<ExpMix> {
    mix_weight(&key_of(g, vertices), &mut HashMap::new())
}

/// `W(γ,t) = ∫_{Σtⱼ=t} Π e^{-tⱼ val(vⱼ)}` as ExpMix.
pub fn weight(g: &Graph, p: &Path) -> Result<ExpMix> {
    weight_of(g, p.vertices())
}

/// `W(γ,t)` at one `t > 0`, summed from non-negative terms.
pub fn weight_value(g: &Graph, p: &Path, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("weight needs t > 0, got {t}")));
    }
    Ok(numeric_weight(&key_of(g, p.vertices()), t))
}

/// How the truncation tail of [`pathsum_heat`] is bounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum TailMode {
    /// `Σ_{j>k} (d_max t)^j / j!`: at most `d_maxʲ` paths of length `j`,
    /// each of weight at most `tʲ/j!`.
    #[default]
    Crude,
    /// Uses the exact number of walks of length `k+1` from `u` and `d_max`
    /// per further step.
    WalkCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathSumOptions {
    pub cap: usize,
    pub tail: TailMode,
}

impl Default for PathSumOptions {
    fn default() -> Self {
        PathSumOptions {
            cap: DEFAULT_CAP,
            tail: TailMode::Crude,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSumValue {
    pub u: String,
    pub v: String,
    pub t: f64,
    pub value: f64,
    pub cutoff: usize,
    pub tail_bound: f64,
    /// Sum over paths of length ≤ j, for j = 0..=cutoff.
    #[serde(skip)]
    pub partial_sums: Vec<f64>,
}

fn heat_tail(g: &Graph, u: usize, t: f64, k: usize, mode: TailMode) -> f64 {
    let d = g.max_valency() as f64;
    match mode {
        TailMode::Crude => poisson_tail(d * t, k + 1),
        TailMode::WalkCount => {
            if d == 0.0 {
                return 0.0;
            }
            // walks of length k+1 from u
            let mut w = vec![0.0; g.n()];
            w[u] = 1.0;
            for _ in 0..=k {
                let mut next = vec![0.0; g.n()];
                for (v, &x) in w.iter().enumerate() {
                    for &nb in g.neighbors(v) {
                        next[nb] += x;
                    }
                }
                w = next;
            }
            let count: f64 = w.iter().sum();
            let ln = count.ln() - (k + 1) as f64 * d.ln();
            if count == 0.0 {
                0.0
            } else {
                ln.exp() * poisson_tail(d * t, k + 1)
            }
        }
    }
}

/// `K^X(u,v|t)` as a truncated path sum with tail below `eps`.
pub fn pathsum_heat(g: &Graph, u: usize, v: usize, t: f64, eps: f64) -> Result<PathSumValue> {
    pathsum_heat_with(g, u, v, t, eps, &PathSumOptions::default())
}

pub fn pathsum_heat_with(
    g: &Graph,
    u: usize,
    v: usize,
    t: f64,
    eps: f64,
    opts: &PathSumOptions,
) -> Result<PathSumValue> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("path sum needs t > 0, got {t}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("path sum needs eps > 0, got {eps}")));
    }
    if u >= g.n() || v >= g.n() {
        return Err(Error::InvalidInput("vertex index out of range".into()));
    }
    let mut cutoff = None;
    for k in 0..=opts.cap {
        if heat_tail(g, u, t, k, opts.tail) < eps {
            cutoff = Some(k);
            break;
        }
    }
    let Some(k) = cutoff else {
        return Err(Error::CapExceeded {
            cap: opts.cap,
            best_bound: heat_tail(g, u, t, opts.cap, opts.tail),
        });
    };
    let groups = grouped(g, PathClass::P, &vec![false; g.n()], u, k)?;
    let mut by_len = vec![Neumaier::default(); k + 1];
    for ((end, key), count) in &groups {
        if *end == v {
            let len = key.iter().map(|&c| c as usize).sum::<usize>() - 1;
            by_len[len].add(*count as f64 * numeric_weight(key, t));
        }
    }
    let mut partial_sums = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    for s in &by_len {
        acc += s.total();
        partial_sums.push(acc);
    }
    Ok(PathSumValue {
        u: g.label(u).to_string(),
        v: g.label(v).to_string(),
        t,
        value: acc,
        cutoff: k,
        tail_bound: heat_tail(g, u, t, k, opts.tail),
        partial_sums,
    })
}

/// Operators rebuilt from path sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Operator {
    /// `ε(u,y) = Σ_{γ∈P′(u,y)} W(γ̄)`
    Extension,
    /// `K(y₁,y₂) = Σ_{γ∈P(y₁,y₂)} W(γ)`
    Interface,
    /// `𝔻′(y₁,y₂) = Σ_{γ∈P″(y₁,y₂)} W(interior of γ)`
    DnPrime,
}

#[derive(Clone, Debug)]
pub struct PathSumOperator {
    pub which: Operator,
    /// Exact time dependence. Long paths give high-power ExpMix weights
    /// that cancel at small `t`; use [`PathSumOperator::evaluate`] for values.
    pub kernel: KernelMatrix,
    pub max_length: usize,
    d_max: f64,
    /// (row, column, trimmed valency multiset, path count)
    groups: Vec<(usize, usize, Key, u128)>,
}

impl PathSumOperator {
    /// Pointwise values at `t > 0` (atoms excluded), with every path weight
    /// summed from non-negative terms.
    pub fn evaluate(&self, t: f64) -> Result<crate::symlin::Matrix> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("evaluation needs t > 0, got {t}")));
        }
        let (nr, nc) = (self.kernel.nrows(), self.kernel.ncols());
        let mut acc = vec![Neumaier::default(); nr * nc];
        for (i, j, key, count) in &self.groups {
            if key.iter().any(|&c| c > 0) {
                acc[i * nc + j].add(*count as f64 * numeric_weight(key, t));
            }
        }
        Ok(crate::symlin::Matrix::from_fn(nr, nc, |i, j| acc[i * nc + j].total()))
    }

    /// Bound on `|exact − truncated|` for every entry at time `t` (atoms
    /// excluded, they are always complete once `max_length ≥ 1`).
    pub fn tail_bound(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("tail bound needs t > 0, got {t}")));
        }
        let (d, l) = (self.d_max, self.max_length);
        let x = d * t;
        Ok(match self.which {
            Operator::Interface => poisson_tail(x, l + 1),
            // paths of length j > L, trimmed to length j−1
            Operator::Extension => d * poisson_tail(x, l),
            // paths of length j > L, trimmed to length j−2
            Operator::DnPrime if l == 0 => f64::INFINITY,
            Operator::DnPrime => d * d * poisson_tail(x, l - 1),
        })
    }
}

/// Extension, interface or `𝔻′` kernel of a decomposition from path sums over
/// paths of length at most `max_length`.
pub fn pathsum_operators(d: &Decomposition, which: Operator, max_length: usize) -> Result<PathSumOperator> {
    pathsum_operators_with_cap(d, which, max_length, DEFAULT_CAP)
}

pub fn pathsum_operators_with_cap(
    d: &Decomposition,
    which: Operator,
    max_length: usize,
    cap: usize,
) -> Result<PathSumOperator> {
    if max_length > cap {
        return Err(Error::CapExceeded {
            cap,
            best_bound: f64::INFINITY,
        });
    }
    let g = d.graph();
    let n = g.n();
    let y = d.interface_indices();
    if y.is_empty() {
        return Err(Error::InvalidInput("path-sum operators need a nonempty Y".into()));
    }
    let in_y = interface_mask(n, &y)?;
    let labels = |idx: &[usize]| -> Vec<String> { idx.iter().map(|&v| g.label(v).to_string()).collect() };
    let (rows, class): (Vec<usize>, PathClass) = match which {
        Operator::Extension => ((0..n).collect(), PathClass::PPrimeEnd),
        Operator::Interface => (y.clone(), PathClass::P),
        Operator::DnPrime => (y.clone(), PathClass::PDoublePrime),
    };
    let mut cache = HashMap::new();
    let mut groups = Vec::new();
    let mut entries = vec![Vec::<ExpMix>::new(); rows.len() * y.len()];
    for (i, &u) in rows.iter().enumerate() {
        for ((end, key), count) in grouped(g, class, &in_y, u, max_length)? {
            let Some(j) = y.iter().position(|&c| c == end) else {
                continue;
            };
            let mut trimmed = key;
            match which {
                Operator::Extension => trimmed[g.valency(end)] -= 1,
                Operator::Interface => {}
                Operator::DnPrime => {
                    trimmed[g.valency(u)] -= 1;
                    trimmed[g.valency(end)] -= 1;
                }
            }
            let w = mix_weight(&trimmed, &mut cache)?;
            entries[i * y.len() + j].push(w.scale(count as f64));
            groups.push((i, j, trimmed, count));
        }
    }
    let entries = entries.iter().map(ExpMix::sum).collect();
    Ok(PathSumOperator {
        which,
        kernel: KernelMatrix::new(labels(&rows), labels(&y), entries)?,
        max_length,
        d_max: g.max_valency() as f64,
        groups,
    })
}

/// Largest deviation over a time grid between `W(γ₁*γ₂)` and both of
/// `W(γ̄₁)*W(γ₂)` and `W(γ₁)*W(γ̲₂)`.
pub fn split_check(g: &Graph, p1: &Path, p2: &Path) -> Result<f64> {
    let joined = weight(g, &p1.concat(p2)?)?;
    let left = weight_of(g, p1.bar())?.convolve(&weight(g, p2)?)?;
    let right = weight(g, p1)?.convolve(&weight_of(g, p2.underbar())?)?;
    let mut worst: f64 = (left.atom() - joined.atom()).abs().max((right.atom() - joined.atom()).abs());
    for t in [0.05, 0.3, 1.0, 2.5, 6.0] {
        let j = joined.evaluate(t)?;
        worst = worst.max((left.evaluate(t)? - j).abs()).max((right.evaluate(t)? - j).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
