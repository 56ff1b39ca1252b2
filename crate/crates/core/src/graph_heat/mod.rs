// SPDX-License-Identifier: Apache-2.0

//! Heat kernels, Green's matrices and Dirichlet-to-Neumann operators on finite
//! graphs, with exact (ExpMix) time dependence, and the two gluing formulas.

mod graph;
mod kernel_matrix;
mod series;

pub use graph::{Decomposition, Graph, Side};
pub use kernel_matrix::KernelMatrix;
pub use series::{glue_ii, interface_kernel_series, SeriesKernel, SeriesValue};
pub(crate) use series::poisson_tail;

use crate::expmix::{ExpMix, ExpTerm};
use crate::symlin::{self, Matrix, SymMatrix};
use crate::{Error, Result};

/// Coefficients at or below this size are rounding residue of the
/// eigenvector products and are dropped from spectral kernels.
const SPECTRAL_PRUNE: f64 = 1e-15;

/// `e^{-tL}` for a symmetric positive semidefinite `L`, one ExpMix per entry.
pub(crate) fn spectral_kernel(labels: &[String], l: &SymMatrix) -> Result<KernelMatrix> {
    let n = l.dim();
    if n == 0 {
        return KernelMatrix::new(vec![], vec![], vec![]);
    }
    let d = symlin::eigh(l)?;
    let floor = 1e-12 * (1.0 + l.as_matrix().amax());
    let mut rates = Vec::with_capacity(n);
    for &w in &d.eigenvalues {
        if w < -floor {
            return Err(Error::InvalidInput(format!(
                "generator has negative eigenvalue {w}"
            )));
        }
        rates.push(w.max(0.0));
    }
    let q = &d.eigenvectors;
    let mut entries = vec![ExpMix::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let terms: Vec<ExpTerm> = (0..n)
                .map(|k| ExpTerm::new(q[(i, k)] * q[(j, k)], 0, rates[k]))
                .collect();
            let mix = ExpMix::new(0.0, terms)?.prune(SPECTRAL_PRUNE);
            entries[j * n + i] = mix.clone();
            entries[i * n + j] = mix;
        }
    }
    KernelMatrix::new(labels.to_vec(), labels.to_vec(), entries)
}

/// `Δ = D − A`.
pub fn laplacian(g: &Graph) -> SymMatrix {
    g.laplacian()
}

/// `K^X(t) = e^{-tΔ}` on all vertex pairs.
pub fn heat_kernel(g: &Graph) -> Result<KernelMatrix> {
    spectral_kernel(g.labels(), &g.laplacian())
}

fn complement(n: usize, y: &[usize]) -> Result<Vec<usize>> {
    let mut in_y = vec![false; n];
    for &v in y {
        if v >= n {
            return Err(Error::InvalidInput(format!("vertex index {v} out of range")));
        }
        if in_y[v] {
            return Err(Error::InvalidInput(format!("vertex index {v} repeated")));
        }
        in_y[v] = true;
    }
    Ok((0..n).filter(|&v| !in_y[v]).collect())
}

/// `Δ^{X,Y}`: the `X∖Y` block of `Δ^X`, valencies counted in all of `X`.
pub fn relative_laplacian(g: &Graph, y: &[usize]) -> Result<(Vec<usize>, SymMatrix)> {
    let rest = complement(g.n(), y)?;
    let block = symlin::block(g.laplacian().as_matrix(), &rest, &rest)?;
    Ok((rest, SymMatrix::new(block)?))
}

/// `K^{X,Y}(t) = e^{-tΔ^{X,Y}}` on `X∖Y`, extended by zero to rows and
/// columns in `Y`. Indexed by all vertices of `g`.
pub fn relative_heat_kernel(g: &Graph, y: &[usize]) -> Result<KernelMatrix> {
    let (rest, lap) = relative_laplacian(g, y)?;
    if rest.is_empty() {
        return Err(Error::InvalidInput(
            "relative kernel needs a vertex outside Y".into(),
        ));
    }
    let labels: Vec<String> = rest.iter().map(|&v| g.label(v).to_string()).collect();
    let inner = spectral_kernel(&labels, &lap)?;
    let n = g.n();
    let mut entries = vec![ExpMix::zero(); n * n];
    for (a, &u) in rest.iter().enumerate() {
        for (b, &v) in rest.iter().enumerate() {
            entries[u * n + v] = inner.get(a, b).clone();
        }
    }
    KernelMatrix::new(g.labels().to_vec(), g.labels().to_vec(), entries)
}

/// `G = (Δ + m²)⁻¹`.
pub fn green(g: &Graph, m2: f64) -> Result<Matrix> {
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::Domain(format!("green needs m² > 0, got {m2}")));
    }
    let d = symlin::eigh(&g.laplacian())?;
    symlin::spectral_apply(&d, |w| 1.0 / (w + m2))
}

/// `ε^{Y,X}(t)`: rows are all vertices of `g`, columns the vertices of `y` in
/// the given order. Off `Y` it is `K^{X,Y}(t)·A|_{(X∖Y)×Y}`; on `Y` it is
/// `δ(t)` times the identity.
pub fn extension_kernel(g: &Graph, y: &[usize]) -> Result<KernelMatrix> {
    if y.is_empty() {
        return Err(Error::InvalidInput("extension needs a nonempty Y".into()));
    }
    let rel = relative_heat_kernel(g, y)?;
    let n = g.n();
    let ny = y.len();
    let mut in_y = vec![None; n];
    for (c, &v) in y.iter().enumerate() {
        in_y[v] = Some(c);
    }
    let mut entries = Vec::with_capacity(n * ny);
    for u in 0..n {
        for (c, &yv) in y.iter().enumerate() {
            let mix = match in_y[u] {
                Some(cu) => ExpMix::delta(if cu == c { 1.0 } else { 0.0 }),
                None => ExpMix::sum(
                    g.neighbors(yv)
                        .iter()
                        .filter(|&&x| in_y[x].is_none())
                        .map(|&x| rel.get(u, x)),
                ),
            };
            entries.push(mix);
        }
    }
    let cols = y.iter().map(|&v| g.label(v).to_string()).collect();
    KernelMatrix::new(g.labels().to_vec(), cols, entries)
}

/// Total discrete Dirichlet-to-Neumann operator of two graphs glued along `Y`.
#[derive(Clone, Debug)]
pub struct DnTotal {
    /// `𝔻^{Y,X₁} + 𝔻^{Y,X₂} − (Δ^Y + m²)`.
    pub combined: Matrix,
    /// `((G^X)_{YY})⁻¹` on the glued graph.
    pub glued: Matrix,
    pub residual: f64,
}

/// `𝔻^{Y,X} = ((G^X)_{YY})⁻¹`, with `y` given as indices into `g`.
pub fn dn_operator(g: &Graph, y: &[usize], m2: f64) -> Result<Matrix> {
    let gx = green(g, m2)?;
    symlin::inverse(&symlin::block(&gx, y, y)?)
}

/// Builds `𝔻` from the two halves and checks it against the glued graph.
/// `g1` and `g2` must share exactly the labels in `y` and agree on the edges
/// inside `Y`.
pub fn dn_total<S: AsRef<str>>(g1: &Graph, g2: &Graph, y: &[S], m2: f64) -> Result<DnTotal> {
    let y1 = g1.indices_of(y)?;
    let y2 = g2.indices_of(y)?;
    let shared = g1
        .labels()
        .iter()
        .filter(|l| g2.index_of(l).is_some())
        .count();
    if shared != y.len() {
        return Err(Error::Graph(
            "the two graphs must share exactly the interface vertices".into(),
        ));
    }
    let yg1 = g1.induced(&y1);
    let yg2 = g2.induced(&y2);
    if yg1 != yg2 {
        return Err(Error::Graph(
            "the two graphs disagree on edges inside the interface".into(),
        ));
    }
    let d1 = dn_operator(g1, &y1, m2)?;
    let d2 = dn_operator(g2, &y2, m2)?;
    let ny = y.len();
    let dy = yg1.laplacian().into_matrix() + Matrix::identity(ny, ny) * m2;
    let combined = d1 + d2 - dy;

    // glued graph: g1's vertices, then g2's non-interface vertices
    let mut labels: Vec<String> = g1.labels().to_vec();
    labels.extend(
        g2.labels()
            .iter()
            .filter(|l| g1.index_of(l).is_none())
            .cloned(),
    );
    let mut edges: Vec<(String, String)> = g1
        .edges()
        .into_iter()
        .map(|(a, b)| (g1.label(a).to_string(), g1.label(b).to_string()))
        .collect();
    for (a, b) in g2.edges() {
        let (la, lb) = (g2.label(a), g2.label(b));
        let inside = y1.contains(&g1.index_of(la).unwrap_or(usize::MAX))
            && y1.contains(&g1.index_of(lb).unwrap_or(usize::MAX));
        if !inside {
            edges.push((la.to_string(), lb.to_string()));
        }
    }
    let glued_graph = Graph::new(labels, &edges)?;
    let yg = glued_graph.indices_of(y)?;
    let glued = dn_operator(&glued_graph, &yg, m2)?;
    let residual = (&combined - &glued).amax();
    Ok(DnTotal {
        combined,
        glued,
        residual,
    })
}

/// `K^X|_{Y×Y}`, read off the heat kernel of the assembled graph.
pub fn interface_kernel(d: &Decomposition) -> Result<KernelMatrix> {
    d.require_interface()?;
    let k = heat_kernel(d.graph())?;
    let y = d.interface_indices();
    Ok(k.submatrix(&y, &y))
}

/// Relative kernel and extension kernel of one side, embedded in the index
/// space of the whole decomposition (rows: all vertices; `Y` columns for the
/// extension).
fn side_pieces(d: &Decomposition, side: Side) -> Result<(KernelMatrix, KernelMatrix)> {
    let part = d.part(side);
    let ny = d.interface().len();
    // positions of Y inside the part, and the part's vertices in global indices
    let (y_local, global): (Vec<usize>, Vec<usize>) = match side {
        Side::One => (d.interface().collect(), (0..d.side2().start).collect()),
        Side::Two => (
            (0..ny).collect(),
            d.interface().chain(d.side2()).collect(),
        ),
    };
    let n = d.graph().n();
    if part.n() == ny {
        // no interior on this side: nothing but the prescribed boundary values
        let labels = d.graph().labels().to_vec();
        let y_labels: Vec<String> =
            d.interface().map(|v| d.graph().label(v).to_string()).collect();
        let rel = KernelMatrix::new(labels.clone(), labels.clone(), vec![ExpMix::zero(); n * n])?;
        let ext = KernelMatrix::from_fn(labels, y_labels, |u, c| {
            Ok(ExpMix::delta(if u == d.interface().start + c { 1.0 } else { 0.0 }))
        })?;
        return Ok((rel, ext));
    }
    let rel = relative_heat_kernel(&part, &y_local)?;
    let ext = extension_kernel(&part, &y_local)?;
    let labels = d.graph().labels().to_vec();
    let y_labels: Vec<String> = d.interface().map(|v| d.graph().label(v).to_string()).collect();
    let mut rel_entries = vec![ExpMix::zero(); n * n];
    let mut ext_entries = vec![ExpMix::zero(); n * ny];
    for (a, &u) in global.iter().enumerate() {
        for (b, &v) in global.iter().enumerate() {
            rel_entries[u * n + v] = rel.get(a, b).clone();
        }
        for c in 0..ny {
            ext_entries[u * ny + c] = ext.get(a, c).clone();
        }
    }
    Ok((
        KernelMatrix::new(labels.clone(), labels.clone(), rel_entries)?,
        KernelMatrix::new(labels, y_labels, ext_entries)?,
    ))
}

/// Pieces of the gluing formulas built only from `X₁`, `X₂` and `Y`:
/// the block-diagonal Dirichlet kernel `K^{X,Y}` and the extension kernel
/// `ε` over all vertices (identity atom on `Y` rows).
pub fn glue_pieces(d: &Decomposition) -> Result<(KernelMatrix, KernelMatrix)> {
    d.require_interface()?;
    let (rel1, ext1) = side_pieces(d, Side::One)?;
    let (rel2, ext2) = side_pieces(d, Side::Two)?;
    let rel = rel1.add(&rel2)?;
    // Y rows are δ·I in both sides' extension kernels; keep one copy
    let n = d.graph().n();
    let ny = d.interface().len();
    let mut entries = Vec::with_capacity(n * ny);
    for u in 0..n {
        for c in 0..ny {
            let e = if d.side2().contains(&u) {
                ext2.get(u, c)
            } else {
                ext1.get(u, c)
            };
            entries.push(e.clone());
        }
    }
    let ext = KernelMatrix::new(ext1.rows().to_vec(), ext1.cols().to_vec(), entries)?;
    Ok((rel, ext))
}

/// `𝐋⁻¹[Λ⁻¹] = diag e^{-t·val_X(y)}` on `Y×Y`.
pub fn lambda_inverse_kernel(d: &Decomposition) -> Result<KernelMatrix> {
    let g = d.graph();
    let labels = d.interface().map(|v| g.label(v).to_string()).collect();
    let diag = d
        .interface()
        .map(|v| ExpMix::exp(1.0, g.valency(v) as f64))
        .collect();
    KernelMatrix::diagonal(labels, diag)
}

/// `𝐋⁻¹[𝔻′](t) = δ(t)A^Y + Σᵢ Ĉᵢ K^{Xᵢ,Y}(t) B̂ᵢ` on `Y×Y`.
pub fn dn_prime_kernel(d: &Decomposition) -> Result<KernelMatrix> {
    let (rel, _) = glue_pieces(d)?;
    let g = d.graph();
    let y = d.interface_indices();
    let labels: Vec<String> = y.iter().map(|&v| g.label(v).to_string()).collect();
    // the relative kernel is block diagonal, so one sum over X∖Y covers both sides
    let outside: Vec<usize> = (0..g.n()).filter(|&v| !d.is_interface(v)).collect();
    KernelMatrix::from_fn(labels.clone(), labels, |a, b| {
        let (ya, yb) = (y[a], y[b]);
        let mut parts = vec![ExpMix::delta(if g.has_edge(ya, yb) { 1.0 } else { 0.0 })];
        for &x in outside.iter().filter(|&&x| g.has_edge(ya, x)) {
            for &x2 in outside.iter().filter(|&&x2| g.has_edge(x2, yb)) {
                parts.push(rel.get(x, x2).clone());
            }
        }
        Ok(ExpMix::sum(&parts))
    })
}

/// First gluing formula `K = K^{X,Y} + ε * K|_{YY} * εᵀ`, with the interface
/// kernel read off the assembled graph.
pub fn glue_i(d: &Decomposition) -> Result<KernelMatrix> {
    let iface = interface_kernel(d)?;
    glue_i_with(d, &iface)
}

/// First gluing formula with a caller-supplied interface kernel.
pub fn glue_i_with(d: &Decomposition, interface: &KernelMatrix) -> Result<KernelMatrix> {
    let (rel, ext) = glue_pieces(d)?;
    let ny = d.interface().len();
    if interface.nrows() != ny || interface.ncols() != ny {
        return Err(Error::InvalidInput(format!(
            "interface kernel must be {ny}x{ny}"
        )));
    }
    let correction = ext.convolve(interface)?.convolve(&ext.transpose())?;
    rel.add(&correction)
}

/// `G^{X,Y}` computed directly and through the Schur complement of `G^X`.
#[derive(Clone, Debug)]
pub struct SchurCut {
    /// `(Δ^{X,Y} + m²)⁻¹` on `X∖Y`.
    pub direct: Matrix,
    /// `A − B D⁻¹ C` from the blocks of `G^X`.
    pub schur: Matrix,
    pub residual: f64,
}

pub fn schur_cut(g: &Graph, y: &[usize], m2: f64) -> Result<SchurCut> {
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::Domain(format!("schur_cut needs m² > 0, got {m2}")));
    }
    if y.is_empty() {
        // nothing is cut: both routes are G^X itself
        let gx = green(g, m2)?;
        return Ok(SchurCut {
            direct: gx.clone(),
            schur: gx,
            residual: 0.0,
        });
    }
    let (rest, lap) = relative_laplacian(g, y)?;
    let k = rest.len();
    let shifted = SymMatrix::new(lap.into_matrix() + Matrix::identity(k, k) * m2)?;
    let direct = if k == 0 {
        Matrix::zeros(0, 0)
    } else {
        symlin::spd_inverse(&shifted)?
    };
    let gx = green(g, m2)?;
    let a = symlin::block(&gx, &rest, &rest)?;
    let b = symlin::block(&gx, &rest, y)?;
    let dinv = symlin::inverse(&symlin::block(&gx, y, y)?)?;
    let c = symlin::block(&gx, y, &rest)?;
    let schur = a - b * dinv * c;
    let residual = if k == 0 { 0.0 } else { (&direct - &schur).amax() };
    Ok(SchurCut {
        direct,
        schur,
        residual,
    })
}
