// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::symlin::{Matrix, SymMatrix};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct RawGraph {
    vertices: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

/// A finite simple undirected graph with labelled vertices.
///
/// Vertices keep their declared order; that order indexes every matrix built
/// from the graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct Graph {
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl TryFrom<RawGraph> for Graph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        Graph::new(raw.vertices, &raw.edges)
    }
}

impl From<Graph> for RawGraph {
    fn from(g: Graph) -> Self {
        let edges = g
            .edges()
            .into_iter()
            .map(|(a, b)| (g.labels[a].clone(), g.labels[b].clone()))
            .collect();
        RawGraph {
            vertices: g.labels,
            edges,
        }
    }
}

impl Graph {
    pub fn new<S: AsRef<str>>(labels: Vec<String>, edges: &[(S, S)]) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.as_str(), i).is_some() {
                return Err(Error::Graph(format!("duplicate vertex label {l:?}")));
            }
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index
                .get(a)
                .ok_or_else(|| Error::Graph(format!("edge endpoint {a:?} is not a vertex")))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| Error::Graph(format!("edge endpoint {b:?} is not a vertex")))?;
            pairs.push((ia, ib));
        }
        Graph::from_indices(labels, &pairs)
    }

    /// Builds from index pairs; rejects loops and repeated edges.
    pub fn from_indices(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        let mut seen = BTreeSet::new();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop at {:?}", labels[a])));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::Graph(format!(
                    "duplicate edge {:?}-{:?}",
                    labels[a], labels[b]
                )));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { labels, adj })
    }

    /// Vertices labelled `"0".."n-1"`.
    pub fn numbered(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Graph::from_indices((0..n).map(|i| i.to_string()).collect(), edges)
    }

    /// Path graph on `n` vertices labelled `first, first+1, …`.
    pub fn line(n: usize, first: usize) -> Self {
        let labels = (0..n).map(|i| (first + i).to_string()).collect();
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_indices(labels, &edges).expect("path graph is simple")
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Indices of the given labels, in the given order.
    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.index_of(l.as_ref())
                    .ok_or_else(|| Error::Graph(format!("unknown vertex {:?}", l.as_ref())))
            })
            .collect()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn valency(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_valency(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn adjacency(&self) -> Matrix {
        let n = self.n();
        let mut a = Matrix::zeros(n, n);
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                a[(i, j)] = 1.0;
            }
        }
        a
    }

    /// `Δ = D − A`.
    pub fn laplacian(&self) -> SymMatrix {
        let mut l = -self.adjacency();
        for i in 0..self.n() {
            l[(i, i)] = self.valency(i) as f64;
        }
        SymMatrix::new(l).expect("graph Laplacian is symmetric")
    }

    /// Induced subgraph on `keep`, vertices in the order given.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .filter_map(|(a, b)| Some((*pos.get(&a)?, *pos.get(&b)?)))
            .collect();
        Graph::from_indices(labels, &edges).expect("induced subgraph is simple")
    }

    /// Connected components of the subgraph induced on `within`, each sorted,
    /// ordered by smallest member.
    pub fn components_within(&self, within: &[usize]) -> Vec<Vec<usize>> {
        let allowed: BTreeSet<usize> = within.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &allowed {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if allowed.contains(&w) && seen.insert(w) {
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Erdős–Rényi graph on `n` numbered vertices.
    pub fn random<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        Graph::numbered(n, &edges).expect("random graph is simple")
    }
}

#[derive(Serialize, Deserialize)]
struct RawDecomposition {
    vertices: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    interface: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side1: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side2: Option<Vec<String>>,
}

/// A graph split as `X = X₁ ∪_Y X₂` with no edge between the two sides.
///
/// The stored graph is reordered as side1, then Y, then side2, keeping the
/// declared order inside each group, so those three groups are contiguous
/// index ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDecomposition", into = "RawDecomposition")]
pub struct Decomposition {
    graph: Graph,
    n1: usize,
    ny: usize,
}

impl TryFrom<RawDecomposition> for Decomposition {
    type Error = Error;

    fn try_from(raw: RawDecomposition) -> Result<Self> {
        let g = Graph::new(raw.vertices, &raw.edges)?;
        Decomposition::from_labels(&g, &raw.interface, raw.side1.as_deref(), raw.side2.as_deref())
    }
}

impl From<Decomposition> for RawDecomposition {
    fn from(d: Decomposition) -> Self {
        let side1 = d.side1().map(|i| d.graph.label(i).to_string()).collect();
        let side2 = d.side2().map(|i| d.graph.label(i).to_string()).collect();
        let interface = d.interface().map(|i| d.graph.label(i).to_string()).collect();
        let raw: RawGraph = d.graph.into();
        RawDecomposition {
            vertices: raw.vertices,
            edges: raw.edges,
            interface,
            side1: Some(side1),
            side2: Some(side2),
        }
    }
}

impl Decomposition {
    /// Splits `g` along `interface`. Missing sides are inferred: the component
    /// of `X∖Y` holding the earliest declared vertex becomes side1 and the rest
    /// side2 (or the complement of whichever side was given).
    pub fn from_labels<S: AsRef<str>>(
        g: &Graph,
        interface: &[S],
        side1: Option<&[S]>,
        side2: Option<&[S]>,
    ) -> Result<Self> {
        let y = g.indices_of(interface)?;
        let s1 = side1.map(|s| g.indices_of(s)).transpose()?;
        let s2 = side2.map(|s| g.indices_of(s)).transpose()?;
        Decomposition::from_indices(g, &y, s1.as_deref(), s2.as_deref())
    }

    pub fn from_indices(
        g: &Graph,
        interface: &[usize],
        side1: Option<&[usize]>,
        side2: Option<&[usize]>,
    ) -> Result<Self> {
        let n = g.n();
        let mut class = vec![None::<u8>; n];
        let mut mark = |set: &[usize], c: u8, name: &str| -> Result<()> {
            for &v in set {
                if v >= n {
                    return Err(Error::Graph(format!("{name} index {v} out of range")));
                }
                if class[v].is_some() {
                    return Err(Error::Graph(format!(
                        "vertex {:?} listed twice across interface and sides",
                        g.label(v)
                    )));
                }
                class[v] = Some(c);
            }
            Ok(())
        };
        mark(interface, 1, "interface")?;
        if let Some(s) = side1 {
            mark(s, 0, "side1")?;
        }
        if let Some(s) = side2 {
            mark(s, 2, "side2")?;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| class[v].is_none()).collect();
        match (side1.is_some(), side2.is_some()) {
            (true, true) => {
                if let Some(&v) = rest.first() {
                    return Err(Error::Graph(format!(
                        "vertex {:?} is in neither the interface nor a side",
                        g.label(v)
                    )));
                }
            }
            (true, false) => rest.iter().for_each(|&v| class[v] = Some(2)),
            (false, true) => rest.iter().for_each(|&v| class[v] = Some(0)),
            (false, false) => {
                let comps = g.components_within(&rest);
                for (k, comp) in comps.iter().enumerate() {
                    for &v in comp {
                        class[v] = Some(if k == 0 { 0 } else { 2 });
                    }
                }
            }
        }
        let class: Vec<u8> = class.into_iter().map(|c| c.expect("classified")).collect();
        for (a, b) in g.edges() {
            if class[a] != 1 && class[b] != 1 && class[a] != class[b] {
                return Err(Error::Graph(format!(
                    "edge {:?}-{:?} joins side1 to side2; the interface does not separate",
                    g.label(a),
                    g.label(b)
                )));
            }
        }
        let order: Vec<usize> = [0u8, 1, 2]
            .iter()
            .flat_map(|&c| {
                let class = &class;
                (0..n).filter(move |&v| class[v] == c)
            })
            .collect();
        let n1 = class.iter().filter(|&&c| c == 0).count();
        let ny = class.iter().filter(|&&c| c == 1).count();
        Ok(Decomposition {
            graph: g.induced(&order),
            n1,
            ny,
        })
    }

    /// Random separating decomposition: each vertex is put in side1, Y or side2
    /// uniformly (all three nonempty), then every pair not joining the two
    /// sides becomes an edge with probability `p`.
    pub fn random<R: Rng>(rng: &mut R, n_min: usize, n_max: usize, p: f64) -> Decomposition {
        assert!(n_min >= 3 && n_min <= n_max);
        loop {
            let n = rng.gen_range(n_min..=n_max);
            let class: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3u8)).collect();
            if !(0..3u8).all(|c| class.contains(&c)) {
                continue;
            }
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if class[a] != 1 && class[b] != 1 && class[a] != class[b] {
                        continue;
                    }
                    if rng.gen_bool(p) {
                        edges.push((a, b));
                    }
                }
            }
            let g = Graph::numbered(n, &edges).expect("simple");
            let pick = |c: u8| -> Vec<usize> { (0..n).filter(|&v| class[v] == c).collect() };
            let (s1, y, s2) = (pick(0), pick(1), pick(2));
            return Decomposition::from_indices(&g, &y, Some(&s1), Some(&s2))
                .expect("construction separates");
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn side1(&self) -> std::ops::Range<usize> {
        0..self.n1
    }

    pub fn interface(&self) -> std::ops::Range<usize> {
        self.n1..self.n1 + self.ny
    }

    pub fn side2(&self) -> std::ops::Range<usize> {
        self.n1 + self.ny..self.graph.n()
    }

    pub fn interface_indices(&self) -> Vec<usize> {
        self.interface().collect()
    }

    pub fn is_interface(&self, v: usize) -> bool {
        self.interface().contains(&v)
    }

    /// `X₁ = side1 ∪ Y` (first) or `X₂ = Y ∪ side2` (second), as induced graphs.
    /// In both the interface occupies a contiguous block.
    pub fn part(&self, which: Side) -> Graph {
        let keep: Vec<usize> = match which {
            Side::One => (0..self.n1 + self.ny).collect(),
            Side::Two => self.interface().chain(self.side2()).collect(),
        };
        self.graph.induced(&keep)
    }

    /// Graph induced on `Y`.
    pub fn interface_graph(&self) -> Graph {
        self.graph.induced(&self.interface_indices())
    }

    pub(crate) fn require_interface(&self) -> Result<()> {
        if self.ny == 0 {
            return Err(Error::InvalidInput("gluing needs a nonempty interface".into()));
        }
        if self.ny == self.graph.n() {
            return Err(Error::InvalidInput(
                "interface is the whole graph; there is nothing to glue".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    One,
    Two,
}
