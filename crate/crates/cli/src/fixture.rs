// SPDX-License-Identifier: Apache-2.0

//! Bundled graph and interval fixtures with closed-form references.

use std::path::Path;

use heatglue::{Decomposition, ExpMix, Graph};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefKind {
    /// `K^X(u, v | t)`.
    Heat,
    /// `K^{X,D}(u, v | t)` with `D` the fixture's `dirichlet` set.
    Dirichlet,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub kind: RefKind,
    pub u: String,
    pub v: String,
    pub kernel: ExpMix,
}

/// Graph or decomposition JSON, optionally with reference kernels.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFixture {
    #[serde(default)]
    pub name: String,
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub interface: Option<Vec<String>>,
    #[serde(default)]
    pub side1: Option<Vec<String>>,
    #[serde(default)]
    pub side2: Option<Vec<String>>,
    #[serde(default)]
    pub dirichlet: Vec<String>,
    #[serde(default)]
    pub references: Vec<Reference>,
}

impl GraphFixture {
    pub fn graph(&self) -> Result<Graph, CliError> {
        Ok(Graph::new(self.vertices.clone(), &self.edges)?)
    }

    pub fn decomposition(&self) -> Result<Decomposition, CliError> {
        let y = self
            .interface
            .as_ref()
            .ok_or_else(|| CliError::Input(format!("fixture {:?} has no interface", self.name)))?;
        let g = self.graph()?;
        Ok(Decomposition::from_labels(
            &g,
            y,
            self.side1.as_deref(),
            self.side2.as_deref(),
        )?)
    }

    pub fn references(&self, kind: RefKind) -> impl Iterator<Item = &Reference> {
        self.references.iter().filter(move |r| r.kind == kind)
    }

    pub fn reference(&self, kind: RefKind, u: &str, v: &str) -> Option<&ExpMix> {
        self.references(kind).find(|r| r.u == u && r.v == v).map(|r| &r.kernel)
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalCase {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    /// `K^{L₁+L₂}(L₁+x, L₁+y | t) − K^{L₂}(x, y | t)`.
    pub reference: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalFixture {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub cases: Vec<IntervalCase>,
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_graph(path: &Path) -> Result<GraphFixture, CliError> {
    let mut f: GraphFixture = load(path)?;
    if f.name.is_empty() {
        f.name = stem(path);
    }
    Ok(f)
}

pub fn load_interval(path: &Path) -> Result<IntervalFixture, CliError> {
    let mut f: IntervalFixture = load(path)?;
    if f.name.is_empty() {
        f.name = stem(path);
    }
    Ok(f)
}
