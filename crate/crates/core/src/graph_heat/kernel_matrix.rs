// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::expmix::ExpMix;
use crate::symlin::Matrix;
use crate::{Error, Result};

/// A labelled matrix of time kernels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelMatrix", into = "RawKernelMatrix")]
pub struct KernelMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    /// row-major
    entries: Vec<ExpMix>,
}

#[derive(Serialize, Deserialize)]
struct RawKernelMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    entries: Vec<Vec<ExpMix>>,
}

impl TryFrom<RawKernelMatrix> for KernelMatrix {
    type Error = Error;
    fn try_from(raw: RawKernelMatrix) -> Result<Self> {
        let entries = raw.entries.into_iter().flatten().collect();
        KernelMatrix::new(raw.rows, raw.cols, entries)
    }
}

impl From<KernelMatrix> for RawKernelMatrix {
    fn from(k: KernelMatrix) -> Self {
        let nc = k.cols.len().max(1);
        let entries = k.entries.chunks(nc).map(<[ExpMix]>::to_vec).collect();
        RawKernelMatrix {
            rows: k.rows,
            cols: k.cols,
            entries,
        }
    }
}

impl KernelMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, entries: Vec<ExpMix>) -> Result<Self> {
        if entries.len() != rows.len() * cols.len() {
            return Err(Error::InvalidInput(format!(
                "kernel matrix {}x{} needs {} entries, got {}",
                rows.len(),
                cols.len(),
                rows.len() * cols.len(),
                entries.len()
            )));
        }
        Ok(KernelMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_fn(
        rows: Vec<String>,
        cols: Vec<String>,
        mut f: impl FnMut(usize, usize) -> Result<ExpMix>,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for i in 0..rows.len() {
            for j in 0..cols.len() {
                entries.push(f(i, j)?);
            }
        }
        KernelMatrix::new(rows, cols, entries)
    }

    /// Constant diagonal matrix of kernels.
    pub fn diagonal(labels: Vec<String>, diag: Vec<ExpMix>) -> Result<Self> {
        let n = labels.len();
        if diag.len() != n {
            return Err(Error::InvalidInput("diagonal length mismatch".into()));
        }
        let mut entries = vec![ExpMix::zero(); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            entries[i * n + i] = d;
        }
        KernelMatrix::new(labels.clone(), labels, entries)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ExpMix {
        &self.entries[i * self.cols.len() + j]
    }

    /// Entry by row and column label.
    pub fn entry(&self, row: &str, col: &str) -> Option<&ExpMix> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        Some(self.get(i, j))
    }

    pub fn entries(&self) -> &[ExpMix] {
        &self.entries
    }

    /// Pointwise values at `t > 0`; atoms are not included.
    pub fn evaluate(&self, t: f64) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.nrows(), self.ncols());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                m[(i, j)] = self.get(i, j).evaluate(t)?;
            }
        }
        Ok(m)
    }

    /// Entrywise Laplace transform, atoms included.
    pub fn laplace(&self, s: f64) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.nrows(), self.ncols());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                m[(i, j)] = self.get(i, j).laplace(s)?;
            }
        }
        Ok(m)
    }

    pub fn transpose(&self) -> KernelMatrix {
        let (nr, nc) = (self.nrows(), self.ncols());
        let mut entries = Vec::with_capacity(nr * nc);
        for j in 0..nc {
            for i in 0..nr {
                entries.push(self.get(i, j).clone());
            }
        }
        KernelMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            entries,
        }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> KernelMatrix {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                entries.push(self.get(i, j).clone());
            }
        }
        KernelMatrix {
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            cols: cols.iter().map(|&j| self.cols[j].clone()).collect(),
            entries,
        }
    }

    pub fn add(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::InvalidInput("kernel matrix shapes differ".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        KernelMatrix::new(self.rows.clone(), self.cols.clone(), entries)
    }

    /// Matrix product with time convolution in place of multiplication.
    pub fn convolve(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        if self.ncols() != other.nrows() {
            return Err(Error::InvalidInput(format!(
                "cannot convolve {}x{} with {}x{}",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        KernelMatrix::from_fn(self.rows.clone(), other.cols.clone(), |i, j| {
            let mut parts = Vec::new();
            for l in 0..self.ncols() {
                let (a, b) = (self.get(i, l), other.get(l, j));
                if !a.is_zero() && !b.is_zero() {
                    parts.push(a.convolve(b)?);
                }
            }
            Ok(ExpMix::sum(&parts))
        })
    }

    /// Largest coefficient-wise difference over all entries.
    pub fn max_coef_diff(&self, other: &KernelMatrix) -> f64 {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_coef_diff(b))
            .fold(0.0, f64::max)
    }
}
