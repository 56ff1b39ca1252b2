// SPDX-License-Identifier: Apache-2.0

//! Heat-kernel gluing and cutting.
//!
//! Finite graphs are handled exactly: every kernel is an [`expmix::ExpMix`],
//! a Dirac atom plus a finite sum of `t^k e^{-λt}` terms, so convolution in
//! time is closed-form. One-dimensional continua (rays, intervals, circles,
//! cylinders) are handled by truncated series with explicit tail bounds and
//! adaptive quadrature over time simplices.

pub mod expmix;
pub mod graph_heat;
pub mod heat1d;
pub mod path_sum;
pub mod quadsim;
pub mod symlin;

mod error;

pub use error::{Error, Result};
pub use expmix::{ExpMix, ExpTerm};
pub use graph_heat::{Decomposition, Graph, KernelMatrix};

