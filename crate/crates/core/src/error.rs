// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    /// Confluent convolution produced a power above the configured cap.
    #[error("power {power} exceeds max_power {max}")]
    PowerOverflow { power: u32, max: u32 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    /// Requested accuracy would need paths longer than the enumeration cap.
    #[error("path length cap {cap} exceeded; best achievable bound {best_bound:e}")]
    CapExceeded { cap: usize, best_bound: f64 },

    #[error("series truncation failed after {terms} terms; remaining bound {bound:e}")]
    Truncation { terms: usize, bound: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PowerOverflow { .. }
                | Error::NonFinite(_)
                | Error::NoConvergence(_)
                | Error::Singular(_)
                | Error::CapExceeded { .. }
                | Error::Truncation { .. }
                | Error::Quadrature(_)
        )
    }
}
