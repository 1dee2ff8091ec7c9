//! Error type shared across the crate.

use crate::fock::Party;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("basis capacity exceeded: {needed} states > configured maximum {max}")]
    Capacity { needed: u128, max: u64 },

    #[error("unsupported dimension {0}: need 2 or an odd prime")]
    UnsupportedDimension(usize),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("operator does not conserve photon number for party {0:?}")]
    NotNumberConserving(Party),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("zero-norm state")]
    ZeroNorm,

    #[error("series did not converge within {0} terms")]
    Convergence(usize),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("scan failed: {0}")]
    Scan(String),

    #[error("parse error: {0}")]
    Parse(String),
}
