//! Wiener filtering for discrete-time systems whose signals and impulse
//! responses are stochastic distributions in the Kondratiev space.
//!
//! Random variables are lifted to Wick-multiplication operators on truncated
//! orthonormal bases of `H_k`; correlations become operator sequences, spectra
//! become elements of an operator-valued Wiener algebra, and the filters follow
//! from operator spectral factorization.

pub mod chaos;
pub mod error;
pub mod filters;
pub mod harness;
pub mod lift;
pub mod linalg;
pub mod opwiener;

pub use chaos::{KondratievElement, MultiIndex, TruncationSpec};
pub use error::{Result, WnsError};
pub use lift::{BasisEnumeration, OperatorMatrix, ProcessSpec};
pub use opwiener::OperatorLaurent;
