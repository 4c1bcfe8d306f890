//! Locally accurate tensor-network approximations for open 1D spin chains.
//!
//! Every construction has a dense counterpart in [`oracle`] so results can be
//! checked exactly on chains of up to a dozen sites.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cluster;
pub mod condmap;
pub mod error;
pub mod evolve;
pub mod fixtures;
pub mod interval;
pub mod linalg;
pub mod model;
pub mod mpo;
pub mod oracle;
pub mod response;
pub mod thermal;
pub mod verify;

pub use error::{Error, Result};
pub use interval::Interval;
pub use model::{ChainHamiltonian, ExtensiveObservable, Geometry, LocalTerm, ModelSpec, Pauli, PauliString};
pub use mpo::{CompressionReport, Mpo};
pub use oracle::{DenseGuard, DenseOperator, NormKind};
pub use num_complex::Complex64 as C64;

/// Crate version, recorded in every CLI summary.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
