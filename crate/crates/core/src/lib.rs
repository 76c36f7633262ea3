//! Spectral flow, relative indices and Maslov indices for paths of hermitian
//! matrices with coefficients in finite direct sums of matrix algebras and
//! sampled loop algebras `C(S^1) (x) M_k`.
//!
//! Every K-theoretic output is an exact integer. Each invariant is computed by
//! more than one independent route so the routes can be checked against each
//! other; see [`specflow`], [`relindex`], [`maslov`] and [`oracle`].

// `!(a < b)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod maslov;
pub mod matfun;
pub mod oddflow;
pub mod oppath;
pub mod oracle;
pub mod relindex;
pub mod signs;
pub mod specflow;

pub use algebra::{AElement, AlgebraShape, BlockKind, BlockSpec, Homomorphism, KOneClass, KZeroClass};
pub use error::{Error, Result};
pub use matfun::{CMatrix, C64};
pub use oppath::HermPath;
pub use signs::SIGNS;
