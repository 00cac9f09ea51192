//! Numerical verification engine for first-moment identities of twisted
//! modular L-functions.
//!
//! The library computes both sides of an exact identity: a spectral average
//! of completed twisted L-values over Hecke eigenforms, weighted by a Hecke
//! eigenvalue and a Fourier coefficient, and a geometric expression made of
//! an identity term, a Weyl term, and an error series built from confluent
//! hypergeometric functions. Every sub-formula is exposed on its own so it
//! can be tested independently.
//!
//! Organization:
//! - [`prec`]: extended-precision values with tracked absolute error bounds
//! - [`chars`]: exact Dirichlet character arithmetic and Gauss sums
//! - [`specfun`]: complex Gamma, Beta, incomplete Gamma, regularized Kummer
//!   function, real zeta
//! - [`forms`]: level-one cusp forms, Hecke operators, eigenforms, Petersson
//!   norms
//! - [`lfun`]: twisted L-function evaluation in the full strip, spectral side
//! - [`geometry`]: identity term, Weyl term, local orbital factors, error
//!   series with truncation control
//! - [`harness`]: run configuration, verification reports, sweeps, probes

pub mod chars;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod lfun;
pub mod prec;
pub mod specfun;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
