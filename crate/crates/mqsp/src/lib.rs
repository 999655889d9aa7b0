//! Multivariable quantum signal processing over sparse Laurent polynomials.
//!
//! Protocols interleave two commuting signal oracles with phase rotations.
//! This crate builds their SU(2) Laurent unitaries, peels phases back out,
//! and completes real-part pairs through 1D and 2D spectral factorization.

pub mod grid;
pub mod laurent;
pub mod named;
pub mod peel;
pub mod protocol;
pub mod spectral1d;
pub mod spectral2d;

pub use laurent::{Cplx, LaurentPoly1, LaurentPoly2, Parity, Var};
pub use protocol::{build_unitary, ProtocolSpec, Su2LaurentUnitary};
