//! Slow, independent reference implementations used to freeze test values.
//!
//! Nothing here shares code with `iaps-core`: the chi-square tail is a direct
//! quadrature of the density, voting is brute-force enumeration, linear programs
//! are solved by visiting every vertex, and the matrix routines are textbook
//! Gauss-Jordan and Gram-Schmidt on a hand-rolled complex type.

pub mod chi2;
pub mod complex;
pub mod lp;
pub mod quad;
pub mod tables;
pub mod vote;
