//! Block Toeplitz lattice: matrix biorthogonal polynomials on the unit circle,
//! their reflection coefficients and Lax operators, and the scalar and
//! non-Abelian Ablowitz-Ladik flows, checked against exact moment evolution.

pub mod biorth;
pub mod cli;
pub mod error;
pub mod flows;
pub mod laurent;
pub mod lax;
pub mod linalg;
pub mod samples;
pub mod toeplitz;

pub use error::{Error, Result};
pub use laurent::{MatrixLaurentSeries, MatrixPolynomial, Side, TimeVector};
