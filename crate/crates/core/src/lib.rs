//! Optimal logarithmic trace-inequality constants and layer-cake quantum divergences.
//!
//! The crate is organised bottom-up:
//!
//! - [`scalar`]: the constants `G_s`, `c_s`, the critical point `r*` and the
//!   scalar inequalities they certify.
//! - [`linalg`]: dense Hermitian operators, spectral calculus, projections and
//!   randomized states and channels.
//! - [`quadrature`]: adaptive Gauss–Kronrod with breakpoints and fixed
//!   Gauss–Legendre rules.
//! - [`divergences`]: the divergence `Q`, its collision and Rényi relatives,
//!   each computed along every available route.
//! - [`witnesses`]: the commuting optimality witnesses.
//! - [`verify`]: randomized certification, supremum searches and reports.
//! - [`cli`]: the `qtrace` command-line front end.
//!
//! All logarithms are natural.

pub mod cli;
pub mod divergences;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod verify;
pub mod witnesses;

pub use divergences::{ClassicalPair, TailFunction};
pub use error::{Error, Result};
pub use linalg::{HermitianOperator, OperatorPair, SpectralDecomposition};
pub use quadrature::QuadratureConfig;
pub use scalar::{RenyiOrder, Regime, ScalarConstants, THRESHOLD_S0};
pub use witnesses::WitnessSpec;
