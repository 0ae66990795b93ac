//! Operator-valued Hermite analysis on matrix algebras.
//!
//! Functions on R^d with values in n x n complex matrices are sampled on
//! tensor quadrature grids and expanded in Hermite functions. On top of the
//! expansion the crate provides Bochner-Riesz means, the Hermite heat
//! semigroup with its Mehler kernel and square functions, spectral
//! multipliers, and fitted-constant probes for the kernel bounds these
//! operators satisfy.

pub mod atom;
pub mod battery;
pub mod error;
pub mod field;
pub mod grid;
pub mod hermite;
pub mod matrix;
pub mod multiplier;
pub mod nc;
pub mod oscillating;
pub mod probe;
pub mod quadrature;
pub mod random;
pub mod riesz;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
pub use field::MatrixField;
pub use grid::QuadratureGrid;
pub use hermite::MultiIndex;
pub use spectral::SpectralCoeffs;
