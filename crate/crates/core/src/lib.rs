//! Hydrostatic primitive-equations solver built around a discrete
//! hydrostatic Leray projector, with numerical verifiers for the
//! accompanying decomposition theorems and Sobolev inequalities.

pub mod analysis;
pub mod calculus;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod helmholtz;
pub mod norms;
pub mod operators;
pub mod oracle;
pub mod poisson;
pub mod runner;
pub mod stepper;

pub use error::{Error, Result};
pub use field::{Field2D, HVectorField, ScalarField};
pub use grid::{Axis, Bc, BcSet, FieldBc, GridSpec};
