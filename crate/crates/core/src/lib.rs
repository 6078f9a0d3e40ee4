//! Weighted variable-exponent Robin eigenvalue problems on rectangles.

pub mod cli;
pub mod discrete;
pub mod energy;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod modular;
pub mod solvers;

pub use discrete::{DiscreteFunction, Quadrature};
pub use error::{Error, Result};
pub use fields::{parse_field, FieldExpr, ProblemSpec, Regime, RegimeReport};
pub use geometry::{build_rect_mesh, Mesh};
