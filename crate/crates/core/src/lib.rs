//! Boundary initial value problems for `y' = f(x, y)` on domains that include
//! part of their boundary.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod domain;
pub mod envelope;
pub mod error;
pub mod expr;
pub mod integrator;
pub mod normalize;
pub mod peano;
pub mod quad;
pub mod uniqueness;

pub use domain::{CurveSpec, Direction, Frame, PointClass, ProblemFile, ProblemSpec, Region, Side};
pub use error::{Error, EvalError, Result};
pub use expr::Expr;
