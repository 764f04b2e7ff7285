//! Maximal and Hilbert operators along variable parabolas `(t, u(x) t^2)`,
//! the dyadic pieces they decompose into, the operators that dominate
//! them, and a harness that estimates operator norms empirically.

pub mod bumps;
pub mod comparators;
pub mod error;
pub mod grid;
pub mod normlab;
pub mod quad;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{AxisTag, Grid2D, GridFunction2D, LpExponent};
