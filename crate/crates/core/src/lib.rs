//! Finite metric geometry on meshed manifolds: nets, gluing, distortion
//! fields and quasisymmetry estimates.

pub mod distortion;
pub mod error;
pub mod estimation;
pub(crate) mod extended;
pub mod gluing;
pub mod mesh;
pub mod metric;
pub mod nets;
pub mod pipeline;

pub use error::{Error, Result};
pub use metric::{FiniteMetricSpace, PointId};
