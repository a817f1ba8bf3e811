//! Critical points of the k-nearest-neighbor distance on the flat torus, and
//! the random k-coverage statistics built on them.

// Index loops over small fixed-size coordinate arrays; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod critical;
pub mod error;
pub mod exec;
pub mod format;
pub mod geometry;
pub mod index;
mod linalg;
pub mod stats;
pub mod window;
pub mod euler;
pub mod constants;
pub mod harness;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{TorusPoint, MAX_DIM};
pub use index::SpatialIndex;
pub use sampling::{PointCloud, SeedSpec};
