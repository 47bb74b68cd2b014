//! Yao-Yao equipartitions of finite weighted measures.
//!
//! A Yao-Yao partition of `R^n` is a family of `2^n` simplicial cones sharing a
//! common apex, the center, built recursively: split along a hyperplane, then
//! lift two partitions of that hyperplane (with the same center) along a
//! common axis. Every affine half-space containing the center contains one
//! of the cones, so every hyperplane misses the interior of at least one.
//!
//! This crate computes, for a weighted point cloud and a coordinate system,
//! the center and axes of an equipartition (every cone carries `2^-n` of the
//! mass) by repeated median splits and bracketed bisection on the axis
//! residual map, and provides exact certificates and property checks for the
//! result.
//!
//! ```
//! use yaoyao::{geometry::CoordinateSystem, measures::WeightedPointCloud};
//! use yaoyao::solver::{compute_center_partition, SolverConfig};
//!
//! let cloud = WeightedPointCloud::from_points(
//!     2,
//!     &[vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]],
//! ).unwrap();
//! let tree = compute_center_partition(&cloud, &CoordinateSystem::standard(2), &SolverConfig::default()).unwrap();
//! assert!((tree.center()[0] - 1.5).abs() < 1e-9);
//! assert!((tree.center()[1] - 1.5).abs() < 1e-9);
//! assert_eq!(tree.regions().len(), 4);
//! ```

pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measures;
pub mod partition;
pub mod solver;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{ConeRegion, CoordinateSystem, HalfSpace, SignSequence, SubDiagonalBasis};
pub use measures::{MeasureSpec, WeightedPointCloud};
pub use partition::{PartitionNode, PartitionTree};
pub use solver::{compute_center, compute_center_partition, SolverConfig};
