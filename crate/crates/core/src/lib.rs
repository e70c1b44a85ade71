//! Surface mapping from LiDAR-style point clouds.
//!
//! A signed distance field is learned over a sparse octree of corner
//! features by a multi-scale MLP, trained with occupancy, Eikonal and
//! biharmonic smoothness terms. The zero level set is extracted with
//! marching cubes and smoothed by damped cotangent-Laplacian updates.

pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod geom;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod network;
pub mod octree;
pub mod pipeline;
pub mod pointcloud;
pub mod refine;
pub mod training;

pub use error::{Error, Result};
pub use geom::{Aabb, Vec3};
