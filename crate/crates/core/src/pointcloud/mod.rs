//! Point-cloud ingestion, synthetic scans and ray-based training samples.
//!
//! Sign convention used throughout the crate: signed distances are positive
//! in free space (the sensor side of a surface) and negative behind it.

mod load;
mod rays;
mod synth;

pub use load::{
    load_pointcloud, parse_poses, parse_ply_points, parse_xyz, read_poses, write_poses, write_xyz,
    Pose, RawPoint,
};
pub use rays::{sample_rays, SamplingConfig, TrainingSample};
pub use synth::{synth_scan, Aim, ScanSpec, Shape, SyntheticScene};

use crate::error::{Error, Result};
use crate::geom::{is_finite, Vec3};

/// A measured surface point together with the sensor position it was seen from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub position: Vec3,
    pub sensor_origin: Vec3,
    pub frame_id: u32,
}

impl PointSample {
    /// Validates the sample invariants. `index` is only used for error reporting.
    pub fn new(position: Vec3, sensor_origin: Vec3, frame_id: u32, index: usize) -> Result<Self> {
        if !is_finite(&position) || !is_finite(&sensor_origin) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        if position == sensor_origin {
            return Err(Error::ZeroLengthRay { index });
        }
        Ok(Self {
            position,
            sensor_origin,
            frame_id,
        })
    }

    pub fn ray_length(&self) -> f64 {
        (self.position - self.sensor_origin).norm()
    }
}
