use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PointSample;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Points handled by one RNG stream; fixed so output is independent of thread count.
const POINTS_PER_STREAM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Queries per ray drawn uniformly within `±truncation` of the endpoint.
    pub n_surface: usize,
    /// Queries per ray drawn uniformly in the free segment, labelled `+truncation`.
    pub n_free: usize,
    /// Truncation band in meters.
    pub truncation: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_surface: 4,
            n_free: 2,
            truncation: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub query: Vec3,
    /// Signed distance along the ray, positive toward the sensor.
    pub sdf_label: f64,
    pub weight: f64,
}

impl TrainingSample {
    /// Samples strictly inside the truncation band; free-space samples sit on its edge.
    pub fn is_near_surface(&self, truncation: f64) -> bool {
        self.sdf_label.abs() < truncation
    }
}

/// Signed distance label of `query` on the ray through `endpoint`, clamped to the band.
///
/// `s` is the distance from the endpoint toward the sensor.
fn label_at(s: f64, truncation: f64) -> f64 {
    s.clamp(-truncation, truncation)
}

/// Draw ray-based training samples from every point.
///
/// Output order is per point: `n_surface` near-surface queries then `n_free`
/// free-space queries. Rays shorter than the truncation band contribute no
/// free-space samples.
pub fn sample_rays(points: &[PointSample], cfg: &SamplingConfig) -> Result<Vec<TrainingSample>> {
    if !(cfg.truncation > 0.0) || !cfg.truncation.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "truncation must be positive, got {}",
            cfg.truncation
        )));
    }
    let chunks: Vec<Vec<TrainingSample>> = points
        .par_chunks(POINTS_PER_STREAM)
        .enumerate()
        .map(|(chunk, pts)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk as u64);
            let mut out = Vec::with_capacity(pts.len() * (cfg.n_surface + cfg.n_free));
            for p in pts {
                sample_one(p, cfg, &mut rng, &mut out);
            }
            out
        })
        .collect();
    Ok(chunks.concat())
}

fn sample_one(p: &PointSample, cfg: &SamplingConfig, rng: &mut ChaCha8Rng, out: &mut Vec<TrainingSample>) {
    let trunc = cfg.truncation;
    let length = p.ray_length();
    let toward_sensor = (p.sensor_origin - p.position) / length;
    for _ in 0..cfg.n_surface {
        // Never step past the sensor on short rays.
        let s = rng.gen_range(-trunc..=trunc).min(length);
        out.push(TrainingSample {
            query: p.position + toward_sensor * s,
            sdf_label: label_at(s, trunc),
            weight: 1.0,
        });
    }
    if length > trunc {
        for _ in 0..cfg.n_free {
            let s = rng.gen_range(trunc..length);
            out.push(TrainingSample {
                query: p.position + toward_sensor * s,
                sdf_label: trunc,
                weight: 1.0,
            });
        }
    }
}
