use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PointSample;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Analytic solid used to simulate scans. Signed distance is positive outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    Union {
        shapes: Vec<Shape>,
    },
    /// Ground `z = height + amplitude·sin(2πx/λ)·sin(2πy/λ)`, solid below.
    ///
    /// Not an exact distance field: the value is the vertical offset divided
    /// by the Lipschitz bound of the height function, so it never overestimates
    /// distance. `half_extent` only bounds ground-truth surface sampling.
    Corrugated {
        height: f64,
        amplitude: f64,
        wavelength: f64,
        half_extent: f64,
    },
}

impl Shape {
    pub fn sdf(&self, p: &Vec3) -> f64 {
        match self {
            Shape::Sphere { center, radius } => (p - Vec3::from(*center)).norm() - radius,
            Shape::Box {
                center,
                half_extents,
            } => {
                let q = (p - Vec3::from(*center)).abs() - Vec3::from(*half_extents);
                let outside = q.sup(&Vec3::zeros()).norm();
                let inside = q.max().min(0.0);
                outside + inside
            }
            Shape::Union { shapes } => shapes
                .iter()
                .map(|s| s.sdf(p))
                .fold(f64::INFINITY, f64::min),
            Shape::Corrugated {
                height,
                amplitude,
                wavelength,
                ..
            } => {
                let k = 2.0 * PI / wavelength;
                let h = height + amplitude * (k * p.x).sin() * (k * p.y).sin();
                let slope = amplitude.abs() * k;
                (p.z - h) / (1.0 + 2.0 * slope * slope).sqrt()
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match self {
            Shape::Sphere { radius, .. } if !(*radius > 0.0) => bad("sphere radius must be positive"),
            Shape::Box { half_extents, .. } if half_extents.iter().any(|h| !(*h > 0.0)) => {
                bad("box half extents must be positive")
            }
            Shape::Union { shapes } if shapes.is_empty() => bad("union needs at least one shape"),
            Shape::Union { shapes } => shapes.iter().try_for_each(Shape::validate),
            Shape::Corrugated {
                wavelength,
                half_extent,
                ..
            } if !(*wavelength > 0.0) || !(*half_extent > 0.0) => {
                bad("corrugated wavelength and extent must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Area-uniform points on this shape's own boundary.
    fn boundary_samples(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
        match self {
            Shape::Sphere { center, radius } => (0..n)
                .map(|_| Vec3::from(*center) + random_unit(rng) * *radius)
                .collect(),
            Shape::Box {
                center,
                half_extents,
            } => {
                let h = Vec3::from(*half_extents);
                // face pairs normal to x, y, z
                let areas = [h.y * h.z, h.x * h.z, h.x * h.y];
                let total: f64 = areas.iter().sum();
                (0..n)
                    .map(|_| {
                        let mut u = rng.gen::<f64>() * total;
                        let mut axis = 2;
                        for (a, area) in areas.iter().enumerate() {
                            if u < *area {
                                axis = a;
                                break;
                            }
                            u -= area;
                        }
                        let mut p = Vec3::zeros();
                        for d in 0..3 {
                            p[d] = rng.gen_range(-h[d]..=h[d]);
                        }
                        p[axis] = if rng.gen::<bool>() { h[axis] } else { -h[axis] };
                        Vec3::from(*center) + p
                    })
                    .collect()
            }
            Shape::Union { shapes } => {
                let per = n.div_ceil(shapes.len());
                shapes.iter().flat_map(|s| s.boundary_samples(per, rng)).collect()
            }
            Shape::Corrugated {
                height,
                amplitude,
                wavelength,
                half_extent,
            } => {
                // Rejection against the local area element of the height field.
                let k = 2.0 * PI / wavelength;
                let max_el = (1.0 + 2.0 * (amplitude * k).powi(2)).sqrt();
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let x = rng.gen_range(-half_extent..=*half_extent);
                    let y = rng.gen_range(-half_extent..=*half_extent);
                    let hx = amplitude * k * (k * x).cos() * (k * y).sin();
                    let hy = amplitude * k * (k * x).sin() * (k * y).cos();
                    let el = (1.0 + hx * hx + hy * hy).sqrt();
                    if rng.gen::<f64>() * max_el <= el {
                        let z = height + amplitude * (k * x).sin() * (k * y).sin();
                        out.push(Vec3::new(x, y, z));
                    }
                }
                out
            }
        }
    }
}

/// Where the simulated sensors sit and how they sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub sensors: Vec<[f64; 3]>,
    pub rays_per_sensor: usize,
    /// Isotropic Gaussian noise added to each hit, meters.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    /// Restrict ray directions to a cone; all directions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aim: Option<Aim>,
}

/// Cone of ray directions around the direction from a sensor to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aim {
    pub target: [f64; 3],
    pub half_angle_deg: f64,
}

fn default_max_range() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScene {
    pub shape: Shape,
    pub scan: ScanSpec,
}

impl SyntheticScene {
    /// Unit sphere at the origin seen from six axis-aligned sensors at distance 3.
    pub fn sphere(rays: usize, noise_sigma: f64) -> Self {
        let sensors = [
            [3.0, 0.0, 0.0],
            [-3.0, 0.0, 0.0],
            [0.0, 3.0, 0.0],
            [0.0, -3.0, 0.0],
            [0.0, 0.0, 3.0],
            [0.0, 0.0, -3.0],
        ];
        Self {
            shape: Shape::Sphere {
                center: [0.0; 3],
                radius: 1.0,
            },
            scan: ScanSpec {
                sensors: sensors.to_vec(),
                rays_per_sensor: rays.div_ceil(sensors.len()),
                noise_sigma,
                max_range: 10.0,
                // the sphere subtends asin(1/3) ≈ 19.5° from each sensor
                aim: Some(Aim {
                    target: [0.0; 3],
                    half_angle_deg: 21.0,
                }),
            },
        }
    }

    pub fn analytic_sdf(&self, p: &Vec3) -> f64 {
        self.shape.sdf(p)
    }

    /// Dense ground-truth points on the scene surface.
    ///
    /// Component boundaries of a union are kept only where they lie on the
    /// union's surface.
    pub fn surface_points(&self, n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = self.shape.boundary_samples(n, &mut rng);
        match self.shape {
            Shape::Union { .. } => pts
                .into_iter()
                .filter(|p| self.shape.sdf(p) > -1e-9)
                .collect(),
            _ => pts,
        }
    }
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    random_in_cone(rng, &Vec3::z(), -1.0)
}

/// Uniform direction within the cone `{d : d·axis >= min_cos}`; `axis` is unit length.
fn random_in_cone(rng: &mut impl Rng, axis: &Vec3, min_cos: f64) -> Vec3 {
    let z: f64 = rng.gen_range(min_cos..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    u * (r * phi.cos()) + v * (r * phi.sin()) + axis * z
}

/// Smallest sphere-tracing step; also the deepest a step can overshoot into a solid.
const MIN_STEP: f64 = 1e-4;
const BISECT_TOL: f64 = 1e-7;

/// First zero crossing of `shape` along `origin + t·dir`, `t ≤ max_range`.
pub(crate) fn cast_ray(shape: &Shape, origin: &Vec3, dir: &Vec3, max_range: f64) -> Option<Vec3> {
    let at = |t: f64| origin + dir * t;
    let mut prev = 0.0;
    let mut t = 0.0;
    while t <= max_range {
        let d = shape.sdf(&at(t));
        if d <= 0.0 {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                if shape.sdf(&at(mid)) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(at(0.5 * (lo + hi)));
        }
        prev = t;
        t += d.max(MIN_STEP);
    }
    None
}

/// Simulate a scan: rays uniform over the sphere of directions from each sensor.
///
/// Rays that leave `max_range` without hitting are dropped. Frame ids are sensor indices.
pub fn synth_scan(scene: &SyntheticScene, seed: u64) -> Result<Vec<PointSample>> {
    scene.shape.validate()?;
    let spec = &scene.scan;
    if !(spec.noise_sigma >= 0.0) || !(spec.max_range > 0.0) {
        return Err(Error::InvalidArgument(
            "noise_sigma must be >= 0 and max_range > 0".into(),
        ));
    }
    for (index, s) in spec.sensors.iter().enumerate() {
        if !(scene.shape.sdf(&Vec3::from(*s)) > 0.0) {
            return Err(Error::SensorInside { index });
        }
    }
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
    let per_sensor: Vec<Result<Vec<PointSample>>> = spec
        .sensors
        .par_iter()
        .enumerate()
        .map(|(frame, s)| {
            let origin = Vec3::from(*s);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(frame as u64);
            let mut out = Vec::new();
            let cone = match &spec.aim {
                Some(aim) => {
                    let axis = Vec3::from(aim.target) - origin;
                    (axis.norm() > 0.0).then(|| (axis.normalize(), aim.half_angle_deg.to_radians().cos()))
                }
                None => None,
            };
            for _ in 0..spec.rays_per_sensor {
                let dir = match &cone {
                    Some((axis, min_cos)) => random_in_cone(&mut rng, axis, *min_cos),
                    None => random_unit(&mut rng),
                };
                let Some(mut hit) = cast_ray(&scene.shape, &origin, &dir, spec.max_range) else {
                    continue;
                };
                if spec.noise_sigma > 0.0 {
                    for d in 0..3 {
                        hit[d] += noise.sample(&mut rng);
                    }
                }
                let index = out.len();
                out.push(PointSample::new(hit, origin, frame as u32, index)?);
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for chunk in per_sensor {
        all.extend(chunk?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_sphere() -> Shape {
        Shape::Sphere {
            center: [0.0; 3],
            radius: 1.0,
        }
    }

    #[test]
    fn axis_ray_hits_sphere_pole() {
        let hit = cast_ray(
            &unit_sphere(),
            &Vec3::new(3.0, 0.0, 0.0),
            &Vec3::new(-1.0, 0.0, 0.0),
            10.0,
        )
        .unwrap();
        assert!((hit - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn ray_pointing_away_misses() {
        assert!(cast_ray(
            &unit_sphere(),
            &Vec3::new(3.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            10.0
        )
        .is_none());
    }

    #[test]
    fn noiseless_sphere_hits_lie_on_the_surface() {
        let scene = SyntheticScene::sphere(10_000, 0.0);
        let pts = synth_scan(&scene, 11).unwrap();
        assert!(pts.len() > 8000, "{}", pts.len());
        for p in &pts {
            assert!((p.position.norm() - 1.0).abs() < 1e-5);
            assert!(scene.analytic_sdf(&p.position).abs() < 1e-5);
        }
    }

    #[test]
    fn sensor_inside_is_rejected() {
        let mut scene = SyntheticScene::sphere(10, 0.0);
        scene.scan.sensors.push([0.2, 0.0, 0.0]);
        assert!(matches!(
            synth_scan(&scene, 0),
            Err(Error::SensorInside { index: 6 })
        ));
    }

    #[test]
    fn box_and_union_distances() {
        let b = Shape::Box {
            center: [0.0; 3],
            half_extents: [1.0, 1.0, 1.0],
        };
        assert!((b.sdf(&Vec3::new(2.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((b.sdf(&Vec3::new(2.0, 2.0, 1.0)) - 2f64.sqrt()).abs() < 1e-12);
        assert!((b.sdf(&Vec3::new(0.5, 0.0, 0.0)) + 0.5).abs() < 1e-12);
        let u = Shape::Union {
            shapes: vec![unit_sphere(), b],
        };
        assert!((u.sdf(&Vec3::new(3.0, 0.0, 0.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_sdf_has_unit_gradient_almost_everywhere() {
        let shapes = [
            unit_sphere(),
            Shape::Box {
                center: [0.1, 0.0, 0.0],
                half_extents: [0.5, 0.7, 0.9],
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for s in &shapes {
            let n = 2000;
            let unit = (0..n)
                .filter(|_| {
                    let p = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                    let g = Vec3::from_fn(|d, _| {
                        let mut e = Vec3::zeros();
                        e[d] = h;
                        (s.sdf(&(p + e)) - s.sdf(&(p - e))) / (2.0 * h)
                    });
                    (g.norm() - 1.0).abs() < 1e-4
                })
                .count();
            // only points within h of the medial axis may fail
            assert!(unit as f64 > 0.995 * n as f64, "{unit}/{n}");
        }
    }

    #[test]
    fn union_surface_points_are_on_the_union_surface() {
        let scene = SyntheticScene {
            shape: Shape::Union {
                shapes: vec![
                    unit_sphere(),
                    Shape::Sphere {
                        center: [1.0, 0.0, 0.0],
                        radius: 1.0,
                    },
                ],
            },
            scan: ScanSpec {
                sensors: vec![[0.0, 0.0, 4.0]],
                rays_per_sensor: 1,
                noise_sigma: 0.0,
                max_range: 10.0,
                aim: None,
            },
        };
        let pts = scene.surface_points(2000, 1);
        assert!(pts.len() < 2000 && pts.len() > 1000);
        assert!(pts.iter().all(|p| scene.analytic_sdf(p).abs() < 1e-9));
    }

    #[test]
    fn scene_config_round_trips_through_toml() {
        let scene = SyntheticScene::sphere(600, 0.005);
        let text = toml::to_string(&scene).unwrap();
        let back: SyntheticScene = toml::from_str(&text).unwrap();
        assert_eq!(scene, back);
    }
}
