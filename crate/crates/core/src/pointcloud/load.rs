use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::PointSample;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::io::ply;

/// A point as stored on disk: sensor-frame coordinates plus the frame it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPoint {
    pub position: Vec3,
    pub frame: u32,
}

/// Rigid sensor-to-world transform, one per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn translation(t: Vec3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

/// Parse ASCII XYZ: one `x y z` (or `x y z frame`) record per line.
///
/// Blank lines and lines starting with `#` are skipped. Line numbers in
/// errors are 1-based.
pub fn parse_xyz(text: &str) -> Result<Vec<RawPoint>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 && tokens.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 3 or 4 fields, found {}", tokens.len()),
            });
        }
        let mut xyz = [0.0; 3];
        for (d, tok) in tokens[..3].iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid number `{tok}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite coordinate `{tok}`"),
                });
            }
            xyz[d] = v;
        }
        let frame = match tokens.get(3) {
            Some(tok) => tok.parse::<u32>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid frame id `{tok}`"),
            })?,
            None => 0,
        };
        out.push(RawPoint {
            position: Vector3::from(xyz),
            frame,
        });
    }
    Ok(out)
}

/// Extract points from a PLY file with `x`/`y`/`z` (and optional `frame`) vertex properties.
pub fn parse_ply_points(bytes: &[u8]) -> Result<Vec<RawPoint>> {
    let ply = ply::parse(bytes)?;
    let Some(vertex) = ply.element("vertex") else {
        return Ok(Vec::new());
    };
    let idx = |name: &str| {
        vertex
            .def
            .property_index(name)
            .ok_or_else(|| Error::Format(format!("PLY vertex element lacks `{name}`")))
    };
    let (ix, iy, iz) = (idx("x")?, idx("y")?, idx("z")?);
    let iframe = vertex.def.property_index("frame");
    let scalar = |row: &[ply::Value], i: usize| {
        row[i]
            .as_scalar()
            .ok_or_else(|| Error::Format("PLY coordinate property is a list".into()))
    };
    let mut out = Vec::with_capacity(vertex.rows.len());
    for (index, row) in vertex.rows.iter().enumerate() {
        let p = Vec3::new(scalar(row, ix)?, scalar(row, iy)?, scalar(row, iz)?);
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        let frame = match iframe {
            Some(i) => {
                let f = scalar(row, i)?;
                if !(0.0..=u32::MAX as f64).contains(&f) || f.fract() != 0.0 {
                    return Err(Error::Format(format!("invalid frame id at point {index}")));
                }
                f as u32
            }
            None => 0,
        };
        out.push(RawPoint { position: p, frame });
    }
    Ok(out)
}

/// Parse a pose file: 12 whitespace-separated floats per line, a row-major 3x4 `[R | t]`.
pub fn parse_poses(text: &str) -> Result<Vec<Pose>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("invalid pose value `{t}`"),
                    })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 12 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 12 pose values, found {}", vals.len()),
            });
        }
        out.push(Pose {
            rotation: Matrix3::new(
                vals[0], vals[1], vals[2], vals[4], vals[5], vals[6], vals[8], vals[9], vals[10],
            ),
            translation: Vec3::new(vals[3], vals[7], vals[11]),
        });
    }
    Ok(out)
}

pub fn read_poses(path: &Path) -> Result<Vec<Pose>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text)
}

fn is_ply(path: &Path, bytes: &[u8]) -> bool {
    bytes.starts_with(b"ply")
        || path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("ply"))
}

/// Load a point cloud in world coordinates.
///
/// Without a pose file every point is taken to be in the world frame with the
/// sensor at the world origin. With a pose file, point `frame` ids index the
/// poses and the pose count must equal the number of frames referenced.
pub fn load_pointcloud(path: &Path, pose_path: Option<&Path>) -> Result<Vec<PointSample>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw = if is_ply(path, &bytes) {
        parse_ply_points(&bytes)?
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Format(format!("{} is not valid UTF-8", path.display())))?;
        parse_xyz(text)?
    };
    let poses = pose_path.map(read_poses).transpose()?;
    to_world(&raw, poses.as_deref())
}

pub(crate) fn to_world(raw: &[RawPoint], poses: Option<&[Pose]>) -> Result<Vec<PointSample>> {
    let frames = raw.iter().map(|p| p.frame as usize + 1).max().unwrap_or(0);
    if let Some(poses) = poses {
        if frames != poses.len() {
            return Err(Error::FrameMismatch {
                frames,
                poses: poses.len(),
            });
        }
    }
    raw.iter()
        .enumerate()
        .map(|(index, p)| match poses {
            Some(poses) => {
                let pose = &poses[p.frame as usize];
                PointSample::new(pose.apply(&p.position), pose.translation, p.frame, index)
            }
            None => PointSample::new(p.position, Vec3::zeros(), p.frame, index),
        })
        .collect()
}

/// Write sensor-frame points as `x y z frame` lines.
pub fn write_xyz(path: &Path, points: &[RawPoint]) -> Result<()> {
    let mut buf = Vec::with_capacity(points.len() * 48);
    for p in points {
        writeln!(
            buf,
            "{} {} {} {}",
            p.position.x, p.position.y, p.position.z, p.frame
        )
        .expect("write to Vec");
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_poses(path: &Path, poses: &[Pose]) -> Result<()> {
    let mut buf = Vec::new();
    for p in poses {
        let r = &p.rotation;
        let t = &p.translation;
        writeln!(
            buf,
            "{} {} {} {} {} {} {} {} {} {} {} {}",
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z
        )
        .expect("write to Vec");
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_defaults_to_world_origin_sensor() {
        let raw = parse_xyz("1.0 0.0 0.0\n").unwrap();
        let pts = to_world(&raw, None).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].position, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(pts[0].sensor_origin, Vec3::zeros());
    }

    #[test]
    fn empty_input_is_empty_cloud() {
        assert!(to_world(&parse_xyz("").unwrap(), None).unwrap().is_empty());
    }

    #[test]
    fn nan_coordinate_reports_line() {
        match parse_xyz("1.0 nan 0.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_xyz("0 0 1\n\n1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn point_at_sensor_is_rejected() {
        let raw = parse_xyz("0 0 0\n").unwrap();
        assert!(matches!(
            to_world(&raw, None),
            Err(Error::ZeroLengthRay { index: 0 })
        ));
    }

    #[test]
    fn poses_transform_points_and_set_origin() {
        let poses = parse_poses("0 -1 0 5 1 0 0 0 0 0 1 1\n").unwrap();
        let raw = parse_xyz("1 0 0 0\n").unwrap();
        let pts = to_world(&raw, Some(&poses)).unwrap();
        assert!((pts[0].position - Vec3::new(5.0, 1.0, 1.0)).norm() < 1e-12);
        assert_eq!(pts[0].sensor_origin, Vec3::new(5.0, 0.0, 1.0));
    }

    #[test]
    fn frame_count_mismatch_is_an_error() {
        let poses = parse_poses("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
        let raw = parse_xyz("1 0 0 0\n").unwrap();
        assert!(matches!(
            to_world(&raw, Some(&poses)),
            Err(Error::FrameMismatch { frames: 1, poses: 2 })
        ));
        assert!(parse_poses("1 2 3\n").is_err());
    }

    #[test]
    fn ply_points_with_frames() {
        let mut src = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uint frame\nend_header\n".to_vec();
        for (p, f) in [([1.0f32, 2.0, 3.0], 0u32), ([4.0, 5.0, 6.0], 1)] {
            for c in p {
                src.extend_from_slice(&c.to_le_bytes());
            }
            src.extend_from_slice(&f.to_le_bytes());
        }
        let pts = parse_ply_points(&src).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].frame, 1);
        assert_eq!(pts[1].position, Vec3::new(4.0, 5.0, 6.0));
    }
}
