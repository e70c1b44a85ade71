use rustc_hash::FxHashMap;

use super::tables::{EDGE_TABLE, TRIANGLE_TABLE};
use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::network::FieldView;
use crate::pointcloud::Shape;

/// Anything that can be sampled as a signed distance in bulk.
pub trait SdfSource {
    fn sample(&self, xs: &[Vec3]) -> Result<Vec<f64>>;
}

impl SdfSource for FieldView<'_> {
    fn sample(&self, xs: &[Vec3]) -> Result<Vec<f64>> {
        self.field.eval_batch(self.grid, xs)
    }
}

impl SdfSource for Shape {
    fn sample(&self, xs: &[Vec3]) -> Result<Vec<f64>> {
        Ok(xs.iter().map(|x| self.sdf(x)).collect())
    }
}

impl<F: Fn(&Vec3) -> f64> SdfSource for F {
    fn sample(&self, xs: &[Vec3]) -> Result<Vec<f64>> {
        Ok(xs.iter().map(self).collect())
    }
}

const CORNERS: [[i64; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Samples exactly on the iso level are treated as this value.
const ZERO_NUDGE: f64 = -1e-9;

fn add(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Zero level set of `sdf` over the union of `bounds`.
///
/// Cubes lie on a lattice of spacing `cell` anchored at the world origin, so
/// overlapping boxes share samples and vertices. Triangles are wound so their
/// normals point toward positive values.
pub fn marching_cubes<S: SdfSource + ?Sized>(sdf: &S, cell: f64, bounds: &[Aabb]) -> Result<TriangleMesh> {
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(Error::InvalidArgument(format!("cell size must be positive, got {cell}")));
    }
    let mut cubes: Vec<[i64; 3]> = Vec::new();
    for b in bounds {
        let lo = b.min.map(|v| (v / cell).floor() as i64);
        let hi = b.max.map(|v| (v / cell).ceil() as i64);
        for x in lo.x..hi.x {
            for y in lo.y..hi.y {
                for z in lo.z..hi.z {
                    cubes.push([x, y, z]);
                }
            }
        }
    }
    cubes.sort_unstable();
    cubes.dedup();

    let mut lattice: Vec<[i64; 3]> = cubes.iter().flat_map(|c| CORNERS.iter().map(move |o| add(*c, *o))).collect();
    lattice.sort_unstable();
    lattice.dedup();
    let pos = |p: [i64; 3]| Vec3::new(p[0] as f64 * cell, p[1] as f64 * cell, p[2] as f64 * cell);
    let xs: Vec<Vec3> = lattice.iter().map(|&p| pos(p)).collect();
    let values = sdf.sample(&xs)?;
    if values.len() != xs.len() {
        return Err(Error::Mismatch("sdf returned a different number of samples".into()));
    }
    let index: FxHashMap<[i64; 3], usize> = lattice.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let value = |p: [i64; 3]| {
        let v = values[index[&p]];
        if v == 0.0 {
            ZERO_NUDGE
        } else {
            v
        }
    };

    let mut vertices = Vec::new();
    let mut edge_vertex: FxHashMap<([i64; 3], usize), u32> = FxHashMap::default();
    let mut faces = Vec::new();
    for &c in &cubes {
        let corner: [[i64; 3]; 8] = CORNERS.map(|o| add(c, o));
        let vals: [f64; 8] = corner.map(value);
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("sdf sample at {:?}", pos(corner[i])),
            });
        }
        let case = (0..8).fold(0usize, |acc, i| acc | (usize::from(vals[i] < 0.0) << i));
        if EDGE_TABLE[case] == 0 {
            continue;
        }
        let mut local = [u32::MAX; 12];
        for (e, [a, b]) in EDGES.iter().enumerate() {
            if EDGE_TABLE[case] & (1 << e) == 0 {
                continue;
            }
            let (pa, pb) = (corner[*a], corner[*b]);
            let (lo, hi, va, vb) = if pa < pb { (pa, pb, vals[*a], vals[*b]) } else { (pb, pa, vals[*b], vals[*a]) };
            let axis = (0..3).find(|&d| lo[d] != hi[d]).expect("edge spans one axis");
            local[e] = *edge_vertex.entry((lo, axis)).or_insert_with(|| {
                let t = va / (va - vb);
                vertices.push(pos(lo) + (pos(hi) - pos(lo)) * t);
                (vertices.len() - 1) as u32
            });
        }
        for tri in TRIANGLE_TABLE[case].chunks(3) {
            if tri[0] < 0 {
                break;
            }
            let f = [local[tri[0] as usize], local[tri[2] as usize], local[tri[1] as usize]];
            faces.push(f);
        }
    }
    Ok(TriangleMesh {
        vertices,
        faces,
        scalar: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &Vec3) -> f64 {
        x.norm() - 1.0
    }

    fn cube_bounds(r: f64) -> Vec<Aabb> {
        vec![Aabb::new(Vec3::repeat(-r), Vec3::repeat(r))]
    }

    #[test]
    fn sphere_is_watertight_and_outward() {
        let cell = 0.05;
        let m = marching_cubes(&sphere, cell, &cube_bounds(1.3)).unwrap();
        m.validate().unwrap();
        assert!(m.faces.len() > 1000);
        assert!(m.open_or_nonmanifold_edges().is_empty());
        assert!(m.inconsistent_orientation_edges().is_empty());
        for v in &m.vertices {
            assert!((v.norm() - 1.0).abs() <= cell, "{}", v.norm());
            assert!(sphere(v).abs() < cell);
        }
        for f in 0..m.faces.len() {
            let c = m.faces[f].iter().map(|&i| m.vertices[i as usize]).sum::<Vec3>() / 3.0;
            assert!(m.face_normal(f).dot(&c) > 0.0, "face {f} points inward");
        }
        let area = m.area();
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 0.05 * 4.0 * std::f64::consts::PI);
    }

    #[test]
    fn no_surface_gives_empty_mesh() {
        let m = marching_cubes(&|_: &Vec3| 1.0, 0.1, &cube_bounds(1.0)).unwrap();
        assert!(m.is_empty() && m.vertices.is_empty());
    }

    #[test]
    fn overlapping_boxes_match_single_box() {
        let whole = marching_cubes(&sphere, 0.1, &cube_bounds(1.3)).unwrap();
        let halves = vec![
            Aabb::new(Vec3::new(-1.3, -1.3, -1.3), Vec3::new(0.25, 1.3, 1.3)),
            Aabb::new(Vec3::new(-0.15, -1.3, -1.3), Vec3::new(1.3, 1.3, 1.3)),
        ];
        let split = marching_cubes(&sphere, 0.1, &halves).unwrap();
        assert_eq!(whole, split);
    }

    #[test]
    fn exact_zero_samples_are_nudged() {
        // plane through lattice points
        let m = marching_cubes(&|x: &Vec3| x.z - 0.2, 0.1, &[Aabb::new(Vec3::repeat(-0.3), Vec3::repeat(0.3))]).unwrap();
        m.validate().unwrap();
        assert!(!m.is_empty());
        for v in &m.vertices {
            assert!((v.z - 0.2).abs() < 1e-6);
        }
        for f in 0..m.faces.len() {
            assert!(m.face_normal(f).z > 0.0);
        }
    }

    #[test]
    fn torus_and_box_union_are_watertight() {
        let torus = |x: &Vec3| {
            let q = ((x.x * x.x + x.y * x.y).sqrt() - 0.7, x.z);
            (q.0 * q.0 + q.1 * q.1).sqrt() - 0.25
        };
        let m = marching_cubes(&torus, 0.04, &cube_bounds(1.1)).unwrap();
        assert!(m.open_or_nonmanifold_edges().is_empty());
        assert!(m.inconsistent_orientation_edges().is_empty());
        let shape: Shape = toml::from_str(
            r#"
            type = "union"
            [[shapes]]
            type = "box"
            center = [0.0, 0.0, 0.0]
            half_extents = [0.5, 0.3, 0.3]
            [[shapes]]
            type = "sphere"
            center = [0.5, 0.2, 0.1]
            radius = 0.35
            "#,
        )
        .unwrap();
        let m = marching_cubes(&shape, 0.037, &cube_bounds(1.2)).unwrap();
        assert!(m.open_or_nonmanifold_edges().is_empty());
        assert!(m.inconsistent_orientation_edges().is_empty());
    }

    #[test]
    fn rejects_bad_cell() {
        assert!(marching_cubes(&sphere, 0.0, &cube_bounds(1.0)).is_err());
    }
}
