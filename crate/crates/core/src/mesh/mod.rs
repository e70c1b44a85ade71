//! Triangle meshes: extraction, adjacency and file I/O.

mod adjacency;
mod io;
mod mc;
mod primitives;
mod tables;

pub use adjacency::{vertex_adjacency, Adjacency, EdgeAngles};
pub use io::{parse_obj, parse_ply_mesh, read_mesh, write_mesh, MeshFormat};
pub use mc::{marching_cubes, SdfSource};
pub use primitives::{cube_surface, grid_plane, icosphere};

use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Optional per-vertex value, written as PLY `quality`.
    pub scalar: Option<Vec<f64>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let m = Self {
            vertices,
            faces,
            scalar: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Index range, distinct corners, finite coordinates and scalar length.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::Format(format!("face {i} references a vertex out of range")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Format(format!("face {i} repeats a vertex")));
            }
        }
        if let Some(i) = self.vertices.iter().position(|v| !crate::geom::is_finite(v)) {
            return Err(Error::NonFiniteCoordinate { index: i });
        }
        if let Some(s) = &self.scalar {
            if s.len() != self.vertices.len() {
                return Err(Error::Mismatch(format!(
                    "scalar channel has {} values for {} vertices",
                    s.len(),
                    self.vertices.len()
                )));
            }
        }
        Ok(())
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i as usize]);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_normal(f).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Undirected edges `(a, b)` with `a < b`, each listed once, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Edges whose incident face count is not exactly two.
    pub fn open_or_nonmanifold_edges(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < e.len() {
            let mut j = i;
            while j < e.len() && e[j] == e[i] {
                j += 1;
            }
            if j - i != 2 {
                out.push(e[i]);
            }
            i = j;
        }
        out
    }

    /// Directed edges that appear in two faces with the same direction.
    pub fn inconsistent_orientation_edges(&self) -> Vec<(u32, u32)> {
        let mut d: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k], f[(k + 1) % 3])))
            .collect();
        d.sort_unstable();
        d.windows(2).filter(|w| w[0] == w[1]).map(|w| w[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_faces() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 2]]).is_ok());
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 1]]).is_err());
        let mut bad = v;
        bad[1].x = f64::NAN;
        assert!(matches!(
            TriangleMesh::new(bad, vec![[0, 1, 2]]),
            Err(Error::NonFiniteCoordinate { index: 1 })
        ));
    }

    #[test]
    fn tetrahedron_is_closed_and_consistent() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let m = TriangleMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap();
        assert_eq!(m.edges().len(), 6);
        assert!(m.open_or_nonmanifold_edges().is_empty());
        assert!(m.inconsistent_orientation_edges().is_empty());
    }
}
