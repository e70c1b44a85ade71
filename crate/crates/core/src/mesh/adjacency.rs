use std::collections::BTreeMap;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Angles opposite one undirected edge, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAngles {
    pub a: u32,
    pub b: u32,
    pub alpha: f64,
    /// `None` on a boundary edge.
    pub beta: Option<f64>,
}

impl EdgeAngles {
    pub fn is_boundary(&self) -> bool {
        self.beta.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    /// Sorted ascending per vertex.
    pub neighbors: Vec<Vec<u32>>,
    /// One entry per undirected edge, sorted by `(a, b)` with `a < b`.
    pub edges: Vec<EdgeAngles>,
}

impl Adjacency {
    /// Whether vertex `v` lies on a boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.neighbors.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            out[e.a as usize] = true;
            out[e.b as usize] = true;
        }
        out
    }
}

/// Interior angle at `apex` of the triangle `(apex, p, q)`.
pub(crate) fn angle_at(mesh: &TriangleMesh, apex: u32, p: u32, q: u32) -> f64 {
    let o = mesh.vertices[apex as usize];
    let u = mesh.vertices[p as usize] - o;
    let v = mesh.vertices[q as usize] - o;
    u.cross(&v).norm().atan2(u.dot(&v))
}

pub fn vertex_adjacency(mesh: &TriangleMesh) -> Result<Adjacency> {
    mesh.validate()?;
    let mut by_edge: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (i, j, apex) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            by_edge.entry((i.min(j), i.max(j))).or_default().push(apex);
        }
    }
    let bad: Vec<(u32, u32)> = by_edge.iter().filter(|(_, a)| a.len() > 2).map(|(e, _)| *e).collect();
    if !bad.is_empty() {
        return Err(Error::NonManifold(bad));
    }
    let mut neighbors = vec![Vec::new(); mesh.vertices.len()];
    let mut edges = Vec::with_capacity(by_edge.len());
    for ((a, b), apexes) in by_edge {
        neighbors[a as usize].push(b);
        neighbors[b as usize].push(a);
        edges.push(EdgeAngles {
            a,
            b,
            alpha: angle_at(mesh, apexes[0], a, b),
            beta: apexes.get(1).map(|&c| angle_at(mesh, c, a, b)),
        });
    }
    for n in &mut neighbors {
        n.sort_unstable();
    }
    Ok(Adjacency { neighbors, edges })
}
