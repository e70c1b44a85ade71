use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{vertex_adjacency, TriangleMesh};

/// Symmetric sparse Laplacian with zero row sums.
///
/// Off-diagonal entries are the non-negative edge weights; the diagonal is
/// the negated row sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLaplacian {
    /// Per row, `(column, weight)` sorted by column, diagonal excluded.
    rows: Vec<Vec<(u32, f64)>>,
    diag: Vec<f64>,
}

impl SparseLaplacian {
    /// From undirected weighted edges; repeated edges accumulate.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a == b || a as usize >= n || b as usize >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) invalid for {n} vertices")));
            }
            rows[a as usize].push((b, w));
            rows[b as usize].push((a, w));
        }
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(r.len());
            for &(c, w) in r.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += w,
                    _ => merged.push((c, w)),
                }
            }
            *r = merged;
        }
        let diag = rows.iter().map(|r| -r.iter().map(|e| e.1).sum::<f64>()).collect();
        Ok(Self { rows, diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.rows[i]
            .binary_search_by_key(&(j as u32), |e| e.0)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    /// Undirected edges `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().filter(move |e| e.0 as usize > i).map(move |&(j, w)| (i as u32, j, w)))
    }

    pub fn mul(&self, v: &[Vec3]) -> Result<Vec<Vec3>> {
        self.check_dim(v.len())?;
        Ok((0..self.dim())
            .into_par_iter()
            .map(|i| self.rows[i].iter().fold(v[i] * self.diag[i], |acc, &(j, w)| acc + v[j as usize] * w))
            .collect())
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Mismatch(format!("{n} vertices for a Laplacian of dimension {}", self.dim())));
        }
        Ok(())
    }

    /// Largest `|row sum|` and largest `|L[i][j] − L[j][i]|`.
    pub fn defects(&self) -> (f64, f64) {
        let mut row = 0.0f64;
        let mut sym = 0.0f64;
        for i in 0..self.dim() {
            row = row.max((self.diag[i] + self.rows[i].iter().map(|e| e.1).sum::<f64>()).abs());
            for &(j, w) in &self.rows[i] {
                sym = sym.max((w - self.get(j as usize, i)).abs());
            }
        }
        (row, sym)
    }
}

/// Cotangent of an angle in radians.
pub(crate) fn cot(theta: f64) -> f64 {
    theta.cos() / theta.sin()
}

/// Default weight bounds `[1e-6, cot 1°]`.
pub fn default_weight_clamp() -> [f64; 2] {
    [1e-6, cot(1f64.to_radians())]
}

/// Faces whose area is zero relative to their longest edge.
pub fn zero_area_faces(mesh: &TriangleMesh) -> Vec<usize> {
    (0..mesh.faces.len())
        .filter(|&f| {
            let [a, b, c] = mesh.faces[f].map(|i| mesh.vertices[i as usize]);
            let longest = (b - a).norm_squared().max((c - b).norm_squared()).max((a - c).norm_squared());
            let twice_area = (b - a).cross(&(c - a)).norm();
            !(twice_area > f64::EPSILON * longest)
        })
        .collect()
}

/// `w_ij = ½(cot α + cot β)` per interior edge, `½ cot α` on the boundary,
/// each clamped to `clamp`.
pub fn cotan_laplacian(mesh: &TriangleMesh, clamp: [f64; 2]) -> Result<SparseLaplacian> {
    let bad = zero_area_faces(mesh);
    if !bad.is_empty() {
        return Err(Error::ZeroArea(bad));
    }
    let adj = vertex_adjacency(mesh)?;
    let edges: Vec<(u32, u32, f64)> = adj
        .edges
        .iter()
        .map(|e| {
            let w = 0.5 * (cot(e.alpha) + e.beta.map_or(0.0, cot));
            (e.a, e.b, w.clamp(clamp[0], clamp[1]))
        })
        .collect();
    SparseLaplacian::from_edges(mesh.vertices.len(), &edges)
}

/// `Δv = L v` and its per-vertex norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub delta: Vec<Vec3>,
    pub norms: Vec<f64>,
}

impl Displacement {
    pub fn mean_norm(&self) -> f64 {
        if self.norms.is_empty() {
            0.0
        } else {
            self.norms.iter().sum::<f64>() / self.norms.len() as f64
        }
    }
}

pub fn laplacian_displacement(lap: &SparseLaplacian, vertices: &[Vec3]) -> Result<Displacement> {
    let delta = lap.mul(vertices)?;
    let norms = delta.iter().map(|d| d.norm()).collect();
    Ok(Displacement { delta, norms })
}

/// `½ Σ_edges w_ij ‖vᵢ − vⱼ‖²`, which equals `½ Σ_coords vᵀ(−L)v`.
pub fn quadratic_form(lap: &SparseLaplacian, vertices: &[Vec3]) -> Result<f64> {
    lap.check_dim(vertices.len())?;
    Ok(0.5 * lap.edges().map(|(a, b, w)| w * (vertices[a as usize] - vertices[b as usize]).norm_squared()).sum::<f64>())
}
