//! Test-time mesh refinement.
//!
//! Every iteration rebuilds the cotangent Laplacian on the current vertices
//! and moves each vertex toward its neighbourhood average, damped by the
//! local Laplacian magnitude:
//!
//! ```text
//! vᵢ ← vᵢ + η · exp(−‖Δvᵢ‖) · (v̄ᵢ − vᵢ)
//! ```
//!
//! Faces are never touched.

mod laplacian;

pub use laplacian::{
    cotan_laplacian, default_weight_clamp, laplacian_displacement, quadratic_form, zero_area_faces, Displacement,
    SparseLaplacian,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{vertex_adjacency, TriangleMesh};

/// Minimum neighbour count for a vertex to move.
const MIN_NEIGHBORS: usize = 3;
/// Iterations without sufficient improvement before stopping.
const PLATEAU_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Damped step toward the neighbourhood average.
    Damped,
    /// Plain gradient step on the quadratic form, `v ← v + η Δv`.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    pub eta: f64,
    pub max_iters: usize,
    pub plateau_tol: f64,
    pub weight_clamp: [f64; 2],
    /// Cotangent-weighted neighbourhood average; uniform when false.
    pub weighted: bool,
    pub update: UpdateRule,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            max_iters: 20,
            plateau_tol: 1e-4,
            weight_clamp: default_weight_clamp(),
            weighted: true,
            update: UpdateRule::Damped,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| {
            Err(Error::Config {
                key: format!("refine.{k}"),
                msg: m.into(),
            })
        };
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta", "must lie strictly between 0 and 1");
        }
        if !(self.plateau_tol >= 0.0 && self.plateau_tol.is_finite()) {
            return bad("plateau_tol", "must be finite and non-negative");
        }
        let [lo, hi] = self.weight_clamp;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("weight_clamp", "needs 0 < min <= max");
        }
        Ok(())
    }
}

/// One simultaneous update of every vertex from the pre-step positions.
///
/// Vertices with fewer than three neighbours stay put. Boundary vertices
/// average over their boundary neighbours only.
pub fn refine_step(mesh: &TriangleMesh, lap: &SparseLaplacian, cfg: &RefineConfig) -> Result<TriangleMesh> {
    let adj = vertex_adjacency(mesh)?;
    let on_boundary = adj.boundary_vertices();
    let v = &mesh.vertices;
    let disp = laplacian_displacement(lap, v)?;
    let moved: Vec<Vec3> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            if adj.neighbors[i].len() < MIN_NEIGHBORS {
                return v[i];
            }
            if cfg.update == UpdateRule::Gradient {
                return v[i] + disp.delta[i] * cfg.eta;
            }
            let mut sum = Vec3::zeros();
            let mut wsum = 0.0;
            for &(j, w) in lap.row(i) {
                if on_boundary[i] && !on_boundary[j as usize] {
                    continue;
                }
                let w = if cfg.weighted { w } else { 1.0 };
                sum += v[j as usize] * w;
                wsum += w;
            }
            if wsum <= 0.0 {
                return v[i];
            }
            let avg = sum / wsum;
            v[i] + (avg - v[i]) * (cfg.eta * (-disp.norms[i]).exp())
        })
        .collect();
    Ok(TriangleMesh {
        vertices: moved,
        faces: mesh.faces.clone(),
        scalar: mesh.scalar.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Of the mesh entering this iteration.
    pub quadratic_form: f64,
    pub mean_disp_norm: f64,
    /// Stopping metric of the mesh leaving this iteration; higher is better.
    pub metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    Plateau,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub mesh: TriangleMesh,
    pub report: Vec<IterRecord>,
    pub stop: StopReason,
    pub warning: Option<String>,
}

/// Iterate [`refine_step`], rebuilding the Laplacian each time.
///
/// `metric` scores a mesh (higher is better, e.g. F-score); without it the
/// negated quadratic form is used. Stops after three consecutive iterations
/// whose relative improvement is below `plateau_tol`. If a step produces a
/// zero-area triangle the previous mesh is returned with a warning.
pub fn refine(
    mesh: &TriangleMesh,
    cfg: &RefineConfig,
    mut metric: Option<&mut dyn FnMut(&TriangleMesh) -> Result<f64>>,
) -> Result<RefineOutcome> {
    cfg.validate()?;
    let mut current = mesh.clone();
    let mut report = Vec::new();
    let mut stalled = 0;
    let mut prev_metric: Option<f64> = None;
    for iter in 0..cfg.max_iters {
        let lap = cotan_laplacian(&current, cfg.weight_clamp)?;
        let disp = laplacian_displacement(&lap, &current.vertices)?;
        let q = quadratic_form(&lap, &current.vertices)?;
        let next = refine_step(&current, &lap, cfg)?;
        let degenerate = zero_area_faces(&next);
        if !degenerate.is_empty() {
            let msg = format!(
                "refinement stopped at iteration {iter}: {} degenerate triangles (first: face {})",
                degenerate.len(),
                degenerate[0]
            );
            log::warn!("{msg}");
            return Ok(RefineOutcome {
                mesh: current,
                report,
                stop: StopReason::Degenerate,
                warning: Some(msg),
            });
        }
        let m = match metric.as_mut() {
            Some(f) => f(&next)?,
            None => -quadratic_form(&cotan_laplacian(&next, cfg.weight_clamp)?, &next.vertices)?,
        };
        report.push(IterRecord {
            iter,
            quadratic_form: q,
            mean_disp_norm: disp.mean_norm(),
            metric: m,
        });
        current = next;
        if let Some(p) = prev_metric {
            let gain = (m - p) / p.abs().max(1e-12);
            stalled = if gain < cfg.plateau_tol { stalled + 1 } else { 0 };
            if stalled >= PLATEAU_WINDOW {
                return Ok(RefineOutcome {
                    mesh: current,
                    report,
                    stop: StopReason::Plateau,
                    warning: None,
                });
            }
        }
        prev_metric = Some(m);
    }
    Ok(RefineOutcome {
        mesh: current,
        report,
        stop: StopReason::MaxIters,
        warning: None,
    })
}

/// `iter,quadratic_form,mean_disp_norm,metric` rows.
pub fn write_report_csv(path: &Path, report: &[IterRecord]) -> Result<()> {
    let mut out = String::from("iter,quadratic_form,mean_disp_norm,metric\n");
    for r in report {
        out.push_str(&format!("{},{},{},{}\n", r.iter, r.quadratic_form, r.mean_disp_norm, r.metric));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Per-vertex `‖Δv‖` attached as the mesh scalar channel.
pub fn laplacian_heatmap(mesh: &TriangleMesh, clamp: [f64; 2]) -> Result<TriangleMesh> {
    let lap = cotan_laplacian(mesh, clamp)?;
    let d = laplacian_displacement(&lap, &mesh.vertices)?;
    Ok(TriangleMesh {
        scalar: Some(d.norms),
        ..mesh.clone()
    })
}

/// Mean of `‖v̄ᵢ − vᵢ‖²` over interior vertices, `v̄ᵢ` the plain neighbour average.
///
/// Boundary vertices of an open surface are skipped: their offset measures the
/// outline, not the surface. Uniform weights keep sliver triangles from dominating.
pub fn mean_squared_laplacian(mesh: &TriangleMesh) -> Result<f64> {
    let adj = vertex_adjacency(mesh)?;
    let boundary = adj.boundary_vertices();
    let (sum, n) = adj
        .neighbors
        .iter()
        .enumerate()
        .filter(|(i, nb)| !boundary[*i] && !nb.is_empty())
        .map(|(i, nb)| {
            let avg = nb.iter().map(|&j| mesh.vertices[j as usize]).sum::<Vec3>() / nb.len() as f64;
            (avg - mesh.vertices[i]).norm_squared()
        })
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    if n == 0 {
        return Err(Error::Empty("interior vertices"));
    }
    Ok(sum / n as f64)
}
