//! Reconstruction quality against ground-truth points.
//!
//! Distances are reported in the usual units of the field: centimetres for
//! accuracy and completeness, metres for Chamfer-L1, percent for ratios.

mod kdtree;

pub use kdtree::KdTree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub threshold_cm: f64,
    pub n_samples: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold_cm: 10.0,
            n_samples: 10_000,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_cm >= 0.0 && self.threshold_cm.is_finite()) {
            return Err(Error::Config {
                key: "eval.threshold_cm".into(),
                msg: "must be finite and non-negative".into(),
            });
        }
        if self.n_samples == 0 {
            return Err(Error::Config {
                key: "eval.n_samples".into(),
                msg: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub accuracy_cm: f64,
    pub completeness_cm: f64,
    pub chamfer_l1_m: f64,
    pub acc_ratio_pct: f64,
    pub comp_ratio_pct: f64,
    pub f_score_pct: f64,
    pub threshold_cm: f64,
    pub n_pred: usize,
    pub n_gt: usize,
}

impl ReconReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_text(&self) -> String {
        format!(
            "accuracy: {:.4} cm\ncompleteness: {:.4} cm\nchamfer_l1: {:.6} m\nprecision: {:.2} %\nrecall: {:.2} %\nf_score: {:.2} %\nthreshold: {} cm\nn_pred: {}\nn_gt: {}\n",
            self.accuracy_cm,
            self.completeness_cm,
            self.chamfer_l1_m,
            self.acc_ratio_pct,
            self.comp_ratio_pct,
            self.f_score_pct,
            self.threshold_cm,
            self.n_pred,
            self.n_gt
        )
    }
}

/// `n` points uniform over the mesh area.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    if mesh.faces.is_empty() {
        return Err(Error::Empty("mesh"));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::ZeroArea((0..mesh.faces.len()).collect()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = rng.gen::<f64>() * total;
            let f = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
            let [a, b, c] = mesh.faces[f].map(|i| mesh.vertices[i as usize]);
            let s = rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>();
            a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t)
        })
        .collect())
}

/// Distance from each query to its nearest point in `tree`.
fn nn_distances(tree: &KdTree, queries: &[Vec3]) -> Vec<f64> {
    queries.par_iter().map(|q| tree.nearest(q).expect("non-empty tree").1).collect()
}

fn report_from_distances(pred_to_gt: &[f64], gt_to_pred: &[f64], threshold_cm: f64) -> ReconReport {
    let t = threshold_cm / 100.0;
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    let within = |d: &[f64]| 100.0 * d.iter().filter(|&&x| x <= t).count() as f64 / d.len() as f64;
    let acc = mean(pred_to_gt);
    let comp = mean(gt_to_pred);
    let p = within(pred_to_gt);
    let r = within(gt_to_pred);
    ReconReport {
        accuracy_cm: acc * 100.0,
        completeness_cm: comp * 100.0,
        chamfer_l1_m: 0.5 * (acc + comp),
        acc_ratio_pct: p,
        comp_ratio_pct: r,
        f_score_pct: if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 },
        threshold_cm,
        n_pred: pred_to_gt.len(),
        n_gt: gt_to_pred.len(),
    }
}

/// Accuracy, completeness, Chamfer-L1 and threshold ratios between two point sets.
pub fn evaluate(pred: &[Vec3], gt: &[Vec3], threshold_cm: f64) -> Result<ReconReport> {
    if pred.is_empty() {
        return Err(Error::Empty("predicted points"));
    }
    if gt.is_empty() {
        return Err(Error::Empty("ground-truth points"));
    }
    if !(threshold_cm >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be non-negative, got {threshold_cm}")));
    }
    let gt_tree = KdTree::new(gt);
    let pred_tree = KdTree::new(pred);
    Ok(report_from_distances(
        &nn_distances(&gt_tree, pred),
        &nn_distances(&pred_tree, gt),
        threshold_cm,
    ))
}

/// Sample `mesh` and evaluate it against `gt`.
pub fn evaluate_mesh(mesh: &TriangleMesh, gt: &[Vec3], cfg: &EvalConfig, seed: u64) -> Result<ReconReport> {
    cfg.validate()?;
    let pred = sample_surface(mesh, cfg.n_samples, seed)?;
    evaluate(&pred, gt, cfg.threshold_cm)
}
