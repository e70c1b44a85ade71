use serde::{Deserialize, Serialize};

use crate::autodiff::{biharmonic_fdm, grad_input, ScalarField};
use crate::error::{Error, Result};
use crate::pointcloud::TrainingSample;

const P_MIN: f64 = 1e-7;

/// Weights and scales of the composite objective
/// `λ₁·bce + λ₂·eikonal + λ₃·hessian_scale·hessian`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_bce: f64,
    pub lambda_eikonal: f64,
    pub lambda_hessian: f64,
    /// Logistic scale mapping SDF to occupancy, meters.
    pub sigma_occ: f64,
    pub hessian_scale: f64,
    /// Stencil step for the biharmonic term, meters.
    pub fdm_step: f64,
    /// Near-surface samples per batch that enter the biharmonic term.
    pub n_hessian: usize,
}

impl LossConfig {
    /// Defaults tied to the leaf size `W`: `σ = W/2`, `h = W/8`, an eighth of the batch for the Hessian.
    pub fn for_grid(leaf_size: f64, batch: usize) -> Self {
        Self {
            lambda_bce: 1.0,
            lambda_eikonal: 0.1,
            lambda_hessian: 1.0,
            sigma_occ: leaf_size / 2.0,
            hessian_scale: 1e-11,
            fdm_step: leaf_size / 8.0,
            n_hessian: (batch / 8).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| {
            Err(Error::Config {
                key: format!("loss.{k}"),
                msg: m.into(),
            })
        };
        for (k, v) in [
            ("lambda_bce", self.lambda_bce),
            ("lambda_eikonal", self.lambda_eikonal),
            ("lambda_hessian", self.lambda_hessian),
            ("hessian_scale", self.hessian_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(k, "must be finite and non-negative");
            }
        }
        if !(self.sigma_occ > 0.0 && self.sigma_occ.is_finite()) {
            return bad("sigma_occ", "must be positive");
        }
        if !(self.fdm_step > 0.0 && self.fdm_step.is_finite()) {
            return bad("fdm_step", "must be positive");
        }
        Ok(())
    }
}

fn occupancy(sdf: f64, sigma: f64) -> (f64, bool) {
    let o = 1.0 / (1.0 + (sdf / sigma).exp());
    let clamped = o.clamp(P_MIN, 1.0 - P_MIN);
    (clamped, clamped != o || !o.is_finite())
}

/// Loss and its derivative with respect to `pred`.
pub(crate) fn bce_with_grad(pred: f64, label: f64, sigma: f64) -> (f64, f64) {
    let (o, saturated) = occupancy(pred, sigma);
    let (y, _) = occupancy(label, sigma);
    let loss = -(y * o.ln() + (1.0 - y) * (1.0 - o).ln());
    let grad = if saturated { 0.0 } else { (y - o) / sigma };
    (loss, grad)
}

/// Binary cross-entropy between `logistic(−pred/σ)` and `logistic(−label/σ)`.
pub fn loss_bce(pred: f64, label: f64, sigma: f64) -> f64 {
    bce_with_grad(pred, label, sigma).0
}

/// Mean of `(‖∇f‖ − 1)²` over `xs`.
pub fn loss_eikonal<F: ScalarField + ?Sized>(f: &F, xs: &[crate::Vec3]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("eikonal query set"));
    }
    let mut sum = 0.0;
    for x in xs {
        let n = grad_input(f, x)?.norm();
        sum += (n - 1.0) * (n - 1.0);
    }
    Ok(sum / xs.len() as f64)
}

/// Mean squared biharmonic over `xs`.
pub fn loss_hessian<F: ScalarField + ?Sized>(f: &F, xs: &[crate::Vec3], fdm_step: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("hessian query set"));
    }
    let mut sum = 0.0;
    for x in xs {
        let b = biharmonic_fdm(f, x, fdm_step)?;
        sum += b * b;
    }
    Ok(sum / xs.len() as f64)
}

/// Unweighted term values and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub bce: f64,
    pub eikonal: f64,
    pub hessian: f64,
}

impl LossBreakdown {
    pub fn combine(bce: f64, eikonal: f64, hessian: f64, cfg: &LossConfig) -> Self {
        let mut b = Self {
            total: 0.0,
            bce,
            eikonal,
            hessian,
        };
        b.total = b.weighted(cfg).iter().sum();
        b
    }

    /// `[λ₁·bce, λ₂·eikonal, λ₃·scale·hessian]` of a breakdown built with `cfg`.
    pub fn weighted(&self, cfg: &LossConfig) -> [f64; 3] {
        [
            cfg.lambda_bce * self.bce,
            cfg.lambda_eikonal * self.eikonal,
            cfg.lambda_hessian * cfg.hessian_scale * self.hessian,
        ]
    }

    pub fn is_finite(&self) -> bool {
        [self.total, self.bce, self.eikonal, self.hessian].iter().all(|v| v.is_finite())
    }
}

impl std::fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "total={} bce={} eikonal={} hessian={}",
            self.total, self.bce, self.eikonal, self.hessian
        )
    }
}

/// Minibatch with the rows chosen for the derivative terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub samples: Vec<TrainingSample>,
    /// Rows of `samples` that enter the Eikonal term.
    pub eikonal: Vec<usize>,
    /// Rows of `samples` that enter the biharmonic term.
    pub hessian: Vec<usize>,
}

impl Batch {
    /// Near-surface rows (`|label| < truncation`) feed the Eikonal term; the
    /// first `n_hessian` of them also feed the biharmonic term.
    pub fn new(samples: Vec<TrainingSample>, truncation: f64, n_hessian: usize) -> Self {
        let eikonal: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].is_near_surface(truncation)).collect();
        let hessian = eikonal.iter().copied().take(n_hessian).collect();
        Self {
            samples,
            eikonal,
            hessian,
        }
    }
}

/// Composite loss by direct per-point evaluation of `f`.
///
/// Empty derivative row sets contribute zero.
pub fn total_loss<F: ScalarField + ?Sized>(f: &F, batch: &Batch, cfg: &LossConfig) -> Result<LossBreakdown> {
    cfg.validate()?;
    if batch.samples.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let mut bce = 0.0;
    let mut wsum = 0.0;
    for s in &batch.samples {
        bce += s.weight * loss_bce(f.value(&s.query)?, s.sdf_label, cfg.sigma_occ);
        wsum += s.weight;
    }
    bce /= wsum;
    let pick = |rows: &[usize]| rows.iter().map(|&i| batch.samples[i].query).collect::<Vec<_>>();
    let eik_pts = pick(&batch.eikonal);
    let hess_pts = pick(&batch.hessian);
    let eikonal = if eik_pts.is_empty() { 0.0 } else { loss_eikonal(f, &eik_pts)? };
    let hessian = if hess_pts.is_empty() {
        0.0
    } else {
        loss_hessian(f, &hess_pts, cfg.fdm_step)?
    };
    Ok(LossBreakdown::combine(bce, eikonal, hessian, cfg))
}
