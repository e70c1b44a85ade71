//! Optimisation of the field network and grid features.
//!
//! Each step draws a minibatch of ray samples, evaluates the composite loss
//! through batched jet tapes and applies Adam to both parameter groups. The
//! batch is processed in fixed-size chunks whose gradients are summed in
//! chunk order, so the result does not depend on the thread count.

mod adam;
mod loss;

pub use adam::Adam;
pub use loss::{loss_bce, loss_eikonal, loss_hessian, total_loss, Batch, LossBreakdown, LossConfig};

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Lanes, Stencil};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::network::{FieldConfig, FieldGrad, MultiScaleField};
use crate::octree::OctreeGrid;
use crate::pointcloud::{sample_rays, PointSample, SamplingConfig, TrainingSample};

/// Rows per gradient chunk.
pub const CHUNK: usize = 256;
/// Biharmonic centres per chunk (7 stencil points each).
const HESSIAN_CHUNK: usize = 32;
/// Scale of the logged second-order diagnostic.
pub const LAPLACIAN_DIAG_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr_features: f64,
    pub lr_mlp: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            batch: 1024,
            lr_features: 1e-3,
            lr_mlp: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| {
            Err(Error::Config {
                key: format!("train.{k}"),
                msg: m.into(),
            })
        };
        if self.steps == 0 {
            return bad("steps", "must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch", "must be at least 1");
        }
        if !(self.lr_features >= 0.0 && self.lr_features.is_finite()) {
            return bad("lr_features", "must be finite and non-negative");
        }
        if !(self.lr_mlp >= 0.0 && self.lr_mlp.is_finite()) {
            return bad("lr_mlp", "must be finite and non-negative");
        }
        Ok(())
    }
}

/// Everything `train` needs besides the points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSetup {
    pub field: FieldConfig,
    pub leaf_size: f64,
    pub sampling: SamplingConfig,
    pub loss: LossConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub loss: LossBreakdown,
    /// `1e-8 · mean |Δu|` over the biharmonic centres; logged only.
    pub laplacian_diag: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub step: usize,
    pub seed: u64,
    pub mlp_opt: Adam,
    pub feature_opt: Adam,
    pub history: Vec<LossRecord>,
    rng: ChaCha8Rng,
}

impl TrainState {
    pub fn new(field: &MultiScaleField, grid: &OctreeGrid, seed: u64) -> Self {
        let features = (0..grid.levels()).map(|l| grid.features(l).len()).sum();
        Self {
            step: 0,
            seed,
            mlp_opt: Adam::new(field.param_count()),
            feature_opt: Adam::new(features),
            history: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

pub struct Trained {
    pub field: MultiScaleField,
    pub grid: OctreeGrid,
    pub state: TrainState,
}

/// Seeds for the independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub grid: u64,
    pub field: u64,
    pub sampling: u64,
    pub batches: u64,
    pub scan: u64,
    pub eval: u64,
    pub ground_truth: u64,
}

impl Seeds {
    pub fn derive(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        Self {
            grid: rng.gen(),
            field: rng.gen(),
            sampling: rng.gen(),
            batches: rng.gen(),
            scan: rng.gen(),
            eval: rng.gen(),
            ground_truth: rng.gen(),
        }
    }
}

/// Build the grid and network for `points` and run `setup.train.steps` steps.
pub fn train(points: &[PointSample], setup: &TrainSetup) -> Result<Trained> {
    setup.train.validate()?;
    setup.loss.validate()?;
    setup.field.validate()?;
    let seeds = Seeds::derive(setup.train.seed);
    let sampling = SamplingConfig {
        seed: seeds.sampling,
        ..setup.sampling.clone()
    };
    let samples = sample_rays(points, &sampling)?;
    if samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    let mut grid = OctreeGrid::build(points, setup.field.levels, setup.leaf_size, setup.field.feature_dim, seeds.grid)?;
    let mut field = MultiScaleField::new(setup.field.clone(), seeds.field)?;
    let mut state = TrainState::new(&field, &grid, seeds.batches);
    log::info!(
        "training on {} samples, {} leaf nodes, {} parameters",
        samples.len(),
        grid.node_count(0),
        field.param_count()
    );
    run_steps(&mut field, &mut grid, &samples, sampling.truncation, &setup.loss, &setup.train, &mut state, setup.train.steps)?;
    Ok(Trained { field, grid, state })
}

/// Continue optimisation for `steps` more steps.
#[allow(clippy::too_many_arguments)]
pub fn run_steps(
    field: &mut MultiScaleField,
    grid: &mut OctreeGrid,
    samples: &[TrainingSample],
    truncation: f64,
    loss: &LossConfig,
    cfg: &TrainConfig,
    state: &mut TrainState,
    steps: usize,
) -> Result<()> {
    let start = Instant::now();
    for _ in 0..steps {
        let picked = (0..cfg.batch).map(|_| samples[state.rng.gen_range(0..samples.len())]).collect();
        let batch = Batch::new(picked, truncation, loss.n_hessian);
        let (breakdown, diag, grads) = match loss_and_gradients(field, grid, &batch, loss) {
            Ok(r) => r,
            Err(Error::NonFinite { context }) => {
                return Err(Error::NonFiniteLoss {
                    step: state.step,
                    breakdown: context,
                })
            }
            Err(e) => return Err(e),
        };
        if !breakdown.is_finite() {
            return Err(Error::NonFiniteLoss {
                step: state.step,
                breakdown: breakdown.to_string(),
            });
        }
        if let Err(Error::NonFinite { context }) = grads.check_finite() {
            return Err(Error::NonFiniteLoss {
                step: state.step,
                breakdown: format!("{breakdown}; {context}"),
            });
        }
        apply_update(field, grid, &grads, cfg, state);
        state.history.push(LossRecord {
            step: state.step,
            loss: breakdown,
            laplacian_diag: diag,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if state.step % 500 == 0 {
            log::info!("step {} {}", state.step, breakdown);
        }
        state.step += 1;
    }
    Ok(())
}

fn apply_update(field: &mut MultiScaleField, grid: &mut OctreeGrid, grads: &FieldGrad, cfg: &TrainConfig, state: &mut TrainState) {
    let g = grads.layer_params();
    let params = field
        .layers_mut()
        .iter_mut()
        .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()));
    state.mlp_opt.step(params, &g, cfg.lr_mlp);
    let fg: Vec<f64> = grads.features.concat();
    state.feature_opt.step(grid.all_features_mut(), &fg, cfg.lr_features);
}

struct Partial {
    bce: f64,
    eikonal: f64,
    hessian: f64,
    lap_abs: f64,
    grads: FieldGrad,
}

/// Loss breakdown, second-order diagnostic and gradient of the weighted total.
pub fn loss_and_gradients(
    field: &MultiScaleField,
    grid: &OctreeGrid,
    batch: &Batch,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, f64, FieldGrad)> {
    cfg.validate()?;
    field.check_grid(grid)?;
    let n = batch.samples.len();
    if n == 0 {
        return Err(Error::Empty("training batch"));
    }
    let wsum: f64 = batch.samples.iter().map(|s| s.weight).sum();
    let n_eik = batch.eikonal.len();
    let n_hess = batch.hessian.len();
    let mut eik_row = vec![false; n];
    for &i in &batch.eikonal {
        eik_row[i] = true;
    }
    let use_grad = cfg.lambda_eikonal > 0.0 || n_hess == 0;
    let lanes = if use_grad && n_eik > 0 { Lanes::Gradient } else { Lanes::Value };

    let sample_chunks: Vec<(usize, usize)> = (0..n).step_by(CHUNK).map(|s| (s, (s + CHUNK).min(n))).collect();
    let hess_chunks: Vec<(usize, usize)> = (0..n_hess)
        .step_by(HESSIAN_CHUNK)
        .map(|s| (s, (s + HESSIAN_CHUNK).min(n_hess)))
        .collect();

    enum Job {
        Samples(usize, usize),
        Hessian(usize, usize),
    }
    let jobs: Vec<Job> = sample_chunks
        .into_iter()
        .map(|(a, b)| Job::Samples(a, b))
        .chain(hess_chunks.into_iter().map(|(a, b)| Job::Hessian(a, b)))
        .collect();

    let stencil = Stencil::laplacian_7pt(cfg.fdm_step);
    let parts: Result<Vec<Partial>> = jobs
        .par_iter()
        .map(|job| {
            let mut p = Partial {
                bce: 0.0,
                eikonal: 0.0,
                hessian: 0.0,
                lap_abs: 0.0,
                grads: FieldGrad::zeros(field, grid),
            };
            match *job {
                Job::Samples(a, b) => {
                    let rows = &batch.samples[a..b];
                    let xs: Vec<Vec3> = rows.iter().map(|s| s.query).collect();
                    let fw = field.forward(grid, &xs, lanes)?;
                    let out = fw.output();
                    let m = rows.len();
                    let mut seed = Array2::zeros(out.data.raw_dim());
                    for (i, s) in rows.iter().enumerate() {
                        let (l, g) = loss::bce_with_grad(out.data[[i, 0]], s.sdf_label, cfg.sigma_occ);
                        p.bce += s.weight * l / wsum;
                        seed[[i, 0]] = cfg.lambda_bce * s.weight * g / wsum;
                        if lanes == Lanes::Gradient && eik_row[a + i] {
                            let gv = [out.data[[m + i, 0]], out.data[[2 * m + i, 0]], out.data[[3 * m + i, 0]]];
                            let norm = (gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2]).sqrt();
                            p.eikonal += (norm - 1.0) * (norm - 1.0) / n_eik as f64;
                            if norm > 0.0 {
                                let k = cfg.lambda_eikonal * 2.0 * (norm - 1.0) / (norm * n_eik as f64);
                                for d in 0..3 {
                                    seed[[(d + 1) * m + i, 0]] = k * gv[d];
                                }
                            }
                        }
                    }
                    // a non-finite term is reported with its breakdown by the caller
                    if p.bce.is_finite() && p.eikonal.is_finite() {
                        fw.backward(seed, grid, &mut p.grads)?;
                    }
                }
                Job::Hessian(a, b) => {
                    let k = stencil.offsets.len();
                    let centres: Vec<Vec3> = batch.hessian[a..b].iter().map(|&r| batch.samples[r].query).collect();
                    let xs: Vec<Vec3> = centres.iter().flat_map(|c| stencil.points(c)).collect();
                    let fw = field.forward(grid, &xs, Lanes::Laplacian)?;
                    let out = fw.output();
                    let m = xs.len();
                    let mut seed = Array2::zeros(out.data.raw_dim());
                    let w = cfg.lambda_hessian * cfg.hessian_scale;
                    for c in 0..centres.len() {
                        let laps: Vec<f64> = (0..k).map(|j| out.data[[4 * m + c * k + j, 0]]).collect();
                        let bih = stencil.combine(&laps);
                        p.hessian += bih * bih / n_hess as f64;
                        p.lap_abs += laps[0].abs() / n_hess as f64;
                        for j in 0..k {
                            seed[[4 * m + c * k + j, 0]] = w * 2.0 * bih * stencil.coefficients[j] / n_hess as f64;
                        }
                    }
                    if w > 0.0 && p.hessian.is_finite() {
                        fw.backward(seed, grid, &mut p.grads)?;
                    }
                }
            }
            Ok(p)
        })
        .collect();

    let mut parts = parts?.into_iter();
    let mut acc = parts.next().expect("at least one chunk");
    for p in parts {
        acc.bce += p.bce;
        acc.eikonal += p.eikonal;
        acc.hessian += p.hessian;
        acc.lap_abs += p.lap_abs;
        acc.grads.add_assign(&p.grads);
    }
    let breakdown = LossBreakdown::combine(acc.bce, acc.eikonal, acc.hessian, cfg);
    Ok((breakdown, LAPLACIAN_DIAG_SCALE * acc.lap_abs, acc.grads))
}

/// `step,total,bce,eikonal,hessian,wall_ms` rows.
pub fn write_history_csv(path: &Path, history: &[LossRecord]) -> Result<()> {
    let mut out = String::from("step,total,bce,eikonal,hessian,wall_ms\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            r.step, r.loss.total, r.loss.bce, r.loss.eikonal, r.loss.hessian, r.wall_ms
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
