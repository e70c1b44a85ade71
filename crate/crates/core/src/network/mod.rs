//! Multi-scale SDF network.
//!
//! Per level the query's trilinear corner feature is fed through a V-cycle:
//!
//! ```text
//! down:  v̌₀ = D₀(f₀),          v̌ₗ = Dₗ(v̌ₗ₋₁) + fₗ
//! up:    v̂_{L-1} = v̌_{L-1},   v̂ₗ = Uₗ(v̂ₗ₊₁) + v̌ₗ
//! sdf  = head(v̂₀)
//! ```
//!
//! `Dₗ` and `Uₗ` are small softplus MLPs `H → width → … → H`. The coarsest
//! upward slot is an identity skip, so a query costs `2L − 1` kernel MLP
//! evaluations plus the head.

mod field;

pub use field::{FieldGrad, FieldView, Forward};

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Linear;
use crate::error::{Error, Result};
use crate::octree::OctreeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub levels: usize,
    pub feature_dim: usize,
    /// Hidden width of every MLP.
    pub width: usize,
    /// Hidden layers per MLP.
    pub depth: usize,
    /// Softplus sharpness.
    pub beta: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            feature_dim: 128,
            width: 128,
            depth: 2,
            beta: 100.0,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| {
            Err(Error::Config {
                key: format!("field.{k}"),
                msg: m.into(),
            })
        };
        if self.levels == 0 || self.levels > 21 {
            return bad("levels", "must be in 1..=21");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim", "must be at least 1");
        }
        if self.width == 0 {
            return bad("width", "must be at least 1");
        }
        if self.depth == 0 {
            return bad("depth", "must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta", "must be positive");
        }
        Ok(())
    }

    /// Closed-form parameter count.
    ///
    /// With `h = feature_dim`, `w = width`, `d = depth`, `L = levels`:
    ///
    /// ```text
    /// kernel = (h·w + w) + (d − 1)(w² + w) + (w·h + h)
    /// head   = (h·w + w) + (d − 1)(w² + w) + (w + 1)
    /// total  = (2L − 1)·kernel + head
    /// ```
    pub fn param_count(&self) -> usize {
        let (h, w, d, l) = (self.feature_dim, self.width, self.depth, self.levels);
        let hidden = (d - 1) * (w * w + w);
        let kernel = (h * w + w) + hidden + (w * h + h);
        let head = (h * w + w) + hidden + (w + 1);
        (2 * l - 1) * kernel + head
    }
}

/// One slot of the V-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// MLP whose layers start at this index of the layer list.
    Mlp { first: usize },
    Identity,
}

#[derive(Debug)]
pub struct MultiScaleField {
    config: FieldConfig,
    layers: Vec<Linear>,
    /// `2L` slots: downward kernels for levels `0..L`, then upward ones.
    kernels: Vec<Kernel>,
    head: usize,
    kernel_evals: AtomicU64,
}

impl Clone for MultiScaleField {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            layers: self.layers.clone(),
            kernels: self.kernels.clone(),
            head: self.head,
            kernel_evals: AtomicU64::new(self.kernel_evals.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for MultiScaleField {
    fn eq(&self, o: &Self) -> bool {
        self.config == o.config && self.layers == o.layers && self.kernels == o.kernels && self.head == o.head
    }
}

fn uniform_linear(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Linear {
    let bound = 1.0 / (inputs as f64).sqrt();
    Linear {
        weight: Array2::from_shape_fn((inputs, outputs), |_| rng.gen_range(-bound..=bound)),
        bias: Array1::from_shape_fn(outputs, |_| rng.gen_range(-bound..=bound)),
    }
}

impl MultiScaleField {
    /// Layers drawn uniform in `±1/√fan_in`; the head's output bias starts at zero.
    pub fn new(config: FieldConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_layers(config, |i, o| uniform_linear(&mut rng, i, o))
    }

    /// Every weight and bias zero.
    pub fn zeros(config: FieldConfig) -> Result<Self> {
        Self::with_layers(config, Linear::zeros)
    }

    fn with_layers(config: FieldConfig, mut make: impl FnMut(usize, usize) -> Linear) -> Result<Self> {
        config.validate()?;
        let (h, w, d, l) = (config.feature_dim, config.width, config.depth, config.levels);
        let mut layers = Vec::new();
        let mut mlp = |layers: &mut Vec<Linear>, out: usize| {
            let first = layers.len();
            layers.push(make(h, w));
            for _ in 1..d {
                layers.push(make(w, w));
            }
            layers.push(make(w, out));
            first
        };
        let mut kernels = Vec::with_capacity(2 * l);
        for _ in 0..l {
            kernels.push(Kernel::Mlp { first: mlp(&mut layers, h) });
        }
        for lvl in 0..l {
            kernels.push(if lvl + 1 == l {
                Kernel::Identity
            } else {
                Kernel::Mlp { first: mlp(&mut layers, h) }
            });
        }
        let head = mlp(&mut layers, 1);
        layers.last_mut().expect("head layer").bias.fill(0.0);
        Ok(Self {
            config,
            layers,
            kernels,
            head,
            kernel_evals: AtomicU64::new(0),
        })
    }

    /// Rebuild from stored layers, checking their shapes against `config`.
    pub fn from_layers(config: FieldConfig, layers: Vec<Linear>) -> Result<Self> {
        let mut field = Self::zeros(config)?;
        if layers.len() != field.layers.len() {
            return Err(Error::Mismatch(format!(
                "expected {} layers, found {}",
                field.layers.len(),
                layers.len()
            )));
        }
        for (i, (a, b)) in field.layers.iter().zip(&layers).enumerate() {
            if a.weight.dim() != b.weight.dim() || a.bias.len() != b.bias.len() {
                return Err(Error::Mismatch(format!("layer {i} has shape {:?}", b.weight.dim())));
            }
        }
        field.layers = layers;
        Ok(field)
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    /// Downward slots `0..L` followed by upward slots `L..2L`.
    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn head_first_layer(&self) -> usize {
        self.head
    }

    /// Layers per MLP.
    pub fn mlp_len(&self) -> usize {
        self.config.depth + 1
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }

    /// All weights and biases, layer by layer, each weight row-major then its bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Mismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
        Ok(())
    }

    /// Kernel MLP applications per query point since the last reset.
    pub fn kernel_evaluations(&self) -> u64 {
        self.kernel_evals.load(Ordering::Relaxed)
    }

    pub fn reset_kernel_evaluations(&self) {
        self.kernel_evals.store(0, Ordering::Relaxed);
    }

    pub(crate) fn count_kernel_evals(&self, n: u64) {
        self.kernel_evals.fetch_add(n, Ordering::Relaxed);
    }

    pub fn check_grid(&self, grid: &OctreeGrid) -> Result<()> {
        if grid.levels() != self.config.levels || grid.feature_dim() != self.config.feature_dim {
            return Err(Error::Mismatch(format!(
                "field expects {} levels of dimension {}, grid has {} of dimension {}",
                self.config.levels,
                self.config.feature_dim,
                grid.levels(),
                grid.feature_dim()
            )));
        }
        Ok(())
    }
}
