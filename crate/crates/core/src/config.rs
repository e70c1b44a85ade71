//! Run configuration read from TOML. Every field is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EvalConfig;
use crate::network::FieldConfig;
use crate::pointcloud::{SamplingConfig, SyntheticScene};
use crate::refine::RefineConfig;
use crate::training::{LossConfig, TrainConfig, TrainSetup};

/// Sphere scene shipped with the crate: unit sphere, 50k rays, 5 mm noise, 5 cm leaves.
pub const SPHERE_SCENE: &str = include_str!("../configs/sphere.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OctreeSection {
    pub levels: usize,
    /// Leaf voxel edge length `W`, meters.
    pub leaf_size: f64,
    pub feature_dim: usize,
}

impl Default for OctreeSection {
    fn default() -> Self {
        let f = FieldConfig::default();
        Self {
            levels: f.levels,
            leaf_size: 0.10,
            feature_dim: f.feature_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub width: usize,
    pub depth: usize,
    pub beta: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let f = FieldConfig::default();
        Self {
            width: f.width,
            depth: f.depth,
            beta: f.beta,
        }
    }
}

/// Loss weights; unset entries resolve from the leaf size and batch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSection {
    pub lambda_bce: Option<f64>,
    pub lambda_eikonal: Option<f64>,
    pub lambda_hessian: Option<f64>,
    pub sigma_occ: Option<f64>,
    pub hessian_scale: Option<f64>,
    pub fdm_step: Option<f64>,
    pub n_hessian: Option<usize>,
}

impl LossSection {
    pub fn resolve(&self, leaf_size: f64, batch: usize) -> LossConfig {
        let d = LossConfig::for_grid(leaf_size, batch);
        LossConfig {
            lambda_bce: self.lambda_bce.unwrap_or(d.lambda_bce),
            lambda_eikonal: self.lambda_eikonal.unwrap_or(d.lambda_eikonal),
            lambda_hessian: self.lambda_hessian.unwrap_or(d.lambda_hessian),
            sigma_occ: self.sigma_occ.unwrap_or(d.sigma_occ),
            hessian_scale: self.hessian_scale.unwrap_or(d.hessian_scale),
            fdm_step: self.fdm_step.unwrap_or(d.fdm_step),
            n_hessian: self.n_hessian.unwrap_or(d.n_hessian),
        }
    }

    fn from_resolved(l: &LossConfig) -> Self {
        Self {
            lambda_bce: Some(l.lambda_bce),
            lambda_eikonal: Some(l.lambda_eikonal),
            lambda_hessian: Some(l.lambda_hessian),
            sigma_occ: Some(l.sigma_occ),
            hessian_scale: Some(l.hessian_scale),
            fdm_step: Some(l.fdm_step),
            n_hessian: Some(l.n_hessian),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub n_surface: usize,
    pub n_free: usize,
    pub truncation: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let s = SamplingConfig::default();
        Self {
            n_surface: s.n_surface,
            n_free: s.n_free,
            truncation: s.truncation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractSection {
    /// Marching-cubes cell size, meters; half the leaf size when unset.
    pub cell: Option<f64>,
    /// Leaf cells added around each occupied leaf before extraction.
    pub dilation: usize,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            cell: None,
            dilation: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Worker threads for every parallel phase; the rayon default when unset.
    pub threads: Option<usize>,
    pub octree: OctreeSection,
    pub network: NetworkSection,
    pub loss: LossSection,
    /// `train.seed` is the master seed for the whole run.
    pub train: TrainConfig,
    pub sampling: SamplingSection,
    pub extract: ExtractSection,
    pub refine: RefineConfig,
    pub eval: EvalConfig,
    pub scene: Option<SyntheticScene>,
}

impl RunConfig {
    /// Parse and validate. Errors name the offending key as a dotted path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().message().trim().to_string();
            Error::Config {
                key: error_key(&path, &msg),
                msg,
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn sphere_scene() -> Self {
        Self::from_toml(SPHERE_SCENE).expect("bundled config is valid")
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn field(&self) -> FieldConfig {
        FieldConfig {
            levels: self.octree.levels,
            feature_dim: self.octree.feature_dim,
            width: self.network.width,
            depth: self.network.depth,
            beta: self.network.beta,
        }
    }

    pub fn loss(&self) -> LossConfig {
        self.loss.resolve(self.octree.leaf_size, self.train.batch)
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            n_surface: self.sampling.n_surface,
            n_free: self.sampling.n_free,
            truncation: self.sampling.truncation,
            seed: 0,
        }
    }

    pub fn extract_cell(&self) -> f64 {
        self.extract.cell.unwrap_or(self.octree.leaf_size / 2.0)
    }

    pub fn train_setup(&self) -> TrainSetup {
        TrainSetup {
            field: self.field(),
            leaf_size: self.octree.leaf_size,
            sampling: self.sampling(),
            loss: self.loss(),
            train: self.train.clone(),
        }
    }

    /// Copy with every derived default written out.
    pub fn effective(&self) -> Self {
        let mut out = self.clone();
        out.loss = LossSection::from_resolved(&self.loss());
        out.extract.cell = Some(self.extract_cell());
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| {
            Err(Error::Config {
                key: key.into(),
                msg: msg.into(),
            })
        };
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1");
        }
        if !(self.octree.leaf_size > 0.0 && self.octree.leaf_size.is_finite()) {
            return bad("octree.leaf_size", "must be positive");
        }
        self.field().validate().map_err(|e| match e {
            Error::Config { key, msg } => {
                let name = key.trim_start_matches("field.");
                let section = match name {
                    "levels" | "feature_dim" => "octree",
                    _ => "network",
                };
                Error::Config {
                    key: format!("{section}.{name}"),
                    msg,
                }
            }
            other => other,
        })?;
        self.train.validate()?;
        self.loss().validate()?;
        if !(self.sampling.truncation > 0.0 && self.sampling.truncation.is_finite()) {
            return bad("sampling.truncation", "must be positive");
        }
        if let Some(c) = self.extract.cell {
            if !(c > 0.0 && c.is_finite()) {
                return bad("extract.cell", "must be positive");
            }
        }
        self.refine.validate()?;
        self.eval.validate()?;
        if let Some(scene) = &self.scene {
            scene.shape.validate().map_err(|e| Error::Config {
                key: "scene.shape".into(),
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// Dotted key for a deserialization error; unknown fields are appended to the path.
fn error_key(path: &str, msg: &str) -> String {
    let base = if path == "." { "" } else { path };
    let unknown = msg
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next());
    match unknown {
        Some(field) if base.is_empty() => field.to_string(),
        Some(field) if !base.ends_with(field) => format!("{base}.{field}"),
        _ if base.is_empty() => "<root>".to_string(),
        _ => base.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.octree.levels, 3);
        assert_eq!(c.octree.leaf_size, 0.10);
        assert_eq!(c.octree.feature_dim, 128);
        assert_eq!((c.network.width, c.network.depth), (128, 2));
        let l = c.loss();
        assert_eq!(l.hessian_scale, 1e-11);
        assert_eq!(l.sigma_occ, 0.05);
        assert_eq!(c.extract_cell(), 0.05);
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let key = |text: &str| match RunConfig::from_toml(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key("bogus = 1\n"), "bogus");
        assert_eq!(key("[loss]\nlambda_bc = 1.0\n"), "loss.lambda_bc");
        assert_eq!(key("[octree]\nlevels = \"three\"\n"), "octree.levels");
        assert_eq!(key("[refine]\neta = 1.5\n"), "refine.eta");
        assert_eq!(key("[network]\nwidth = 0\n"), "network.width");
        assert_eq!(key("[octree]\nfeature_dim = 0\n"), "octree.feature_dim");
        assert_eq!(key("[sampling]\ntruncation = -1.0\n"), "sampling.truncation");
    }

    #[test]
    fn effective_config_round_trips() {
        let c = RunConfig::sphere_scene();
        let e = c.effective();
        let back = RunConfig::from_toml(&e.to_toml()).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.loss(), c.loss());
        assert_eq!(back.effective(), e);
    }

    #[test]
    fn bundled_sphere_scene() {
        let c = RunConfig::sphere_scene();
        assert_eq!(c.scene, Some(SyntheticScene::sphere(50_000, 0.005)));
        assert_eq!(c.octree.leaf_size, 0.05);
        assert_eq!(c.octree.levels, 3);
    }

    #[test]
    fn loss_overrides_win_over_derived_defaults() {
        let c = RunConfig::from_toml("[octree]\nleaf_size = 0.2\n[loss]\nhessian_scale = 1.0\n").unwrap();
        let l = c.loss();
        assert_eq!(l.hessian_scale, 1.0);
        assert_eq!(l.sigma_occ, 0.1);
        assert_eq!(l.fdm_step, 0.025);
    }
}
