//! Versioned binary bundle of a trained field: config echo, MLP weights and grid blob.
//!
//! Layout, little endian:
//! `magic[8] version:u32 config_len:u64 config_toml layer_count:u32`
//! then per layer `inputs:u32 outputs:u32 weight[inputs·outputs] bias[outputs]` as f64,
//! then `grid_len:u64 grid_blob`.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::autodiff::Linear;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::network::MultiScaleField;
use crate::octree::OctreeGrid;

const MAGIC: &[u8; 8] = b"PMAPCKPT";
const VERSION: u32 = 1;
const MAX_DIM: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Effective configuration of the run that produced the weights.
    pub config: RunConfig,
    pub field: MultiScaleField,
    pub grid: OctreeGrid,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, field: MultiScaleField, grid: OctreeGrid) -> Result<Self> {
        field.check_grid(&grid)?;
        Ok(Self {
            config: config.effective(),
            field,
            grid,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(VERSION).unwrap();
        let cfg = self.config.to_toml();
        out.write_u64::<LittleEndian>(cfg.len() as u64).unwrap();
        out.extend_from_slice(cfg.as_bytes());
        let layers = self.field.layers();
        out.write_u32::<LittleEndian>(layers.len() as u32).unwrap();
        for l in layers {
            out.write_u32::<LittleEndian>(l.inputs() as u32).unwrap();
            out.write_u32::<LittleEndian>(l.outputs() as u32).unwrap();
            for w in l.weight.iter().chain(l.bias.iter()) {
                out.write_f64::<LittleEndian>(*w).unwrap();
            }
        }
        let grid = self.grid.to_bytes();
        out.write_u64::<LittleEndian>(grid.len() as u64).unwrap();
        out.extend_from_slice(&grid);
        out
    }

    /// Decode and validate a bundle written by [`Checkpoint::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = |_| Error::Format("checkpoint truncated".into());
        let mut r = Cursor::new(bytes);
        let remaining = |r: &Cursor<&[u8]>| bytes.len() as u64 - r.position();
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }

        let cfg_len = r.read_u64::<LittleEndian>().map_err(truncated)?;
        if cfg_len > remaining(&r) {
            return Err(Error::Format("config length exceeds checkpoint size".into()));
        }
        let mut cfg = vec![0u8; cfg_len as usize];
        r.read_exact(&mut cfg).map_err(truncated)?;
        let cfg = std::str::from_utf8(&cfg).map_err(|_| Error::Format("config echo is not UTF-8".into()))?;
        let config = RunConfig::from_toml(cfg)?;
        let fc = config.field();
        if fc.width > MAX_DIM || fc.feature_dim > MAX_DIM || fc.depth > 64 {
            return Err(Error::Format("network dimensions out of range".into()));
        }
        if fc.param_count() as u64 > remaining(&r) / 8 {
            return Err(Error::Format("checkpoint too short for its network".into()));
        }

        let n_layers = r.read_u32::<LittleEndian>().map_err(truncated)?;
        let mut layers = Vec::new();
        for _ in 0..n_layers {
            let inputs = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
            let outputs = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
            if inputs > MAX_DIM || outputs > MAX_DIM {
                return Err(Error::Format("layer dimensions out of range".into()));
            }
            let n = inputs * outputs + outputs;
            if n as u64 > remaining(&r) / 8 {
                return Err(Error::Format("checkpoint truncated".into()));
            }
            let mut vals = vec![0.0; n];
            r.read_f64_into::<LittleEndian>(&mut vals).map_err(truncated)?;
            if !vals.iter().all(|v| v.is_finite()) {
                return Err(Error::Format("non-finite network parameter".into()));
            }
            let bias = Array1::from(vals.split_off(inputs * outputs));
            let weight = Array2::from_shape_vec((inputs, outputs), vals).expect("length checked");
            layers.push(Linear { weight, bias });
        }
        let field = MultiScaleField::from_layers(fc, layers)?;

        let grid_len = r.read_u64::<LittleEndian>().map_err(truncated)?;
        if grid_len != remaining(&r) {
            return Err(Error::Format("grid blob length does not match checkpoint size".into()));
        }
        let grid = OctreeGrid::from_bytes(&bytes[r.position() as usize..])?;
        field.check_grid(&grid)?;
        if !(0..grid.levels()).all(|l| grid.features(l).iter().all(|f| f.is_finite())) {
            return Err(Error::Format("non-finite grid feature".into()));
        }
        if grid.leaf_size() != config.octree.leaf_size {
            return Err(Error::Mismatch("grid leaf size differs from the config echo".into()));
        }
        Ok(Self { config, field, grid })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
