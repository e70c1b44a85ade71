//! Multi-level hash-indexed octree holding learnable corner features.

mod grid;
mod morton;

pub use grid::{LevelFeatures, LevelQuery, OctreeGrid};
pub use morton::{morton_decode, morton_encode, MortonKey, MORTON_BITS};
