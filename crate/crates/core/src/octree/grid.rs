//! Corner-keyed sparse octree.
//!
//! Each level keeps two tables: occupied nodes (keyed by the Morton code of
//! the node cell) and node corners (keyed by the Morton code of the corner
//! lattice point at that level). A node record stores the row of each of its
//! eight corners, so a query costs one hash lookup per level and a corner
//! shared by neighbouring nodes owns a single feature vector.
//!
//! # Binary layout (version 1, little endian)
//!
//! ```text
//! magic       8 bytes  "PMGRID\0\0"
//! version     u32
//! levels      u32
//! leaf_size   f64
//! feature_dim u32
//! origin      3 x f64
//! per level:
//!   node_count   u64
//!   corner_count u64
//!   node_count   x { code u64, corners 8 x u32 }
//!   corner_count x { code u64, features feature_dim x f64 }
//! ```

use std::io::{Cursor, Read};
use std::sync::atomic::{AtomicU64, Ordering};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use super::morton::{encode_unchecked, MORTON_BITS};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::pointcloud::PointSample;

const MAGIC: &[u8; 8] = b"PMGRID\0\0";
const VERSION: u32 = 1;
const INIT_SCALE: f64 = 1e-4;
/// Largest usable cell index per axis; the `+1` corner must stay encodable.
const MAX_CELL: i64 = (1 << MORTON_BITS) - 2;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    code: u64,
    corners: [u32; 8],
}

#[derive(Debug, Clone, Default)]
struct LevelTable {
    node_index: FxHashMap<u64, u32>,
    nodes: Vec<Node>,
    corner_codes: Vec<u64>,
    features: Vec<f64>,
}

/// Located node at one level with trilinear weights of the query point.
///
/// Corner `c` has offset bits `(c & 1, c >> 1 & 1, c >> 2 & 1)` along x, y, z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelQuery {
    pub occupied: bool,
    pub corners: [u32; 8],
    pub weights: [f64; 8],
    /// `d weight / d x_axis`, indexed `[axis][corner]`.
    pub weight_grads: [[f64; 8]; 3],
}

impl LevelQuery {
    fn unoccupied() -> Self {
        Self {
            occupied: false,
            corners: [0; 8],
            weights: [0.125; 8],
            weight_grads: [[0.0; 8]; 3],
        }
    }
}

/// Owned copy of one level's corner features plus weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFeatures {
    pub occupied: bool,
    /// 8 rows of `feature_dim`, corner-major.
    pub features: Vec<f64>,
    pub weights: [f64; 8],
}

impl LevelFeatures {
    pub fn interpolate(&self, feature_dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; feature_dim];
        for (c, w) in self.weights.iter().enumerate() {
            for (o, f) in out.iter_mut().zip(&self.features[c * feature_dim..(c + 1) * feature_dim]) {
                *o += w * f;
            }
        }
        out
    }
}

#[derive(Debug)]
pub struct OctreeGrid {
    levels: usize,
    leaf_size: f64,
    feature_dim: usize,
    origin: Vec3,
    tables: Vec<LevelTable>,
    lookups: AtomicU64,
}

impl Clone for OctreeGrid {
    fn clone(&self) -> Self {
        Self {
            levels: self.levels,
            leaf_size: self.leaf_size,
            feature_dim: self.feature_dim,
            origin: self.origin,
            tables: self.tables.clone(),
            lookups: AtomicU64::new(0),
        }
    }
}

impl PartialEq for OctreeGrid {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels
            && self.leaf_size == other.leaf_size
            && self.feature_dim == other.feature_dim
            && self.origin == other.origin
            && self.tables.iter().zip(&other.tables).all(|(a, b)| {
                a.nodes == b.nodes && a.corner_codes == b.corner_codes && a.features == b.features
            })
    }
}

fn corner_offset(c: usize) -> [i64; 3] {
    [(c & 1) as i64, (c >> 1 & 1) as i64, (c >> 2 & 1) as i64]
}

fn encode_cell(cell: [i64; 3]) -> u64 {
    encode_unchecked([cell[0] as u64, cell[1] as u64, cell[2] as u64])
}

fn decode_cell(code: u64) -> [i64; 3] {
    let c = super::morton_decode(super::MortonKey { level: 0, code });
    [c[0] as i64, c[1] as i64, c[2] as i64]
}

impl OctreeGrid {
    /// Build the occupancy structure from points and initialise corner features.
    ///
    /// The quantisation origin is one leaf cell below the floor of the
    /// bounding box, so every input point has a non-negative leaf index.
    pub fn build(points: &[PointSample], levels: usize, leaf_size: f64, feature_dim: usize, seed: u64) -> Result<Self> {
        if levels == 0 || levels > MORTON_BITS as usize {
            return Err(Error::InvalidArgument(format!("levels must be in 1..=21, got {levels}")));
        }
        if !(leaf_size > 0.0) || !leaf_size.is_finite() {
            return Err(Error::InvalidArgument(format!("leaf size must be positive, got {leaf_size}")));
        }
        if feature_dim == 0 {
            return Err(Error::InvalidArgument("feature_dim must be >= 1".into()));
        }
        let origin = match Aabb::from_points(points.iter().map(|p| &p.position)) {
            Some(b) => b.min.map(|m| ((m / leaf_size).floor() - 1.0) * leaf_size),
            None => Vec3::zeros(),
        };

        let mut leaf_cells: Vec<[i64; 3]> = Vec::with_capacity(points.len());
        for p in points {
            let rel = (p.position - origin) / leaf_size;
            let cell = [rel.x.floor() as i64, rel.y.floor() as i64, rel.z.floor() as i64];
            if cell.iter().any(|&c| !(0..=MAX_CELL).contains(&c)) {
                return Err(Error::InvalidArgument(format!(
                    "point cloud extent exceeds 2^21 leaf cells at leaf size {leaf_size}"
                )));
            }
            leaf_cells.push(cell);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tables = Vec::with_capacity(levels);
        for level in 0..levels {
            let mut codes: Vec<u64> = leaf_cells
                .iter()
                .map(|c| encode_cell([c[0] >> level, c[1] >> level, c[2] >> level]))
                .collect();
            codes.sort_unstable();
            codes.dedup();

            let mut table = LevelTable::default();
            let mut corner_index: FxHashMap<u64, u32> = FxHashMap::default();
            for &code in &codes {
                let cell = decode_cell(code);
                let mut corners = [0u32; 8];
                for (c, slot) in corners.iter_mut().enumerate() {
                    let o = corner_offset(c);
                    let ccode = encode_cell([cell[0] + o[0], cell[1] + o[1], cell[2] + o[2]]);
                    *slot = *corner_index.entry(ccode).or_insert_with(|| {
                        table.corner_codes.push(ccode);
                        (table.corner_codes.len() - 1) as u32
                    });
                }
                table.node_index.insert(code, table.nodes.len() as u32);
                table.nodes.push(Node { code, corners });
            }
            table.features = (0..table.corner_codes.len() * feature_dim)
                .map(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE))
                .collect();
            tables.push(table);
        }

        Ok(Self {
            levels,
            leaf_size,
            feature_dim,
            origin,
            tables,
            lookups: AtomicU64::new(0),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn leaf_size(&self) -> f64 {
        self.leaf_size
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    /// Node edge length at `level` (level 0 is the finest).
    pub fn node_size(&self, level: usize) -> f64 {
        self.leaf_size * (1u64 << level) as f64
    }

    pub fn node_count(&self, level: usize) -> usize {
        self.tables[level].nodes.len()
    }

    pub fn corner_count(&self, level: usize) -> usize {
        self.tables[level].corner_codes.len()
    }

    /// Node cells at `level` in storage order.
    pub fn node_cells(&self, level: usize) -> Vec<[i64; 3]> {
        self.tables[level].nodes.iter().map(|n| decode_cell(n.code)).collect()
    }

    pub fn features(&self, level: usize) -> &[f64] {
        &self.tables[level].features
    }

    pub fn features_mut(&mut self, level: usize) -> &mut [f64] {
        &mut self.tables[level].features
    }

    /// Every level's features in level order.
    pub fn all_features_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.tables.iter_mut().flat_map(|t| t.features.iter_mut())
    }

    pub fn corner_feature(&self, level: usize, corner: u32) -> &[f64] {
        let h = self.feature_dim;
        &self.tables[level].features[corner as usize * h..(corner as usize + 1) * h]
    }

    /// Total node-table lookups performed by queries since construction or the last reset.
    pub fn lookup_count(&self) -> u64 {
        self.lookups.load(Ordering::Relaxed)
    }

    pub fn reset_lookup_count(&self) {
        self.lookups.store(0, Ordering::Relaxed);
    }

    /// Cell at `level` containing `x`, or `None` outside the encodable range.
    pub fn cell_of(&self, level: usize, x: &Vec3) -> Option<[i64; 3]> {
        let rel = (x - self.origin) / self.node_size(level);
        let cell = [rel.x.floor(), rel.y.floor(), rel.z.floor()];
        if cell.iter().all(|c| *c >= 0.0 && *c <= (MAX_CELL >> level) as f64) {
            Some([cell[0] as i64, cell[1] as i64, cell[2] as i64])
        } else {
            None
        }
    }

    /// Trilinear weights (and their x-gradients) of `x` relative to the node at `cell`.
    ///
    /// `x` need not lie inside the node; this is what lets two nodes sharing a
    /// face be compared on that face.
    pub fn weights_in_cell(&self, level: usize, cell: [i64; 3], x: &Vec3) -> ([f64; 8], [[f64; 8]; 3]) {
        let s = self.node_size(level);
        let u = [
            (x.x - self.origin.x) / s - cell[0] as f64,
            (x.y - self.origin.y) / s - cell[1] as f64,
            (x.z - self.origin.z) / s - cell[2] as f64,
        ];
        let mut w = [0.0; 8];
        let mut dw = [[0.0; 8]; 3];
        for c in 0..8 {
            let o = corner_offset(c);
            let f = |d: usize| if o[d] == 1 { u[d] } else { 1.0 - u[d] };
            let df = |d: usize| if o[d] == 1 { 1.0 / s } else { -1.0 / s };
            let (fx, fy, fz) = (f(0), f(1), f(2));
            w[c] = fx * fy * fz;
            dw[0][c] = df(0) * fy * fz;
            dw[1][c] = fx * df(1) * fz;
            dw[2][c] = fx * fy * df(2);
        }
        (w, dw)
    }

    /// Locate the node containing `x` at one level: exactly one hash lookup.
    pub fn locate(&self, level: usize, x: &Vec3) -> LevelQuery {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        let Some(cell) = self.cell_of(level, x) else {
            return LevelQuery::unoccupied();
        };
        let table = &self.tables[level];
        match table.node_index.get(&encode_cell(cell)) {
            Some(&n) => {
                let (weights, weight_grads) = self.weights_in_cell(level, cell, x);
                LevelQuery {
                    occupied: true,
                    corners: table.nodes[n as usize].corners,
                    weights,
                    weight_grads,
                }
            }
            None => LevelQuery::unoccupied(),
        }
    }

    /// Corner features and trilinear weights at every level.
    ///
    /// Unoccupied levels yield zero features with uniform weights and
    /// `occupied == false`.
    pub fn query_features(&self, x: &Vec3) -> Vec<LevelFeatures> {
        let h = self.feature_dim;
        (0..self.levels)
            .map(|level| {
                let q = self.locate(level, x);
                let mut features = vec![0.0; 8 * h];
                if q.occupied {
                    for (c, &row) in q.corners.iter().enumerate() {
                        features[c * h..(c + 1) * h].copy_from_slice(self.corner_feature(level, row));
                    }
                }
                LevelFeatures {
                    occupied: q.occupied,
                    features,
                    weights: q.weights,
                }
            })
            .collect()
    }

    /// Boxes of the occupied leaf cells grown by `dilation` cells on every side.
    pub fn occupied_leaf_bounds(&self, dilation: usize) -> Vec<Aabb> {
        let w = self.leaf_size;
        let d = dilation as f64;
        self.tables[0]
            .nodes
            .iter()
            .map(|n| {
                let c = decode_cell(n.code);
                let lo = Vec3::new(c[0] as f64 - d, c[1] as f64 - d, c[2] as f64 - d);
                let hi = Vec3::new(c[0] as f64 + 1.0 + d, c[1] as f64 + 1.0 + d, c[2] as f64 + 1.0 + d);
                Aabb::new(self.origin + lo * w, self.origin + hi * w)
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(VERSION).unwrap();
        out.write_u32::<LittleEndian>(self.levels as u32).unwrap();
        out.write_f64::<LittleEndian>(self.leaf_size).unwrap();
        out.write_u32::<LittleEndian>(self.feature_dim as u32).unwrap();
        for d in 0..3 {
            out.write_f64::<LittleEndian>(self.origin[d]).unwrap();
        }
        for t in &self.tables {
            out.write_u64::<LittleEndian>(t.nodes.len() as u64).unwrap();
            out.write_u64::<LittleEndian>(t.corner_codes.len() as u64).unwrap();
            for n in &t.nodes {
                out.write_u64::<LittleEndian>(n.code).unwrap();
                for c in n.corners {
                    out.write_u32::<LittleEndian>(c).unwrap();
                }
            }
            for (i, code) in t.corner_codes.iter().enumerate() {
                out.write_u64::<LittleEndian>(*code).unwrap();
                for f in &t.features[i * self.feature_dim..(i + 1) * self.feature_dim] {
                    out.write_f64::<LittleEndian>(*f).unwrap();
                }
            }
        }
        out
    }

    /// Decode a blob written by [`OctreeGrid::to_bytes`], validating every structural invariant.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = |_| Error::Format("grid blob truncated".into());
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a grid blob".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported grid version {version}")));
        }
        let levels = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let leaf_size = r.read_f64::<LittleEndian>().map_err(truncated)?;
        let feature_dim = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let mut origin = Vec3::zeros();
        for d in 0..3 {
            origin[d] = r.read_f64::<LittleEndian>().map_err(truncated)?;
        }
        if levels == 0 || levels > MORTON_BITS as usize || feature_dim == 0 || feature_dim > 1 << 16 {
            return Err(Error::Format("grid header out of range".into()));
        }
        if !(leaf_size > 0.0) || !leaf_size.is_finite() || !origin.iter().all(|o| o.is_finite()) {
            return Err(Error::Format("grid geometry is not finite and positive".into()));
        }

        let mut tables: Vec<LevelTable> = Vec::with_capacity(levels);
        for level in 0..levels {
            let remaining = |r: &Cursor<&[u8]>| bytes.len() as u64 - r.position();
            let n_nodes = r.read_u64::<LittleEndian>().map_err(truncated)?;
            let n_corners = r.read_u64::<LittleEndian>().map_err(truncated)?;
            let node_bytes = n_nodes.checked_mul(8 + 32);
            let corner_bytes = n_corners.checked_mul(8 + 8 * feature_dim as u64);
            match (node_bytes, corner_bytes) {
                (Some(a), Some(b)) if a.checked_add(b).is_some_and(|t| t <= remaining(&r)) => {}
                _ => return Err(Error::Format("grid level counts exceed blob size".into())),
            }
            if n_corners > u32::MAX as u64 {
                return Err(Error::Format("too many corners".into()));
            }
            let mut t = LevelTable::default();
            for _ in 0..n_nodes {
                let code = r.read_u64::<LittleEndian>().map_err(truncated)?;
                let mut corners = [0u32; 8];
                for c in &mut corners {
                    *c = r.read_u32::<LittleEndian>().map_err(truncated)?;
                    if *c as u64 >= n_corners {
                        return Err(Error::Format("corner index out of range".into()));
                    }
                }
                if code >= 1 << 63 || t.node_index.insert(code, t.nodes.len() as u32).is_some() {
                    return Err(Error::Format("invalid or duplicate node code".into()));
                }
                t.nodes.push(Node { code, corners });
            }
            t.features.reserve(n_corners as usize * feature_dim);
            for _ in 0..n_corners {
                t.corner_codes.push(r.read_u64::<LittleEndian>().map_err(truncated)?);
                for _ in 0..feature_dim {
                    t.features.push(r.read_f64::<LittleEndian>().map_err(truncated)?);
                }
            }
            // corner rows must be the lattice points of their node
            for n in &t.nodes {
                let cell = decode_cell(n.code);
                if cell.iter().any(|&c| c > MAX_CELL >> level) {
                    return Err(Error::Format("node cell out of range".into()));
                }
                for (c, &row) in n.corners.iter().enumerate() {
                    let o = corner_offset(c);
                    let want = encode_cell([cell[0] + o[0], cell[1] + o[1], cell[2] + o[2]]);
                    if t.corner_codes[row as usize] != want {
                        return Err(Error::Format("corner record does not match its node".into()));
                    }
                }
            }
            if level > 0 {
                let parents = &t.node_index;
                let orphan = tables[level - 1].nodes.iter().any(|n| {
                    let c = decode_cell(n.code);
                    !parents.contains_key(&encode_cell([c[0] >> 1, c[1] >> 1, c[2] >> 1]))
                });
                if orphan {
                    return Err(Error::Format("occupied node without an occupied parent".into()));
                }
            }
            tables.push(t);
        }
        if r.position() != bytes.len() as u64 {
            return Err(Error::Format("trailing bytes after grid blob".into()));
        }
        Ok(Self {
            levels,
            leaf_size,
            feature_dim,
            origin,
            tables,
            lookups: AtomicU64::new(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> PointSample {
        PointSample::new(Vec3::new(x, y, z), Vec3::new(0.0, 0.0, 10.0), 0, 0).unwrap()
    }

    #[test]
    fn single_point_occupies_one_node_per_level() {
        let g = OctreeGrid::build(&[pt(0.0, 0.0, 0.0)], 3, 0.1, 4, 0).unwrap();
        for l in 0..3 {
            assert_eq!(g.node_count(l), 1);
            assert_eq!(g.corner_count(l), 8);
            assert_eq!(g.features(l).len(), 8 * 4);
        }
        assert!(g.features(0).iter().all(|f| f.abs() <= 1e-4));
    }

    #[test]
    fn duplicate_cell_points_do_not_change_structure() {
        let a = OctreeGrid::build(&[pt(0.01, 0.01, 0.01)], 3, 0.1, 2, 1).unwrap();
        let b = OctreeGrid::build(&[pt(0.01, 0.01, 0.01), pt(0.02, 0.03, 0.04)], 3, 0.1, 2, 1).unwrap();
        for l in 0..3 {
            assert_eq!(a.node_cells(l), b.node_cells(l));
            assert_eq!(a.corner_count(l), b.corner_count(l));
        }
    }

    #[test]
    fn adjacent_leaves_share_four_corners() {
        let w = 0.1;
        let g = OctreeGrid::build(&[pt(0.02, 0.05, 0.05), pt(0.02 + 1.5 * w, 0.05, 0.05)], 3, w, 1, 0).unwrap();
        assert_eq!(g.node_count(0), 2);
        // enumerate corner lattice points of both cells by hand
        let cells = g.node_cells(0);
        let mut corners = std::collections::BTreeSet::new();
        for c in &cells {
            for o in 0..8 {
                let off = corner_offset(o);
                corners.insert([c[0] + off[0], c[1] + off[1], c[2] + off[2]]);
            }
        }
        assert_eq!(corners.len(), 12);
        assert_eq!(g.corner_count(0), 12);
    }

    #[test]
    fn ancestors_exist_for_every_node() {
        let pts: Vec<_> = (0..50).map(|i| pt(i as f64 * 0.07, (i % 7) as f64 * 0.11, 0.3)).collect();
        let g = OctreeGrid::build(&pts, 4, 0.05, 1, 0).unwrap();
        for l in 0..3 {
            let parents: std::collections::HashSet<_> = g.node_cells(l + 1).into_iter().collect();
            for c in g.node_cells(l) {
                assert!(parents.contains(&[c[0] >> 1, c[1] >> 1, c[2] >> 1]));
            }
        }
    }

    #[test]
    fn corner_and_center_weights() {
        let g = OctreeGrid::build(&[pt(0.05, 0.05, 0.05)], 1, 0.1, 1, 0).unwrap();
        let cell = g.cell_of(0, &Vec3::new(0.05, 0.05, 0.05)).unwrap();
        let lo = g.origin() + Vec3::new(cell[0] as f64, cell[1] as f64, cell[2] as f64) * 0.1;
        let q = g.locate(0, &lo);
        assert!(q.occupied);
        assert!((q.weights[0] - 1.0).abs() < 1e-12);
        assert!(q.weights[1..].iter().all(|w| w.abs() < 1e-12));
        let q = g.locate(0, &(lo + Vec3::new(0.05, 0.05, 0.05)));
        assert!(q.weights.iter().all(|w| (w - 0.125).abs() < 1e-12));
    }

    #[test]
    fn unoccupied_query_is_flagged() {
        let g = OctreeGrid::build(&[pt(0.0, 0.0, 0.0)], 2, 0.1, 3, 0).unwrap();
        let f = g.query_features(&Vec3::new(5.0, 5.0, 5.0));
        assert_eq!(f.len(), 2);
        for lf in f {
            assert!(!lf.occupied);
            assert!(lf.features.iter().all(|&v| v == 0.0));
            assert_eq!(lf.weights, [0.125; 8]);
        }
        // far below the origin
        assert!(!g.locate(0, &Vec3::new(-1e3, 0.0, 0.0)).occupied);
    }

    #[test]
    fn leaf_bounds_and_dilation() {
        let g = OctreeGrid::build(&[pt(0.23, 0.41, 0.05)], 2, 0.1, 1, 0).unwrap();
        let b0 = g.occupied_leaf_bounds(0);
        assert_eq!(b0.len(), 1);
        assert!((b0[0].extent() - Vec3::repeat(0.1)).norm() < 1e-12);
        assert!(b0[0].contains(&Vec3::new(0.23, 0.41, 0.05)));
        let b1 = g.occupied_leaf_bounds(1);
        assert!((b1[0].extent() - Vec3::repeat(0.3)).norm() < 1e-12);
        assert!((b1[0].center() - b0[0].center()).norm() < 1e-12);
    }

    #[test]
    fn blob_round_trip_and_rejection() {
        let pts: Vec<_> = (0..30).map(|i| pt(i as f64 * 0.13, 0.2, (i % 3) as f64 * 0.4)).collect();
        let g = OctreeGrid::build(&pts, 3, 0.1, 3, 9).unwrap();
        let bytes = g.to_bytes();
        let back = OctreeGrid::from_bytes(&bytes).unwrap();
        assert_eq!(g, back);
        assert!(OctreeGrid::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(OctreeGrid::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(OctreeGrid::from_bytes(&extra).is_err());
    }

    #[test]
    fn same_seed_same_grid() {
        let pts = [pt(0.3, 0.1, 0.2), pt(1.0, 0.5, 0.2)];
        let a = OctreeGrid::build(&pts, 3, 0.1, 4, 17).unwrap();
        let b = OctreeGrid::build(&pts, 3, 0.1, 4, 17).unwrap();
        assert_eq!(a, b);
        let c = OctreeGrid::build(&pts, 3, 0.1, 4, 18).unwrap();
        assert_ne!(a, c);
    }
}
