use ndarray::Array2;
use rayon::prelude::*;

use super::{Kernel, MultiScaleField};
use crate::autodiff::{Jet, JetBatch, Lanes, LinearGrad, NetTape, NodeId, ScalarField};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::octree::{LevelQuery, OctreeGrid};

const CHUNK: usize = 256;

/// Gradients with respect to every MLP layer and every corner feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrad {
    pub layers: Vec<LinearGrad>,
    /// Per level, laid out like [`OctreeGrid::features`].
    pub features: Vec<Vec<f64>>,
}

impl FieldGrad {
    pub fn zeros(field: &MultiScaleField, grid: &OctreeGrid) -> Self {
        Self {
            layers: field.layers().iter().map(LinearGrad::zeros_like).collect(),
            features: (0..grid.levels()).map(|l| vec![0.0; grid.features(l).len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, o: &FieldGrad) {
        for (a, b) in self.layers.iter_mut().zip(&o.layers) {
            a.add_assign(b);
        }
        for (a, b) in self.features.iter_mut().zip(&o.features) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for g in &mut self.layers {
            g.weight *= k;
            g.bias *= k;
        }
        self.features.iter_mut().flatten().for_each(|v| *v *= k);
    }

    /// Layer gradients in the order of [`MultiScaleField::parameters`].
    pub fn layer_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weight.iter());
            out.extend(g.bias.iter());
        }
        out
    }

    /// Fails naming the first block holding a non-finite entry.
    pub fn check_finite(&self) -> Result<()> {
        for (i, g) in self.layers.iter().enumerate() {
            if !g.weight.iter().chain(g.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("gradient of layer {i}"),
                });
            }
        }
        for (l, f) in self.features.iter().enumerate() {
            if !f.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("gradient of level {l} features"),
                });
            }
        }
        Ok(())
    }
}

/// A recorded forward pass over a batch of query points.
pub struct Forward<'a> {
    tape: NetTape<'a>,
    output: NodeId,
    sources: Vec<NodeId>,
    /// `[level][sample]`.
    queries: Vec<Vec<LevelQuery>>,
    feature_dim: usize,
}

impl<'a> Forward<'a> {
    /// `lanes · n × 1`: value, then gradient components, then Laplacian.
    pub fn output(&self) -> &JetBatch {
        self.tape.value(self.output)
    }

    pub fn len(&self) -> usize {
        self.tape.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        self.output().lane(0).column(0).to_vec()
    }

    pub fn jet(&self, i: usize) -> Jet {
        let out = self.output();
        let n = self.len();
        let at = |lane: usize| if lane < out.lanes.count() { out.data[[lane * n + i, 0]] } else { 0.0 };
        Jet {
            value: at(0),
            grad: [at(1), at(2), at(3)],
            lap: at(4),
        }
    }

    /// Propagate `seed` (shaped like [`Forward::output`]'s data) into `grads`.
    pub fn backward(&self, seed: Array2<f64>, grid: &OctreeGrid, grads: &mut FieldGrad) -> Result<()> {
        let adj = self.tape.backward(self.output, seed, Some(&mut grads.layers))?;
        let n = self.len();
        let h = self.feature_dim;
        let with_grad = self.tape.lanes().count() >= 4;
        for (level, &src) in self.sources.iter().enumerate() {
            let Some(a) = &adj[src] else { continue };
            let g = &mut grads.features[level];
            for (i, q) in self.queries[level].iter().enumerate() {
                if !q.occupied {
                    continue;
                }
                for c in 0..8 {
                    let base = q.corners[c] as usize * h;
                    let w = q.weights[c];
                    for k in 0..h {
                        let mut v = w * a[[i, k]];
                        if with_grad {
                            for d in 0..3 {
                                v += q.weight_grads[d][c] * a[[(d + 1) * n + i, k]];
                            }
                        }
                        g[base + k] += v;
                    }
                }
            }
        }
        debug_assert_eq!(grid.levels(), self.sources.len());
        grads.check_finite()
    }

    /// `∂f/∂x` per sample from a reverse sweep of a value-lane pass.
    fn input_gradients(&self, grid: &OctreeGrid) -> Result<Vec<Vec3>> {
        let n = self.len();
        let mut seed = Array2::zeros(self.output().data.raw_dim());
        seed.column_mut(0).fill(1.0);
        let adj = self.tape.backward(self.output, seed, None)?;
        let h = self.feature_dim;
        let mut out = vec![Vec3::zeros(); n];
        for (level, &src) in self.sources.iter().enumerate() {
            let Some(a) = &adj[src] else { continue };
            for (i, q) in self.queries[level].iter().enumerate() {
                if !q.occupied {
                    continue;
                }
                for c in 0..8 {
                    let f = grid.corner_feature(level, q.corners[c]);
                    let s: f64 = (0..h).map(|k| f[k] * a[[i, k]]).sum();
                    for d in 0..3 {
                        out[i][d] += q.weight_grads[d][c] * s;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl MultiScaleField {
    /// Record the network over `xs`, carrying the requested derivative lanes.
    ///
    /// Input derivatives treat the containing node as fixed: only the
    /// trilinear weights vary with `x`.
    pub fn forward<'a>(&'a self, grid: &OctreeGrid, xs: &[Vec3], lanes: Lanes) -> Result<Forward<'a>> {
        self.check_grid(grid)?;
        let n = xs.len();
        let h = self.config.feature_dim;
        let levels = self.config.levels;
        let mut tape = NetTape::new(self.layers(), lanes, n);
        let mut sources = Vec::with_capacity(levels);
        let mut queries = Vec::with_capacity(levels);
        for level in 0..levels {
            let qs: Vec<LevelQuery> = xs.iter().map(|x| grid.locate(level, x)).collect();
            let mut src = JetBatch::zeros(lanes, n, h);
            for (i, q) in qs.iter().enumerate() {
                if !q.occupied {
                    continue;
                }
                for c in 0..8 {
                    let f = grid.corner_feature(level, q.corners[c]);
                    let mut row = src.data.row_mut(i);
                    row.iter_mut().zip(f).for_each(|(o, v)| *o += q.weights[c] * v);
                    if lanes.count() >= 4 {
                        for d in 0..3 {
                            let wg = q.weight_grads[d][c];
                            let mut row = src.data.row_mut((d + 1) * n + i);
                            row.iter_mut().zip(f).for_each(|(o, v)| *o += wg * v);
                        }
                    }
                }
            }
            sources.push(tape.source(src));
            queries.push(qs);
        }

        let kernels = self.kernels();
        let mut down = Vec::with_capacity(levels);
        let mut v = self.apply(&mut tape, kernels[0], sources[0], n);
        down.push(v);
        for level in 1..levels {
            let k = self.apply(&mut tape, kernels[level], v, n);
            v = tape.add(k, sources[level]);
            down.push(v);
        }
        let mut up = self.apply(&mut tape, kernels[2 * levels - 1], down[levels - 1], n);
        for level in (0..levels - 1).rev() {
            let k = self.apply(&mut tape, kernels[levels + level], up, n);
            up = tape.add(k, down[level]);
        }
        let output = self.mlp(&mut tape, self.head_first_layer(), up);
        Ok(Forward {
            tape,
            output,
            sources,
            queries,
            feature_dim: h,
        })
    }

    fn apply(&self, tape: &mut NetTape<'_>, kernel: Kernel, input: NodeId, n: usize) -> NodeId {
        match kernel {
            Kernel::Identity => input,
            Kernel::Mlp { first } => {
                self.count_kernel_evals(n as u64);
                self.mlp(tape, first, input)
            }
        }
    }

    fn mlp(&self, tape: &mut NetTape<'_>, first: usize, input: NodeId) -> NodeId {
        let count = self.mlp_len();
        let mut h = input;
        for i in 0..count {
            h = tape.linear(h, first + i);
            if i + 1 < count {
                h = tape.softplus(h, self.config.beta);
            }
        }
        h
    }

    pub fn eval_sdf(&self, grid: &OctreeGrid, x: &Vec3) -> Result<f64> {
        Ok(self.forward(grid, std::slice::from_ref(x), Lanes::Value)?.values()[0])
    }

    /// Elementwise [`MultiScaleField::eval_sdf`], chunked across threads.
    pub fn eval_batch(&self, grid: &OctreeGrid, xs: &[Vec3]) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        let parts: Result<Vec<Vec<f64>>> = xs
            .par_chunks(CHUNK)
            .map(|c| self.forward(grid, c, Lanes::Value).map(|f| f.values()))
            .collect();
        Ok(parts?.concat())
    }

    /// Value, gradient and Laplacian at each point.
    pub fn eval_jets(&self, grid: &OctreeGrid, xs: &[Vec3]) -> Result<Vec<Jet>> {
        self.check_grid(grid)?;
        let parts: Result<Vec<Vec<Jet>>> = xs
            .par_chunks(CHUNK)
            .map(|c| {
                let f = self.forward(grid, c, Lanes::Laplacian)?;
                Ok((0..c.len()).map(|i| f.jet(i)).collect())
            })
            .collect();
        Ok(parts?.concat())
    }

    pub fn view<'a>(&'a self, grid: &'a OctreeGrid) -> Result<FieldView<'a>> {
        self.check_grid(grid)?;
        Ok(FieldView { field: self, grid })
    }
}

/// A field paired with its grid, usable wherever a [`ScalarField`] is expected.
#[derive(Clone, Copy)]
pub struct FieldView<'a> {
    pub field: &'a MultiScaleField,
    pub grid: &'a OctreeGrid,
}

impl ScalarField for FieldView<'_> {
    fn value(&self, x: &Vec3) -> Result<f64> {
        self.field.eval_sdf(self.grid, x)
    }

    fn gradient(&self, x: &Vec3) -> Result<Vec3> {
        let f = self.field.forward(self.grid, std::slice::from_ref(x), Lanes::Value)?;
        Ok(f.input_gradients(self.grid)?[0])
    }

    fn jet(&self, x: &Vec3) -> Result<Jet> {
        Ok(self.field.forward(self.grid, std::slice::from_ref(x), Lanes::Laplacian)?.jet(0))
    }

    fn laplacians(&self, xs: &[Vec3]) -> Result<Vec<f64>> {
        Ok(self.field.eval_jets(self.grid, xs)?.into_iter().map(|j| j.lap).collect())
    }
}
