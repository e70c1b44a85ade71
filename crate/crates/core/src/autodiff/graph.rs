//! Batched tape over jet-valued activations.
//!
//! Every activation is a [`JetBatch`]: for each sample the value, optionally
//! the three input-gradient components, and optionally the Laplacian, stored
//! lane-major so a dense layer is one matrix product over all lanes. The
//! reverse sweep accumulates parameter gradients of any scalar built from
//! those lanes and returns adjoints for the externally supplied sources.

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::scalar::softplus_derivs;
use crate::error::{Error, Result};

/// Which derivative lanes a batch carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lanes {
    /// Value only.
    Value,
    /// Value and the three input-gradient components.
    Gradient,
    /// Value, gradient and Laplacian.
    Laplacian,
}

impl Lanes {
    pub fn count(self) -> usize {
        match self {
            Lanes::Value => 1,
            Lanes::Gradient => 4,
            Lanes::Laplacian => 5,
        }
    }
}

/// Lane-major batch: row `lane * batch + sample`, one column per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct JetBatch {
    pub lanes: Lanes,
    pub batch: usize,
    pub data: Array2<f64>,
}

impl JetBatch {
    pub fn zeros(lanes: Lanes, batch: usize, dim: usize) -> Self {
        Self {
            lanes,
            batch,
            data: Array2::zeros((lanes.count() * batch, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Lane 0 is the value, 1..=3 the gradient, 4 the Laplacian.
    pub fn lane(&self, lane: usize) -> ndarray::ArrayView2<'_, f64> {
        self.data.slice(s![lane * self.batch..(lane + 1) * self.batch, ..])
    }

    pub fn lane_mut(&mut self, lane: usize) -> ndarray::ArrayViewMut2<'_, f64> {
        let b = self.batch;
        self.data.slice_mut(s![lane * b..(lane + 1) * b, ..])
    }
}

/// Dense layer `y = x W + b`, `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearGrad {
    pub fn zeros_like(l: &Linear) -> Self {
        Self {
            weight: Array2::zeros(l.weight.raw_dim()),
            bias: Array1::zeros(l.bias.raw_dim()),
        }
    }

    pub fn add_assign(&mut self, o: &LinearGrad) {
        self.weight += &o.weight;
        self.bias += &o.bias;
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, Copy)]
enum Op {
    Source,
    Linear { input: NodeId, layer: usize },
    Softplus { input: NodeId, beta: f64 },
    Add { a: NodeId, b: NodeId },
}

/// Records the forward pass of a network over `layers`.
pub struct NetTape<'a> {
    layers: &'a [Linear],
    lanes: Lanes,
    batch: usize,
    ops: Vec<Op>,
    values: Vec<JetBatch>,
}

impl<'a> NetTape<'a> {
    pub fn new(layers: &'a [Linear], lanes: Lanes, batch: usize) -> Self {
        Self {
            layers,
            lanes,
            batch,
            ops: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn lanes(&self) -> Lanes {
        self.lanes
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    fn push(&mut self, op: Op, value: JetBatch) -> NodeId {
        self.ops.push(op);
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &JetBatch {
        &self.values[id]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn source(&mut self, value: JetBatch) -> NodeId {
        assert_eq!((value.lanes, value.batch), (self.lanes, self.batch), "source shape");
        self.push(Op::Source, value)
    }

    pub fn linear(&mut self, input: NodeId, layer: usize) -> NodeId {
        let value = linear_forward(&self.values[input], &self.layers[layer]);
        self.push(Op::Linear { input, layer }, value)
    }

    pub fn softplus(&mut self, input: NodeId, beta: f64) -> NodeId {
        let value = softplus_forward(&self.values[input], beta);
        self.push(Op::Softplus { input, beta }, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut value = self.values[a].clone();
        value.data += &self.values[b].data;
        self.push(Op::Add { a, b }, value)
    }

    /// Recompute every node from the recorded sources; equals the recorded values bit for bit.
    pub fn replay(&self) -> Vec<JetBatch> {
        let mut vals: Vec<JetBatch> = Vec::with_capacity(self.values.len());
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Source => self.values[i].clone(),
                Op::Linear { input, layer } => linear_forward(&vals[input], &self.layers[layer]),
                Op::Softplus { input, beta } => softplus_forward(&vals[input], beta),
                Op::Add { a, b } => {
                    let mut v = vals[a].clone();
                    v.data += &vals[b].data;
                    v
                }
            };
            vals.push(v);
        }
        vals
    }

    /// Reverse sweep from `output` seeded with `seed`.
    ///
    /// Layer gradients are accumulated into `grads` (indexed like the layer
    /// slice) when given. Returns the adjoint of every source node, `None` where no
    /// gradient reached it.
    pub fn backward(&self, output: NodeId, seed: Array2<f64>, mut grads: Option<&mut [LinearGrad]>) -> Result<Vec<Option<Array2<f64>>>> {
        assert_eq!(seed.dim(), self.values[output].data.dim(), "seed shape");
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; self.ops.len()];
        adj[output] = Some(seed);
        let mut sources = vec![None; self.ops.len()];

        let accumulate = |adj: &mut Vec<Option<Array2<f64>>>, id: NodeId, g: Array2<f64>| match &mut adj[id] {
            Some(a) => *a += &g,
            slot @ None => *slot = Some(g),
        };

        for i in (0..=output).rev() {
            let Some(g) = adj[i].take() else { continue };
            match self.ops[i] {
                Op::Source => sources[i] = Some(g),
                Op::Linear { input, layer } => {
                    let x = &self.values[input].data;
                    let w = &self.layers[layer];
                    if let Some(grads) = grads.as_deref_mut() {
                        let dg = &mut grads[layer];
                        dg.weight += &x.t().dot(&g);
                        dg.bias += &g.slice(s![0..self.batch, ..]).sum_axis(Axis(0));
                    }
                    accumulate(&mut adj, input, g.dot(&w.weight.t()));
                }
                Op::Softplus { input, beta } => {
                    let dz = softplus_backward(&self.values[input], &g, beta);
                    accumulate(&mut adj, input, dz);
                }
                Op::Add { a, b } => {
                    accumulate(&mut adj, b, g.clone());
                    accumulate(&mut adj, a, g);
                }
            }
        }
        for (i, g) in grads.iter().flat_map(|g| g.iter()).enumerate() {
            if !g.weight.iter().chain(g.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("gradient of layer {i}"),
                });
            }
        }
        Ok(sources)
    }
}

fn linear_forward(x: &JetBatch, layer: &Linear) -> JetBatch {
    let mut data = x.data.dot(&layer.weight);
    // bias acts on the value lane only; derivative lanes are linear
    data.slice_mut(s![0..x.batch, ..]).outer_iter_mut().for_each(|mut row| row += &layer.bias);
    JetBatch {
        lanes: x.lanes,
        batch: x.batch,
        data,
    }
}

fn softplus_forward(z: &JetBatch, beta: f64) -> JetBatch {
    let (b, dim) = (z.batch, z.dim());
    let lanes = z.lanes.count();
    let zin = z.data.as_slice().expect("standard layout");
    let mut out = vec![0.0; zin.len()];
    for i in 0..b {
        for j in 0..dim {
            let at = |lane: usize| (lane * b + i) * dim + j;
            let (v, d1, d2, _) = softplus_derivs(zin[at(0)], beta);
            out[at(0)] = v;
            if lanes >= 4 {
                let mut sq = 0.0;
                for k in 1..4 {
                    let zk = zin[at(k)];
                    out[at(k)] = d1 * zk;
                    sq += zk * zk;
                }
                if lanes == 5 {
                    out[at(4)] = d2 * sq + d1 * zin[at(4)];
                }
            }
        }
    }
    JetBatch {
        lanes: z.lanes,
        batch: b,
        data: Array2::from_shape_vec(z.data.raw_dim(), out).expect("shape"),
    }
}

fn softplus_backward(z: &JetBatch, g: &Array2<f64>, beta: f64) -> Array2<f64> {
    let (b, dim) = (z.batch, z.dim());
    let lanes = z.lanes.count();
    let zin = z.data.as_slice().expect("standard layout");
    let gin = g.as_standard_layout();
    let gin = gin.as_slice().expect("standard layout");
    let mut out = vec![0.0; zin.len()];
    for i in 0..b {
        for j in 0..dim {
            let at = |lane: usize| (lane * b + i) * dim + j;
            let (_, d1, d2, d3) = softplus_derivs(zin[at(0)], beta);
            let mut dz0 = gin[at(0)] * d1;
            if lanes >= 4 {
                let gl = if lanes == 5 { gin[at(4)] } else { 0.0 };
                let mut sq = 0.0;
                for k in 1..4 {
                    let zk = zin[at(k)];
                    let gk = gin[at(k)];
                    dz0 += gk * d2 * zk;
                    out[at(k)] = gk * d1 + gl * 2.0 * d2 * zk;
                    sq += zk * zk;
                }
                if lanes == 5 {
                    dz0 += gl * (d3 * sq + d2 * zin[at(4)]);
                    out[at(4)] = gl * d1;
                }
            }
            out[at(0)] = dz0;
        }
    }
    Array2::from_shape_vec(z.data.raw_dim(), out).expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::jet::Jet;
    use crate::autodiff::scalar::Scalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_linear(rng: &mut ChaCha8Rng, i: usize, o: usize) -> Linear {
        Linear {
            weight: Array2::from_shape_fn((i, o), |_| rng.gen_range(-1.0..1.0)),
            bias: Array1::from_shape_fn(o, |_| rng.gen_range(-0.5..0.5)),
        }
    }

    /// Input lanes for the map x ↦ A x (3 → n), whose Laplacian lane is zero.
    fn affine_source(a: &Array2<f64>, xs: &[[f64; 3]], lanes: Lanes) -> JetBatch {
        let n = a.nrows();
        let mut jb = JetBatch::zeros(lanes, xs.len(), n);
        for (s, x) in xs.iter().enumerate() {
            for r in 0..n {
                jb.data[[s, r]] = (0..3).map(|d| a[[r, d]] * x[d]).sum();
                if lanes.count() >= 4 {
                    for d in 0..3 {
                        jb.data[[(d + 1) * xs.len() + s, r]] = a[[r, d]];
                    }
                }
            }
        }
        jb
    }

    /// Same network over scalar jets, the reference for the batched lanes.
    fn scalar_net(layers: &[Linear], a: &Array2<f64>, x: [f64; 3], beta: f64) -> Jet {
        let xi = Jet::inputs(x);
        let mut h: Vec<Jet> = (0..a.nrows())
            .map(|r| (0..3).fold(Jet::constant(0.0), |acc, d| acc + xi[d].scale(a[[r, d]])))
            .collect();
        for (li, l) in layers.iter().enumerate() {
            h = (0..l.outputs())
                .map(|o| {
                    let z = (0..l.inputs()).fold(Jet::constant(l.bias[o]), |acc, i| acc + h[i].scale(l.weight[[i, o]]));
                    if li + 1 < layers.len() {
                        z.softplus(beta)
                    } else {
                        z
                    }
                })
                .collect();
        }
        h[0]
    }

    fn build<'a>(tape: &mut NetTape<'a>, src: JetBatch, n_layers: usize, beta: f64) -> NodeId {
        let mut h = tape.source(src);
        for l in 0..n_layers {
            h = tape.linear(h, l);
            if l + 1 < n_layers {
                h = tape.softplus(h, beta);
            }
        }
        h
    }

    #[test]
    fn lanes_match_scalar_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Array2::from_shape_fn((4, 3), |_| rng.gen_range(-1.0..1.0));
        let layers = vec![random_linear(&mut rng, 4, 6), random_linear(&mut rng, 6, 5), random_linear(&mut rng, 5, 1)];
        let xs: Vec<[f64; 3]> = (0..7).map(|_| [0; 3].map(|_: i32| rng.gen_range(-0.1..0.1))).collect();
        let beta = 10.0;
        let mut tape = NetTape::new(&layers, Lanes::Laplacian, xs.len());
        let out = build(&mut tape, affine_source(&a, &xs, Lanes::Laplacian), layers.len(), beta);
        let v = tape.value(out);
        for (s, x) in xs.iter().enumerate() {
            let j = scalar_net(&layers, &a, *x, beta);
            assert!((v.data[[s, 0]] - j.value).abs() < 1e-12);
            for d in 0..3 {
                assert!((v.data[[(d + 1) * xs.len() + s, 0]] - j.grad[d]).abs() < 1e-12);
            }
            assert!((v.data[[4 * xs.len() + s, 0]] - j.lap).abs() < 1e-10);
        }
        let replay = tape.replay();
        assert_eq!(replay.last().unwrap(), v);
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-1.0..1.0));
        let layers = vec![random_linear(&mut rng, 3, 5), random_linear(&mut rng, 5, 4), random_linear(&mut rng, 4, 1)];
        let xs: Vec<[f64; 3]> = (0..4).map(|_| [0; 3].map(|_: i32| rng.gen_range(-0.5..0.5))).collect();
        let beta = 3.0;
        // loss = Σ value + 0.3 Σ |grad|² + 0.7 Σ lap
        let loss = |layers: &[Linear]| -> f64 {
            xs.iter()
                .map(|x| {
                    let j = scalar_net(layers, &a, *x, beta);
                    j.value + 0.3 * j.grad.iter().map(|g| g * g).sum::<f64>() + 0.7 * j.lap
                })
                .sum()
        };
        let n = xs.len();
        let mut tape = NetTape::new(&layers, Lanes::Laplacian, n);
        let out = build(&mut tape, affine_source(&a, &xs, Lanes::Laplacian), layers.len(), beta);
        let v = tape.value(out).data.clone();
        let mut seed = Array2::zeros(v.raw_dim());
        for s in 0..n {
            seed[[s, 0]] = 1.0;
            for d in 1..4 {
                seed[[d * n + s, 0]] = 0.6 * v[[d * n + s, 0]];
            }
            seed[[4 * n + s, 0]] = 0.7;
        }
        let mut grads: Vec<LinearGrad> = layers.iter().map(LinearGrad::zeros_like).collect();
        tape.backward(out, seed, Some(&mut grads)).unwrap();

        let h = 1e-6;
        for (l, layer) in layers.iter().enumerate() {
            for idx in 0..layer.weight.len() {
                let (r, c) = (idx / layer.outputs(), idx % layer.outputs());
                let mut plus = layers.clone();
                plus[l].weight[[r, c]] += h;
                let mut minus = layers.clone();
                minus[l].weight[[r, c]] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let ad = grads[l].weight[[r, c]];
                assert!((fd - ad).abs() < 1e-6 * (1.0 + fd.abs()), "layer {l} w[{r},{c}]: {ad} vs {fd}");
            }
            for o in 0..layer.outputs() {
                let mut plus = layers.clone();
                plus[l].bias[o] += h;
                let mut minus = layers.clone();
                minus[l].bias[o] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!((fd - grads[l].bias[o]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
