//! Scalar reverse-mode tape.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{softplus_derivs, Scalar};
use crate::error::{Error, Result};

/// Operation recorded for a tape node; enough to replay the forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TapeOp {
    Input,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Powi(i32),
    Softplus(f64),
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: TapeOp,
    args: [usize; 2],
    partials: [f64; 2],
    value: f64,
}

/// Records scalar operations in evaluation (topological) order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value on a [`Tape`].
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    value: f64,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, op: TapeOp, args: [usize; 2], partials: [f64; 2], value: f64) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            op,
            args,
            partials,
            value,
        });
        nodes.len() - 1
    }

    pub fn input(&self, value: f64) -> Var<'_> {
        let index = self.push(TapeOp::Input, [0; 2], [0.0; 2], value);
        Var {
            tape: self,
            index,
            value,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adjoint of `output` with respect to every node, indexed by node.
    ///
    /// Fails on the first non-finite value or local partial, naming the node.
    pub fn gradient(&self, output: Var<'_>) -> Result<Vec<f64>> {
        let nodes = self.nodes.borrow();
        for (i, n) in nodes.iter().enumerate().take(output.index + 1) {
            if !n.value.is_finite() || !n.partials.iter().all(|p| p.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("tape node {i} ({:?})", n.op),
                });
            }
        }
        let mut adj = vec![0.0; nodes.len()];
        adj[output.index] = 1.0;
        for i in (0..=output.index).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let n = nodes[i];
            match n.op {
                TapeOp::Input | TapeOp::Const => {}
                TapeOp::Add | TapeOp::Sub | TapeOp::Mul | TapeOp::Div => {
                    adj[n.args[0]] += a * n.partials[0];
                    adj[n.args[1]] += a * n.partials[1];
                }
                _ => adj[n.args[0]] += a * n.partials[0],
            }
        }
        Ok(adj)
    }

    /// Re-run the recorded operations from new input values, returning every node value.
    ///
    /// Inputs are consumed in the order they were created. Replaying with the
    /// original inputs reproduces the recorded values bit for bit.
    pub fn replay(&self, inputs: &[f64]) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut vals: Vec<f64> = Vec::with_capacity(nodes.len());
        let mut next_input = inputs.iter();
        for n in nodes.iter() {
            let a = |k: usize| vals[n.args[k]];
            let v = match n.op {
                TapeOp::Input => *next_input.next().expect("replay needs one value per input"),
                TapeOp::Const => n.value,
                TapeOp::Add => a(0) + a(1),
                TapeOp::Sub => a(0) - a(1),
                TapeOp::Mul => a(0) * a(1),
                TapeOp::Div => a(0) / a(1),
                TapeOp::Neg => -a(0),
                TapeOp::Exp => a(0).exp(),
                TapeOp::Ln => a(0).ln(),
                TapeOp::Sqrt => a(0).sqrt(),
                TapeOp::Sin => a(0).sin(),
                TapeOp::Cos => a(0).cos(),
                TapeOp::Powi(k) => a(0).powi(k),
                TapeOp::Softplus(beta) => softplus_derivs(a(0), beta).0,
            };
            vals.push(v);
        }
        vals
    }

    /// Values currently recorded on the tape.
    pub fn values(&self) -> Vec<f64> {
        self.nodes.borrow().iter().map(|n| n.value).collect()
    }
}

impl<'t> Var<'t> {
    pub fn index(&self) -> usize {
        self.index
    }

    fn unary(self, op: TapeOp, value: f64, partial: f64) -> Self {
        let index = self.tape.push(op, [self.index, 0], [partial, 0.0], value);
        Var {
            tape: self.tape,
            index,
            value,
        }
    }

    fn binary(self, o: Self, op: TapeOp, value: f64, partials: [f64; 2]) -> Self {
        debug_assert!(std::ptr::eq(self.tape, o.tape), "variables from different tapes");
        let index = self.tape.push(op, [self.index, o.index], partials, value);
        Var {
            tape: self.tape,
            index,
            value,
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, TapeOp::Add, self.value + o.value, [1.0, 1.0])
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, TapeOp::Sub, self.value - o.value, [1.0, -1.0])
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, TapeOp::Mul, self.value * o.value, [o.value, self.value])
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        self.binary(o, TapeOp::Div, self.value / o.value, [inv, -self.value * inv * inv])
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(TapeOp::Neg, -self.value, -1.0)
    }
}

impl<'t> Scalar for Var<'t> {
    fn constant(&self, v: f64) -> Self {
        let index = self.tape.push(TapeOp::Const, [0; 2], [0.0; 2], v);
        Var {
            tape: self.tape,
            index,
            value: v,
        }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(TapeOp::Exp, e, e)
    }
    fn ln(self) -> Self {
        self.unary(TapeOp::Ln, self.value.ln(), 1.0 / self.value)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.unary(TapeOp::Sqrt, s, 0.5 / s)
    }
    fn sin(self) -> Self {
        self.unary(TapeOp::Sin, self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.unary(TapeOp::Cos, self.value.cos(), -self.value.sin())
    }
    fn powi(self, n: i32) -> Self {
        let d = if n == 0 { 0.0 } else { n as f64 * self.value.powi(n - 1) };
        self.unary(TapeOp::Powi(n), self.value.powi(n), d)
    }
    fn softplus(self, beta: f64) -> Self {
        let (v, d, _, _) = softplus_derivs(self.value, beta);
        self.unary(TapeOp::Softplus(beta), v, d)
    }
}
