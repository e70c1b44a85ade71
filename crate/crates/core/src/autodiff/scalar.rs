use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number type a field can be written over once and evaluated as plain
/// values, jets or tape variables.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn softplus(self, beta: f64) -> Self;

    fn scale(self, k: f64) -> Self {
        self * self.constant(k)
    }
}

/// `(softplus, d/dz, d²/dz², d³/dz³)` of `ln(1 + exp(βz)) / β`, evaluated stably.
#[inline]
pub fn softplus_derivs(z: f64, beta: f64) -> (f64, f64, f64, f64) {
    let bz = beta * z;
    let value = (bz.max(0.0) + (-bz.abs()).exp().ln_1p()) / beta;
    let s = if bz >= 0.0 {
        1.0 / (1.0 + (-bz).exp())
    } else {
        let e = bz.exp();
        e / (1.0 + e)
    };
    let ds = s * (1.0 - s);
    (value, s, beta * ds, beta * beta * ds * (1.0 - 2.0 * s))
}

impl Scalar for f64 {
    fn constant(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn softplus(self, beta: f64) -> Self {
        softplus_derivs(self, beta).0
    }
}
