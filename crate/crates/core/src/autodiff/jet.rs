use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::{softplus_derivs, Scalar};

/// Second-order forward-mode number over a 3D input.
///
/// Carries `f`, `∇f` and `Δf = Σᵢ ∂²f/∂xᵢ²`. Mixed partials are not needed
/// for the Laplacian and are not tracked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub lap: f64,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; 3],
            lap: 0.0,
        }
    }

    /// The input coordinate `xᵢ` seeded with a unit derivative.
    pub fn variable(value: f64, axis: usize) -> Self {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Self {
            value,
            grad,
            lap: 0.0,
        }
    }

    pub fn inputs(x: [f64; 3]) -> [Jet; 3] {
        [Jet::variable(x[0], 0), Jet::variable(x[1], 1), Jet::variable(x[2], 2)]
    }

    fn grad_norm2(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum()
    }

    /// Compose with a scalar function given its first two derivatives at `self.value`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self {
            value: f,
            grad: self.grad.map(|g| df * g),
            lap: d2f * self.grad_norm2() + df * self.lap,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1], self.grad[2] + o.grad[2]],
            lap: self.lap + o.lap,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            value: -self.value,
            grad: self.grad.map(|g| -g),
            lap: -self.lap,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let cross: f64 = (0..3).map(|i| self.grad[i] * o.grad[i]).sum();
        Jet {
            value: self.value * o.value,
            grad: [0, 1, 2].map(|i| self.value * o.grad[i] + o.value * self.grad[i]),
            lap: self.lap * o.value + o.lap * self.value + 2.0 * cross,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = 1.0 / o.value;
        self * o.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Scalar for Jet {
    fn constant(&self, v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn powi(self, n: i32) -> Self {
        let v = self.value;
        let nf = n as f64;
        let d1 = if n == 0 { 0.0 } else { nf * v.powi(n - 1) };
        let d2 = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * v.powi(n - 2) };
        self.chain(v.powi(n), d1, d2)
    }
    fn softplus(self, beta: f64) -> Self {
        let (v, d1, d2, _) = softplus_derivs(self.value, beta);
        self.chain(v, d1, d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_norm_has_laplacian_six() {
        let [x, y, z] = Jet::inputs([1.0, 2.0, 3.0]);
        let f = x * x + y * y + z * z;
        assert_eq!(f.value, 14.0);
        assert_eq!(f.grad, [2.0, 4.0, 6.0]);
        assert_eq!(f.lap, 6.0);
    }

    #[test]
    fn cube_and_quotient() {
        let [x, _, _] = Jet::inputs([2.0, 0.0, 0.0]);
        let f = x.powi(3);
        assert_eq!((f.value, f.grad[0], f.lap), (8.0, 12.0, 12.0));
        // d²/dx² (1/x) = 2/x³
        let one = Jet::constant(1.0);
        let g = one / x;
        assert!((g.lap - 0.25).abs() < 1e-15);
    }
}
