use crate::geom::Vec3;

/// Finite-difference stencil: `Σ coefficientₖ · f(x + offsetₖ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub offsets: Vec<Vec3>,
    pub coefficients: Vec<f64>,
    pub step: f64,
}

impl Stencil {
    /// Second-order 7-point Laplacian: `[Σ±eᵢ f(x ± h eᵢ) − 6 f(x)] / h²`.
    pub fn laplacian_7pt(step: f64) -> Self {
        let inv = 1.0 / (step * step);
        let mut offsets = vec![Vec3::zeros()];
        let mut coefficients = vec![-6.0 * inv];
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut o = Vec3::zeros();
                o[axis] = sign * step;
                offsets.push(o);
                coefficients.push(inv);
            }
        }
        Self {
            offsets,
            coefficients,
            step,
        }
    }

    /// Central difference for `∂f/∂x_axis`.
    pub fn central_derivative(axis: usize, step: f64) -> Self {
        let mut e = Vec3::zeros();
        e[axis] = step;
        Self {
            offsets: vec![e, -e],
            coefficients: vec![0.5 / step, -0.5 / step],
            step,
        }
    }

    /// Points at which the stencil samples around `x`.
    pub fn points(&self, x: &Vec3) -> Vec<Vec3> {
        self.offsets.iter().map(|o| x + o).collect()
    }

    /// Combine samples taken at [`Stencil::points`], in the same order.
    pub fn combine(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.coefficients.len());
        self.coefficients.iter().zip(samples).map(|(c, s)| c * s).sum()
    }

    pub fn apply<E>(&self, x: &Vec3, mut f: impl FnMut(&Vec3) -> Result<f64, E>) -> Result<f64, E> {
        let mut acc = 0.0;
        for (o, c) in self.offsets.iter().zip(&self.coefficients) {
            acc += c * f(&(x + o))?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_coefficients_sum_to_zero() {
        for h in [1e-3, 0.1, 2.0] {
            let s = Stencil::laplacian_7pt(h);
            assert_eq!(s.offsets.len(), 7);
            let sum: f64 = s.coefficients.iter().sum();
            assert!(sum.abs() < 1e-9 / (h * h));
        }
    }

    #[test]
    fn exact_on_quadratics() {
        let s = Stencil::laplacian_7pt(0.25);
        let f = |p: &Vec3| -> Result<f64, ()> { Ok(3.0 * p.x * p.x - p.y * p.y + 0.5 * p.z * p.z + p.x * p.y) };
        let lap = s.apply(&Vec3::new(0.3, -0.2, 1.1), f).unwrap();
        assert!((lap - 5.0).abs() < 1e-12);
    }
}
