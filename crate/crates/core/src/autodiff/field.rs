use super::jet::Jet;
use super::scalar::Scalar;
use super::stencil::Stencil;
use super::tape::Tape;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// A differentiable scalar field over 3D space.
pub trait ScalarField {
    fn value(&self, x: &Vec3) -> Result<f64>;

    /// `∇f(x)` from a single reverse sweep.
    fn gradient(&self, x: &Vec3) -> Result<Vec3>;

    /// Value, input gradient and Laplacian by second-order forward propagation.
    fn jet(&self, x: &Vec3) -> Result<Jet>;

    /// Laplacians at several points; implementors may batch the evaluation.
    fn laplacians(&self, xs: &[Vec3]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.jet(x).map(|j| j.lap)).collect()
    }
}

/// A closed-form field written once over any [`Scalar`].
pub trait AnalyticField {
    fn eval<S: Scalar>(&self, x: [S; 3]) -> S;
}

/// Adapts an [`AnalyticField`] to [`ScalarField`].
#[derive(Debug, Clone, Copy)]
pub struct Analytic<F>(pub F);

impl<F: AnalyticField> ScalarField for Analytic<F> {
    fn value(&self, x: &Vec3) -> Result<f64> {
        Ok(self.0.eval([x.x, x.y, x.z]))
    }

    fn gradient(&self, x: &Vec3) -> Result<Vec3> {
        let tape = Tape::new();
        let vars = [tape.input(x.x), tape.input(x.y), tape.input(x.z)];
        let out = self.0.eval(vars);
        let adj = tape.gradient(out)?;
        Ok(Vec3::new(adj[vars[0].index()], adj[vars[1].index()], adj[vars[2].index()]))
    }

    fn jet(&self, x: &Vec3) -> Result<Jet> {
        Ok(self.0.eval(Jet::inputs([x.x, x.y, x.z])))
    }
}

fn check_finite(v: f64, what: &str, x: &Vec3) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            context: format!("{what} at ({}, {}, {})", x.x, x.y, x.z),
        })
    }
}

pub fn grad_input<F: ScalarField + ?Sized>(f: &F, x: &Vec3) -> Result<Vec3> {
    let g = f.gradient(x)?;
    for d in 0..3 {
        check_finite(g[d], "input gradient", x)?;
    }
    Ok(g)
}

/// `Σᵢ ∂²f/∂xᵢ²` at `x`.
pub fn laplacian_input<F: ScalarField + ?Sized>(f: &F, x: &Vec3) -> Result<f64> {
    let j = f.jet(x)?;
    check_finite(j.lap, "laplacian", x)
}

/// `Δ²f(x)` as the 7-point stencil over the differentiated Laplacian.
pub fn biharmonic_fdm<F: ScalarField + ?Sized>(f: &F, x: &Vec3, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("stencil step must be positive, got {h}")));
    }
    let stencil = Stencil::laplacian_7pt(h);
    let laps = f.laplacians(&stencil.points(x))?;
    check_finite(stencil.combine(&laps), "biharmonic", x)
}
