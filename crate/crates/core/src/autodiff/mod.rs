//! Differentiation engine.
//!
//! Three cooperating pieces:
//!
//! * [`Jet`]: forward-mode second-order numbers carrying a value, its
//!   gradient with respect to the 3D input and its Laplacian.
//! * [`Tape`]: a scalar reverse-mode tape for arbitrary analytic fields.
//! * [`NetTape`]: a batched tape over jet-valued tensors for the field
//!   network, giving parameter gradients of any loss built from values,
//!   input gradients and Laplacians in one reverse sweep.
//!
//! Fourth-order quantities are never obtained by nesting differentiation
//! further: [`biharmonic_fdm`] applies the 7-point stencil to the
//! second-order Laplacian.

mod field;
mod graph;
mod jet;
mod scalar;
mod stencil;
mod tape;

pub use field::{biharmonic_fdm, grad_input, laplacian_input, Analytic, AnalyticField, ScalarField};
pub use graph::{JetBatch, Lanes, Linear, LinearGrad, NetTape, NodeId};
pub use jet::Jet;
pub use scalar::{softplus_derivs, Scalar};
pub use stencil::Stencil;
pub use tape::{Tape, TapeOp, Var};
