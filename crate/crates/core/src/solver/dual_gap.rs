//! Optimality certificate for a candidate pair `(Z, w)`.
//!
//! The gap upper-bounds primal suboptimality using only first-order
//! information at the candidate itself:
//!
//! ```text
//! gap(Z, w) = <Z, G> - tau * lambda_min(G)  +  sup_K(grad_y) - <w, grad_y>
//! ```
//!
//! with `G = grad_X f(Z, w)`. The primal term's inner maximizer is
//! `tau * v_n v_n^T` at the bottom eigenvector of `G`; the dual term is the
//! dual norm (entrywise l1 or l2) minus the achieved value. Both terms are
//! individually non-negative and both vanish at a saddle point.

use super::{DualPoint, Primal, SaddleProblem};
use crate::error::{Error, Result};
use crate::linalg::{topk_eigh_warm, SymMatrix};
use nalgebra::DVector;

/// Fixed seed for the bottom-eigenpair solve; the gap takes no seed of its
/// own and must be deterministic.
const GAP_EIG_SEED: u64 = 0x6a70_1 ;

/// Dual gap of a feasible pair `(Z, w)`; always `>= 0` up to eigensolver
/// accuracy, and `0` exactly at a saddle point.
pub fn dual_gap(problem: &dyn SaddleProblem, z: &Primal, w: &DualPoint) -> Result<f64> {
    dual_gap_warm(problem, z, w, None).map(|(gap, _)| gap)
}

/// [`dual_gap`] with a warm start for the bottom-eigenpair solve; returns
/// the bottom eigenvector so a solver loop can thread it through.
pub(crate) fn dual_gap_warm(
    problem: &dyn SaddleProblem,
    z: &Primal,
    w: &DualPoint,
    warm: Option<&DVector<f64>>,
) -> Result<(f64, DVector<f64>)> {
    let g = problem.grad_x(z, w);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            iteration: 0,
            message: "grad_x non-finite during dual-gap evaluation".into(),
        });
    }
    let gy = problem.grad_y(z, w);

    let neg = SymMatrix::symmetrize(&(-&g))?;
    let top = topk_eigh_warm(&neg, 1, GAP_EIG_SEED, warm)?;
    let lambda_min = -top.spectrum.eigenvalues[0];
    let bottom_vec = top.spectrum.eigenvectors.column(0).into_owned();

    let primal_term = z.factored().inner_dense(&g) - problem.trace_radius() * lambda_min;
    let dual_term = problem.dual_domain().support_value(&gy) - w.dot(&gy);
    Ok((primal_term + dual_term, bottom_vec))
}
