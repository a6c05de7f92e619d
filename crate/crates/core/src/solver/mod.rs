//! The projected extragradient loop over `tau * S_n x K` and its
//! diagnostics: theoretical step sizes, dual-gap evaluation, and
//! strict-complementarity reports.

mod complementarity;
mod dual_gap;
mod extragradient;
mod gradcheck;

pub use complementarity::{complementarity_report, ComplementarityReport};
pub use dual_gap::dual_gap;
pub use extragradient::{eg_run, eg_step, BestIterate, IterationRecord, SolverReport};
pub use gradcheck::check_gradients;

use crate::error::{invalid, Result};
use crate::spectrahedron::LowRankPsd;
use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

/// A point (or gradient) living in the dual space: an `n x n` matrix for the
/// entrywise-infinity ball, a length-`m` vector for the Euclidean ball.
#[derive(Debug, Clone)]
pub enum DualPoint {
    Matrix(DMatrix<f64>),
    Vector(DVector<f64>),
}

impl DualPoint {
    pub fn zeros_like(domain: &DualDomain) -> Self {
        match domain {
            DualDomain::MatInfBall { n } => DualPoint::Matrix(DMatrix::zeros(*n, *n)),
            DualDomain::VecL2Ball { m } => DualPoint::Vector(DVector::zeros(*m)),
        }
    }

    /// Euclidean norm of the underlying coordinates (Frobenius for matrices).
    pub fn norm(&self) -> f64 {
        match self {
            DualPoint::Matrix(m) => m.norm(),
            DualPoint::Vector(v) => v.norm(),
        }
    }

    pub fn distance(&self, other: &DualPoint) -> f64 {
        match (self, other) {
            (DualPoint::Matrix(a), DualPoint::Matrix(b)) => (a - b).norm(),
            (DualPoint::Vector(a), DualPoint::Vector(b)) => (a - b).norm(),
            _ => panic!("dual points from different spaces"),
        }
    }

    pub fn dot(&self, other: &DualPoint) -> f64 {
        match (self, other) {
            (DualPoint::Matrix(a), DualPoint::Matrix(b)) => a.dot(b),
            (DualPoint::Vector(a), DualPoint::Vector(b)) => a.dot(b),
            _ => panic!("dual points from different spaces"),
        }
    }

    /// `self + scale * other`, consuming self.
    pub fn axpy(mut self, scale: f64, other: &DualPoint) -> DualPoint {
        match (&mut self, other) {
            (DualPoint::Matrix(a), DualPoint::Matrix(b)) => *a += b * scale,
            (DualPoint::Vector(a), DualPoint::Vector(b)) => *a += b * scale,
            _ => panic!("dual points from different spaces"),
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        match self {
            DualPoint::Matrix(m) => m.iter().all(|v| v.is_finite()),
            DualPoint::Vector(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        match self {
            DualPoint::Matrix(m) => m,
            DualPoint::Vector(_) => panic!("expected matrix-shaped dual point"),
        }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        match self {
            DualPoint::Vector(v) => v,
            DualPoint::Matrix(_) => panic!("expected vector-shaped dual point"),
        }
    }
}

/// The compact convex dual domain `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualDomain {
    /// `{Y : max_ij |Y_ij| <= 1}`.
    MatInfBall { n: usize },
    /// `{y : ||y||_2 <= 1}`.
    VecL2Ball { m: usize },
}

impl DualDomain {
    /// Exact Euclidean projection onto `K`: entrywise clamp for the
    /// infinity ball, radial scaling for the Euclidean ball.
    pub fn project(&self, raw: DualPoint) -> DualPoint {
        match (self, raw) {
            (DualDomain::MatInfBall { .. }, DualPoint::Matrix(mut m)) => {
                for v in m.iter_mut() {
                    *v = v.clamp(-1.0, 1.0);
                }
                DualPoint::Matrix(m)
            }
            (DualDomain::VecL2Ball { .. }, DualPoint::Vector(mut v)) => {
                let norm = v.norm();
                if norm > 1.0 {
                    v /= norm;
                }
                DualPoint::Vector(v)
            }
            _ => panic!("dual point does not match domain"),
        }
    }

    /// `max_{y in K} <y, g>`: the dual norm of the gradient (entrywise l1 or
    /// l2), which is what the dual-gap bound needs.
    pub fn support_value(&self, g: &DualPoint) -> f64 {
        match (self, g) {
            (DualDomain::MatInfBall { .. }, DualPoint::Matrix(m)) => {
                m.iter().map(|v| v.abs()).sum()
            }
            (DualDomain::VecL2Ball { .. }, DualPoint::Vector(v)) => v.norm(),
            _ => panic!("dual point does not match domain"),
        }
    }

    pub fn contains(&self, p: &DualPoint, tol: f64) -> bool {
        match (self, p) {
            (DualDomain::MatInfBall { n }, DualPoint::Matrix(m)) => {
                m.nrows() == *n && m.ncols() == *n && m.iter().all(|v| v.abs() <= 1.0 + tol)
            }
            (DualDomain::VecL2Ball { m }, DualPoint::Vector(v)) => {
                v.len() == *m && v.norm() <= 1.0 + tol
            }
            _ => false,
        }
    }

    /// Diameter in the Euclidean norm of the ambient coordinates.
    pub fn diameter(&self) -> f64 {
        match self {
            DualDomain::MatInfBall { n } => 2.0 * *n as f64,
            DualDomain::VecL2Ball { .. } => 2.0,
        }
    }
}

/// The four blockwise Lipschitz constants of the gradient of `f`, and the
/// full constant they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants {
    pub beta_x: f64,
    pub beta_y: f64,
    pub beta_xy: f64,
    pub beta_yx: f64,
}

impl SmoothnessConstants {
    pub fn new(beta_x: f64, beta_y: f64, beta_xy: f64, beta_yx: f64) -> Self {
        Self { beta_x, beta_y, beta_xy, beta_yx }
    }

    /// `beta = sqrt(2) * max(sqrt(beta_x^2 + beta_yx^2), sqrt(beta_y^2 + beta_xy^2))`.
    pub fn full(&self) -> f64 {
        let a = (self.beta_x.powi(2) + self.beta_yx.powi(2)).sqrt();
        let b = (self.beta_y.powi(2) + self.beta_xy.powi(2)).sqrt();
        2.0f64.sqrt() * a.max(b)
    }
}

/// Fixed step size for the extragradient method:
/// `min{ 1/(2 sqrt(beta_x^2 + beta_yx^2)), 1/(2 sqrt(beta_y^2 + beta_xy^2)),
///       1/(beta_x + beta_xy), 1/(beta_y + beta_yx) }`,
/// with zero denominators treated as infinite branches.
pub fn theoretical_step_size(c: &SmoothnessConstants) -> Result<f64> {
    let branches = [
        2.0 * (c.beta_x.powi(2) + c.beta_yx.powi(2)).sqrt(),
        2.0 * (c.beta_y.powi(2) + c.beta_xy.powi(2)).sqrt(),
        c.beta_x + c.beta_xy,
        c.beta_y + c.beta_yx,
    ];
    let eta = branches
        .iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| 1.0 / d)
        .fold(f64::INFINITY, f64::min);
    if eta.is_finite() {
        Ok(eta)
    } else {
        Err(invalid("all smoothness constants are zero"))
    }
}

/// A primal iterate: factored low-rank point with a lazily materialized
/// dense form, so gradients that need the full matrix pay for it once.
#[derive(Debug)]
pub struct Primal {
    factored: LowRankPsd,
    dense: OnceLock<DMatrix<f64>>,
}

impl Primal {
    pub fn new(factored: LowRankPsd) -> Self {
        Self { factored, dense: OnceLock::new() }
    }

    pub fn factored(&self) -> &LowRankPsd {
        &self.factored
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        self.dense.get_or_init(|| self.factored.to_dense())
    }

    pub fn distance(&self, other: &Primal) -> f64 {
        self.factored.frobenius_distance(other.factored())
    }
}

impl Clone for Primal {
    fn clone(&self) -> Self {
        Self { factored: self.factored.clone(), dense: OnceLock::new() }
    }
}

impl From<LowRankPsd> for Primal {
    fn from(p: LowRankPsd) -> Self {
        Primal::new(p)
    }
}

/// A convex-concave saddle problem `min_{X in tau*S_n} max_{y in K} f(X, y)`
/// with explicitly known gradients and smoothness constants.
///
/// Implementations must be read-only after construction; the solver shares
/// them across concurrent runs.
pub trait SaddleProblem: Send + Sync {
    /// Ambient primal dimension `n`.
    fn dim(&self) -> usize;

    /// Trace radius `tau` of the primal feasible set.
    fn trace_radius(&self) -> f64;

    fn dual_domain(&self) -> DualDomain;

    /// `grad_X f(X, y)`, always symmetric.
    fn grad_x(&self, x: &Primal, y: &DualPoint) -> DMatrix<f64>;

    /// `grad_y f(X, y)`, shaped like a dual point.
    fn grad_y(&self, x: &Primal, y: &DualPoint) -> DualPoint;

    fn smoothness(&self) -> SmoothnessConstants;

    /// Diameter `D` of the product feasible set, for the ergodic bound.
    fn diameter(&self) -> f64 {
        let tau = self.trace_radius();
        (2.0 * tau * tau + self.dual_domain().diameter().powi(2)).sqrt()
    }

    /// `f(X, y)` at a dense symmetric `X`.
    fn value(&self, x: &DMatrix<f64>, y: &DualPoint) -> f64;

    /// `max_{y in K} f(X, y)`: the nonsmooth primal objective `g(X)`.
    fn primal_objective(&self, x: &DMatrix<f64>) -> f64;

    /// `min_{X in tau*S_n} f(X, y)` in closed form (one extreme eigenpair or
    /// one projection, depending on how `f` depends on `X`).
    fn dual_objective(&self, y: &DualPoint) -> f64;
}

/// The four live iterates of the extragradient recursion.
#[derive(Debug, Clone)]
pub struct SaddleState {
    pub x: Primal,
    pub y: DualPoint,
    pub z: Primal,
    pub w: DualPoint,
    pub iteration: usize,
}

impl SaddleState {
    pub fn initial(x: LowRankPsd, y: DualPoint) -> Self {
        let x = Primal::new(x);
        let z = x.clone();
        let w = y.clone();
        Self { x, y, z, w, iteration: 0 }
    }
}

/// How the two spectrahedron projections inside each iteration are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Rank-`r` truncated projections, keeping whatever they produce.
    TruncatedOnly,
    /// Truncated first; on certificate failure recompute exactly.
    CertifiedFallback,
    /// Dense projections throughout (certificates still evaluated for the
    /// configured rank, as diagnostics).
    FullOnly,
}

/// Configuration of a solver run.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub step_size: f64,
    pub iterations: usize,
    /// Truncation rank `r` used by the projections and the certificate.
    pub rank: usize,
    pub mode: ProjectionMode,
    pub seed: u64,
    /// Evaluate the dual gap every this many iterations. `None` picks 1 for
    /// `n <= 200` and 10 above, since each evaluation costs an extreme
    /// eigenpair solve.
    pub gap_every: Option<usize>,
}

impl SolverOptions {
    pub fn gap_cadence(&self, n: usize) -> usize {
        self.gap_every.unwrap_or(if n <= 200 { 1 } else { 10 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_size_sparse_pca_constants() {
        let lambda = 0.008;
        let c = SmoothnessConstants::new(0.0, 0.0, lambda, lambda);
        let eta = theoretical_step_size(&c).unwrap();
        assert!((eta - 62.5).abs() < 1e-12);
        assert!((eta - 1.0 / (2.0 * lambda)).abs() < 1e-12);
    }

    #[test]
    fn step_size_robust_pca_constants() {
        let c = SmoothnessConstants::new(0.0, 0.0, 1.0, 1.0);
        assert!((theoretical_step_size(&c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_size_quadratic_plus_penalty() {
        let lambda = 0.0012f64;
        let c = SmoothnessConstants::new(1.0, 0.0, lambda, lambda);
        let eta = theoretical_step_size(&c).unwrap();
        let expected = 1.0 / (2.0 * (1.0 + lambda * lambda).sqrt());
        assert!((eta - expected).abs() < 1e-15);
        assert!((eta - 0.4999997).abs() < 1e-6);
    }

    #[test]
    fn step_size_rejects_all_zero() {
        let c = SmoothnessConstants::new(0.0, 0.0, 0.0, 0.0);
        assert!(theoretical_step_size(&c).is_err());
    }

    #[test]
    fn full_constant_formula() {
        let c = SmoothnessConstants::new(3.0, 1.0, 2.0, 4.0);
        let expected = 2.0f64.sqrt() * (9.0f64 + 16.0).sqrt().max((1.0f64 + 4.0).sqrt());
        assert!((c.full() - expected).abs() < 1e-14);
    }

    #[test]
    fn inf_ball_projection_clamps() {
        let domain = DualDomain::MatInfBall { n: 2 };
        let raw = DualPoint::Matrix(DMatrix::from_row_slice(2, 2, &[2.0, -3.0, 0.5, -0.1]));
        let p = domain.project(raw);
        let m = p.as_matrix();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], 0.5);
        assert!(domain.contains(&p, 1e-10));
    }

    #[test]
    fn l2_ball_projection_scales() {
        let domain = DualDomain::VecL2Ball { m: 3 };
        let raw = DualPoint::Vector(DVector::from_row_slice(&[3.0, 0.0, 4.0]));
        let p = domain.project(raw);
        assert!((p.norm() - 1.0).abs() < 1e-12);
        let inside = domain.project(DualPoint::Vector(DVector::from_row_slice(&[0.1, 0.0, 0.2])));
        assert!((inside.as_vector()[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn support_values_are_dual_norms() {
        let inf = DualDomain::MatInfBall { n: 2 };
        let g = DualPoint::Matrix(DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.0, 3.0]));
        assert!((inf.support_value(&g) - 6.0).abs() < 1e-14);
        let l2 = DualDomain::VecL2Ball { m: 2 };
        let gv = DualPoint::Vector(DVector::from_row_slice(&[3.0, 4.0]));
        assert!((l2.support_value(&gv) - 5.0).abs() < 1e-14);
    }
}
