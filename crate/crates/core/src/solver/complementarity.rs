//! Strict-complementarity diagnostics at an (approximate) saddle point.
//!
//! From the full spectrum of `G* = grad_X f(X*, y*)` the report derives the
//! bottom-eigenvalue multiplicity `r_tilde`, the eigengaps
//! `delta(r) = lambda_{n-r}(G*) - lambda_n(G*)`, and the warm-start radii
//! those gaps buy: how far from the saddle the iterates may start while
//! every rank-r truncated projection still provably equals the exact one.

use super::{DualPoint, Primal, SaddleProblem};
use crate::error::{invalid, Result};
use crate::linalg::{full_eigh, SymMatrix};

/// Relative tolerance (of the spectral spread) for grouping eigenvalues into
/// the bottom cluster.
pub const MULTIPLICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ComplementarityReport {
    /// Multiplicity of the smallest eigenvalue of `G*`.
    pub r_tilde: usize,
    /// Eigenvalues of `G*`, non-increasing.
    pub spectrum: Vec<f64>,
    /// Largest rank the maps below cover.
    pub r_max: usize,
    deltas: Vec<f64>,
    radius_warm_start: Vec<f64>,
    radius_local: Vec<f64>,
}

impl ComplementarityReport {
    /// `delta(r) = lambda_{n-r} - lambda_n` for `1 <= r <= r_max`.
    pub fn delta(&self, r: usize) -> f64 {
        assert!(r >= 1 && r <= self.r_max, "delta(r) needs 1 <= r <= r_max");
        self.deltas[r - 1]
    }

    /// Warm-start radius guaranteeing certified rank-`r` projections along
    /// the whole run (defined for `r >= r_tilde`).
    pub fn warm_start_radius(&self, r: usize) -> f64 {
        assert!(r >= self.r_tilde && r <= self.r_max);
        self.radius_warm_start[r - self.r_tilde]
    }

    /// Single-point radius under which one projected step stays rank-`r`;
    /// slightly larger denominator than the warm-start form, reported
    /// separately rather than reconciled.
    pub fn local_radius(&self, r: usize) -> f64 {
        assert!(r >= self.r_tilde && r <= self.r_max);
        self.radius_local[r - self.r_tilde]
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

/// Builds the report from the full spectrum of `G* = grad_X f(x, y)`.
///
/// `delta(r - r_tilde + 1)` enters the radius formulas as 0 whenever
/// `r < 2 r_tilde - 1`, where the underlying bound does not apply.
pub fn complementarity_report(
    problem: &dyn SaddleProblem,
    x: &Primal,
    y: &DualPoint,
    r_max: usize,
    eta: f64,
) -> Result<ComplementarityReport> {
    let n = problem.dim();
    if r_max == 0 || r_max >= n {
        return Err(invalid(format!("r_max must satisfy 1 <= r_max < n, got {r_max}")));
    }
    let g = SymMatrix::symmetrize(&problem.grad_x(x, y))?;
    let spectrum = full_eigh(&g)?.eigenvalues;

    let lambda_min = spectrum[n - 1];
    let spread = spectrum[0] - lambda_min;
    let cluster_tol = MULTIPLICITY_TOL * spread;
    let r_tilde = spectrum
        .iter()
        .filter(|&&l| l - lambda_min <= cluster_tol)
        .count();

    let delta = |r: usize| -> f64 { spectrum[n - r - 1] - lambda_min };
    let deltas: Vec<f64> = (1..=r_max).map(delta).collect();

    let c = problem.smoothness();
    let max_beta = c.beta_x.max(c.beta_xy);
    let beta = c.full();
    let sqrt2 = 2.0f64.sqrt();
    let warm_prefactor = eta / ((1.0 + sqrt2) * (1.0 + (2.0 + sqrt2) * eta * max_beta));
    let local_prefactor = if eta * beta < 1.0 {
        let excursion = 1.0 + 1.0 / (1.0 - eta * eta * beta * beta).sqrt();
        eta / (1.0 + sqrt2 * eta * max_beta * excursion)
    } else {
        0.0
    };

    let rt = r_tilde as f64;
    let inner = |r: usize| -> f64 {
        let shifted = if r + 1 >= 2 * r_tilde { delta(r - r_tilde + 1) } else { 0.0 };
        let a = rt.sqrt() * shifted / 2.0;
        let b = delta(r) / (1.0 + 1.0 / rt.sqrt());
        a.max(b)
    };
    let mut radius_warm_start = Vec::new();
    let mut radius_local = Vec::new();
    for r in r_tilde..=r_max {
        radius_warm_start.push(warm_prefactor * inner(r));
        radius_local.push(local_prefactor * inner(r));
    }

    Ok(ComplementarityReport {
        r_tilde,
        spectrum,
        r_max,
        deltas,
        radius_warm_start,
        radius_local,
    })
}
