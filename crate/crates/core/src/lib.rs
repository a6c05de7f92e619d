//! Saddle-point solver for nonsmooth low-rank matrix optimization over the
//! scaled spectrahedron `{X >= 0, tr(X) = tau}`.
//!
//! The centerpiece is a projected extragradient method whose spectrahedron
//! projections run on rank-`r` partial eigendecompositions. A one-extra-
//! eigenpair certificate (`sum_{i<=r} lambda_i >= tau + r lambda_{r+1}`)
//! verifies, at every single iteration, that the truncated projection equals
//! the exact full-rank one, so low-rank execution is exact whenever the
//! certificate chain stays green — and honestly reported when it does not.
//!
//! The crate ships:
//! - [`linalg`]: deterministic dense and Lanczos eigensolvers, simplex
//!   thresholding;
//! - [`spectrahedron`]: exact and truncated projections plus the certificate;
//! - [`solver`]: the extragradient loop, dual-gap optimality certificates,
//!   and strict-complementarity diagnostics;
//! - [`problems`]: five seeded benchmark generators (sparse PCA, low-rank &
//!   sparse recovery, robust PCA, phase synchronization, linearly
//!   constrained estimation);
//! - [`subgradient`]: the projected-subgradient rank-blow-up construction
//!   that motivates the saddle-point route.

pub mod error;
pub mod linalg;
pub mod problems;
pub mod solver;
pub mod spectrahedron;
pub mod subgradient;

pub use error::{Error, Result};
pub use linalg::{
    full_eigh, numerical_rank, project_simplex, simplex_threshold, topk_eigh, Spectrum,
    SymMatrix,
};
pub use solver::{
    check_gradients, complementarity_report, dual_gap, eg_run, eg_step, theoretical_step_size,
    ComplementarityReport, DualDomain, DualPoint, Primal, ProjectionMode, SaddleProblem,
    SaddleState, SmoothnessConstants, SolverOptions, SolverReport,
};
pub use spectrahedron::{
    certify_rank, exact_project, truncated_project, LowRankPsd, ProjectionOutcome,
};
