//! The projected extragradient iteration and its run-level bookkeeping.
//!
//! One iteration performs a probe step to `(Z_{t+1}, w_{t+1})` with gradients
//! at `(X_t, y_t)`, then the actual step to `(X_{t+1}, y_{t+1})` with
//! gradients re-evaluated at the probe point. Both spectrahedron projections
//! can run in truncated rank-r form; each reports its certificate so a run
//! knows exactly which iterations provably matched the full-rank computation.

use super::complementarity::{complementarity_report, ComplementarityReport};
use super::dual_gap::dual_gap_warm;
use super::{DualPoint, Primal, ProjectionMode, SaddleProblem, SaddleState, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::SymMatrix;
use crate::spectrahedron::{
    full_project_with_margin, truncated_project_warm, LowRankPsd, ProjectionOutcome,
};
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

/// Certificate and provenance flags of one spectrahedron projection.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionSummary {
    pub certified: bool,
    pub fallback_used: bool,
    pub certificate_margin: f64,
    pub near_boundary: bool,
    pub eig_dense_fallback: bool,
}

impl From<&ProjectionOutcome> for ProjectionSummary {
    fn from(o: &ProjectionOutcome) -> Self {
        Self {
            certified: o.certified,
            fallback_used: o.fallback_used,
            certificate_margin: o.certificate_margin,
            near_boundary: o.near_boundary,
            eig_dense_fallback: o.eig_dense_fallback,
        }
    }
}

/// Everything recorded about one iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// 1-based iteration index `t`.
    pub iteration: usize,
    /// Projection producing `Z_{t+1}`.
    pub probe: ProjectionSummary,
    /// Projection producing `X_{t+1}`.
    pub step: ProjectionSummary,
    /// Dual gap of `(Z_{t+1}, w_{t+1})`, when evaluated this iteration.
    pub gap_probe: Option<f64>,
    /// Dual gap of `(X_{t+1}, y_{t+1})`, when evaluated this iteration.
    pub gap_step: Option<f64>,
    pub elapsed_ms: f64,
}

/// The iterate with the smallest recorded dual gap, over both sequences.
#[derive(Debug, Clone)]
pub struct BestIterate {
    pub iteration: usize,
    /// True when the best point came from the probe sequence `(Z, w)`.
    pub from_probe: bool,
    pub point: LowRankPsd,
    pub dual: DualPoint,
    pub gap: f64,
}

/// Full account of a solver run.
#[derive(Debug)]
pub struct SolverReport {
    pub records: Vec<IterationRecord>,
    pub best: BestIterate,
    pub final_state: SaddleState,
    /// Projections whose certificate failed.
    pub certificate_violations: usize,
    /// Projections recomputed densely after a failed certificate.
    pub fallback_count: usize,
    /// Certificates that failed by less than the near-boundary tolerance.
    pub near_boundary_count: usize,
    /// Partial eigensolves that fell back to the dense path.
    pub dense_eigh_fallbacks: usize,
    pub complementarity: ComplementarityReport,
    pub step_size: f64,
    pub iterations: usize,
    pub rank: usize,
    pub mode: ProjectionMode,
    pub total_ms: f64,
}

impl SolverReport {
    /// Smallest recorded dual gap; equals `best.gap`.
    pub fn best_gap(&self) -> f64 {
        self.best.gap
    }
}

/// Warm-start directions threaded across iterations: previous top
/// eigenvectors of the two projection inputs, previous bottom eigenvectors
/// of the two gap evaluations. Purely an accelerator; results stay
/// deterministic because every vector here is itself a deterministic
/// function of the run inputs.
#[derive(Default)]
struct WarmCache {
    probe: Option<DVector<f64>>,
    step: Option<DVector<f64>>,
    gap_probe: Option<DVector<f64>>,
    gap_step: Option<DVector<f64>>,
}

fn project_for_mode(
    p: &SymMatrix,
    tau: f64,
    rank: usize,
    mode: ProjectionMode,
    seed: u64,
    warm: Option<&DVector<f64>>,
) -> Result<(ProjectionOutcome, Option<DVector<f64>>)> {
    match mode {
        ProjectionMode::TruncatedOnly => truncated_project_warm(p, tau, rank, seed, false, warm)
            .map(|(out, w)| (out, Some(w))),
        ProjectionMode::CertifiedFallback => {
            truncated_project_warm(p, tau, rank, seed, true, warm).map(|(out, w)| (out, Some(w)))
        }
        ProjectionMode::FullOnly => full_project_with_margin(p, tau, rank).map(|out| (out, None)),
    }
}

fn ensure_finite_matrix(g: &DMatrix<f64>, iteration: usize, what: &str) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            iteration,
            message: format!("{what} returned non-finite values"),
        });
    }
    Ok(())
}

fn ensure_finite_dual(g: &DualPoint, iteration: usize, what: &str) -> Result<()> {
    if !g.is_finite() {
        return Err(Error::NumericalFailure {
            iteration,
            message: format!("{what} returned non-finite values"),
        });
    }
    Ok(())
}

/// One extragradient iteration: the four projected updates, with the two
/// spectrahedron projections performed per `mode`.
pub fn eg_step(
    problem: &dyn SaddleProblem,
    state: &SaddleState,
    eta: f64,
    rank: usize,
    mode: ProjectionMode,
    seed: u64,
) -> Result<(SaddleState, ProjectionOutcome, ProjectionOutcome)> {
    let mut cache = WarmCache::default();
    eg_step_cached(problem, state, eta, rank, mode, seed, &mut cache)
}

fn eg_step_cached(
    problem: &dyn SaddleProblem,
    state: &SaddleState,
    eta: f64,
    rank: usize,
    mode: ProjectionMode,
    seed: u64,
    cache: &mut WarmCache,
) -> Result<(SaddleState, ProjectionOutcome, ProjectionOutcome)> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    let t = state.iteration + 1;
    let tau = problem.trace_radius();
    let domain = problem.dual_domain();

    let g1 = problem.grad_x(&state.x, &state.y);
    ensure_finite_matrix(&g1, t, "grad_x")?;
    let h1 = problem.grad_y(&state.x, &state.y);
    ensure_finite_dual(&h1, t, "grad_y")?;

    let p1 = SymMatrix::symmetrize(&(state.x.dense() - &g1 * eta))
        .map_err(|e| Error::NumericalFailure { iteration: t, message: e.to_string() })?;
    let (probe, warm_probe) =
        project_for_mode(&p1, tau, rank, mode, seed, cache.probe.as_ref())?;
    cache.probe = warm_probe;
    let z = Primal::new(probe.point.clone());
    let w = domain.project(state.y.clone().axpy(eta, &h1));

    let g2 = problem.grad_x(&z, &w);
    ensure_finite_matrix(&g2, t, "grad_x at probe point")?;
    let h2 = problem.grad_y(&z, &w);
    ensure_finite_dual(&h2, t, "grad_y at probe point")?;

    let p2 = SymMatrix::symmetrize(&(state.x.dense() - &g2 * eta))
        .map_err(|e| Error::NumericalFailure { iteration: t, message: e.to_string() })?;
    let (step, warm_step) =
        project_for_mode(&p2, tau, rank, mode, seed.wrapping_add(1), cache.step.as_ref())?;
    cache.step = warm_step;
    let x_next = Primal::new(step.point.clone());
    let y_next = domain.project(state.y.clone().axpy(eta, &h2));

    let next = SaddleState { x: x_next, y: y_next, z, w, iteration: t };
    Ok((next, probe, step))
}

/// Runs `T` extragradient iterations from `init`, recording certificates and
/// dual gaps, and returns the best iterate by dual gap over both sequences.
pub fn eg_run(
    problem: &dyn SaddleProblem,
    init: (LowRankPsd, DualPoint),
    options: &SolverOptions,
) -> Result<SolverReport> {
    let n = problem.dim();
    if options.iterations == 0 {
        return Err(invalid("iteration count must be at least 1"));
    }
    if options.rank == 0 || options.rank >= n {
        return Err(invalid(format!(
            "rank must satisfy 1 <= r < n, got r={}, n={n}",
            options.rank
        )));
    }
    let (x0, y0) = init;
    x0.validate()?;
    if (x0.tau() - problem.trace_radius()).abs() > 1e-8 * problem.trace_radius().max(1.0) {
        return Err(invalid("initial point has wrong trace radius"));
    }
    if !problem.dual_domain().contains(&y0, 1e-10) {
        return Err(invalid("initial dual point is outside K"));
    }

    let cadence = options.gap_cadence(n);
    let start = Instant::now();
    let mut state = SaddleState::initial(x0, y0);
    let mut records = Vec::with_capacity(options.iterations);
    let mut best: Option<BestIterate> = None;
    let mut certificate_violations = 0usize;
    let mut fallback_count = 0usize;
    let mut near_boundary_count = 0usize;
    let mut dense_eigh_fallbacks = 0usize;
    let mut cache = WarmCache::default();

    for t in 1..=options.iterations {
        let iter_start = Instant::now();
        let seed_t = options.seed.wrapping_add(2 * t as u64);
        let (next, probe, step) = eg_step_cached(
            problem,
            &state,
            options.step_size,
            options.rank,
            options.mode,
            seed_t,
            &mut cache,
        )?;
        state = next;

        for outcome in [&probe, &step] {
            if !outcome.certified {
                certificate_violations += 1;
            }
            if outcome.fallback_used {
                fallback_count += 1;
            }
            if outcome.near_boundary {
                near_boundary_count += 1;
            }
            if outcome.eig_dense_fallback {
                dense_eigh_fallbacks += 1;
            }
        }

        let (gap_probe, gap_step) = if t % cadence == 0 || t == options.iterations {
            let (gz, warm_gz) =
                dual_gap_warm(problem, &state.z, &state.w, cache.gap_probe.as_ref())?;
            cache.gap_probe = Some(warm_gz);
            let (gx, warm_gx) =
                dual_gap_warm(problem, &state.x, &state.y, cache.gap_step.as_ref())?;
            cache.gap_step = Some(warm_gx);
            let replace = |cur: &Option<BestIterate>, gap: f64| match cur {
                Some(b) => gap < b.gap,
                None => true,
            };
            if replace(&best, gz) {
                best = Some(BestIterate {
                    iteration: t,
                    from_probe: true,
                    point: state.z.factored().clone(),
                    dual: state.w.clone(),
                    gap: gz,
                });
            }
            if replace(&best, gx) {
                best = Some(BestIterate {
                    iteration: t,
                    from_probe: false,
                    point: state.x.factored().clone(),
                    dual: state.y.clone(),
                    gap: gx,
                });
            }
            (Some(gz), Some(gx))
        } else {
            (None, None)
        };

        records.push(IterationRecord {
            iteration: t,
            probe: ProjectionSummary::from(&probe),
            step: ProjectionSummary::from(&step),
            gap_probe,
            gap_step,
            elapsed_ms: iter_start.elapsed().as_secs_f64() * 1e3,
        });
    }

    let best = best.expect("final iteration always evaluates the gap");
    let r_max = (options.rank + 2).min(n - 1);
    let best_primal = Primal::new(best.point.clone());
    let complementarity = complementarity_report(
        problem,
        &best_primal,
        &best.dual,
        r_max,
        options.step_size,
    )?;

    Ok(SolverReport {
        records,
        best,
        final_state: state,
        certificate_violations,
        fallback_count,
        near_boundary_count,
        dense_eigh_fallbacks,
        complementarity,
        step_size: options.step_size,
        iterations: options.iterations,
        rank: options.rank,
        mode: options.mode,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
