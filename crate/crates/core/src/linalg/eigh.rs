//! Full and partial symmetric eigendecompositions.
//!
//! `full_eigh` wraps the dense QR-based solver; `topk_eigh` is a Lanczos
//! iteration with full reorthogonalization and a seeded starting vector, so
//! identical `(matrix, k, seed)` inputs give identical results. If the
//! iteration fails to converge within its matrix-vector budget it falls back
//! to the dense path and reports that it did.

use super::{Spectrum, SymMatrix};
use crate::error::{invalid, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Residual bound guaranteed by both eigensolvers, relative to `max(1, |lambda_1|)`.
pub const EIGH_RESIDUAL_TOL: f64 = 1e-10;

/// Matrix-vector product budget for the Lanczos iteration, as a multiple of `n`.
const MATVEC_BUDGET_FACTOR: usize = 10;

/// Complete eigendecomposition of a symmetric matrix, eigenvalues sorted
/// non-increasing.
pub fn full_eigh(a: &SymMatrix) -> Result<Spectrum> {
    let n = a.dim();
    let eig = SymmetricEigen::new(a.as_matrix().clone());

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps tied eigenvalues in solver order, so the output is a
    // pure function of the input bits.
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(invalid("eigendecomposition produced non-finite eigenvalues"));
    }
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residual_tol: EIGH_RESIDUAL_TOL,
    })
}

/// Partial eigendecomposition with provenance of how it was obtained.
#[derive(Debug, Clone)]
pub struct TopkEigh {
    pub spectrum: Spectrum,
    /// True when Lanczos did not converge within its budget and the dense
    /// solver was used instead.
    pub dense_fallback: bool,
    /// Matrix-vector products consumed (0 on dense fallback).
    pub matvecs: usize,
}

/// The `k` algebraically largest eigenpairs of a symmetric matrix.
pub fn topk_eigh(a: &SymMatrix, k: usize, seed: u64) -> Result<Spectrum> {
    topk_eigh_detailed(a, k, seed).map(|r| r.spectrum)
}

/// Like [`topk_eigh`] but also reports whether the dense fallback fired.
pub fn topk_eigh_detailed(a: &SymMatrix, k: usize, seed: u64) -> Result<TopkEigh> {
    topk_eigh_warm(a, k, seed, None)
}

/// Warm-started variant: the first Krylov block grows from `start` instead
/// of a random direction. Iterative solvers embedded in a solver loop pass
/// the previous iteration's eigenvectors here; the matrices change little
/// between iterations, so convergence restarts from almost-invariant
/// directions. Results remain deterministic functions of all arguments.
pub(crate) fn topk_eigh_warm(
    a: &SymMatrix,
    k: usize,
    seed: u64,
    start: Option<&DVector<f64>>,
) -> Result<TopkEigh> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(invalid(format!("k must satisfy 1 <= k <= n, got k={k}, n={n}")));
    }
    if let Some(result) = lanczos_topk(a, k, seed, start) {
        return Ok(result);
    }
    let full = full_eigh(a)?;
    Ok(TopkEigh {
        spectrum: truncate_spectrum(&full, k),
        dense_fallback: true,
        matvecs: 0,
    })
}

fn truncate_spectrum(full: &Spectrum, k: usize) -> Spectrum {
    Spectrum {
        eigenvalues: full.eigenvalues[..k].to_vec(),
        eigenvectors: full.eigenvectors.columns(0, k).into_owned(),
        residual_tol: full.residual_tol,
    }
}

/// Lanczos with full reorthogonalization against the whole basis.
///
/// Two alternating phases. The growth phase extends the Krylov basis (with
/// seeded restarts across invariant-subspace breakdowns) until the top-k
/// Ritz pairs pass an explicit residual check. The probe phase then forces a
/// restart from a fresh direction orthogonal to everything seen and runs a
/// few more steps: a Krylov space grown from a single vector sees only one
/// direction per eigenspace, so a repeated top eigenvalue would otherwise be
/// silently missed. If the probe raises any of the top-k Ritz values, growth
/// resumes; otherwise the candidate is accepted after a final residual
/// verification.
///
/// Returns `None` when the matvec budget is exhausted first; the caller then
/// falls back to the dense solver.
fn lanczos_topk(
    a: &SymMatrix,
    k: usize,
    seed: u64,
    start: Option<&DVector<f64>>,
) -> Option<TopkEigh> {
    let mut st = Krylov::new(a, seed, start);
    let probe_len = k + 3;
    let stride = 4;

    loop {
        // Growth phase: reach a residual-verified candidate.
        let mut since_check = 0usize;
        let full = loop {
            match st.step() {
                Grow::Budget => return None,
                Grow::FullSpace => break true,
                Grow::Breakdown => since_check = stride,
                Grow::Extended => since_check += 1,
            }
            if st.basis.len() < k || since_check < stride {
                continue;
            }
            since_check = 0;
            let ritz = st.ritz(k);
            if st.estimates_pass(&ritz, k) && st.verified(&ritz, k).is_some() {
                break false;
            }
        };

        if full {
            // The basis spans the whole space; the Ritz pairs are exact.
            let ritz = st.ritz(k);
            return st.verified(&ritz, k).map(|(vals, vecs)| st.finish(vals, vecs));
        }

        let before = st.ritz(k).values;

        // Probe phase: force exploration of unseen directions.
        st.chain = None;
        let mut probed = 0usize;
        let outcome = loop {
            if probed >= probe_len {
                break Grow::Extended;
            }
            match st.step() {
                Grow::Budget => return None,
                Grow::FullSpace => break Grow::FullSpace,
                Grow::Breakdown => break Grow::Breakdown,
                Grow::Extended => probed += 1,
            }
        };
        if matches!(outcome, Grow::FullSpace) {
            let ritz = st.ritz(k);
            return st.verified(&ritz, k).map(|(vals, vecs)| st.finish(vals, vecs));
        }

        let ritz = st.ritz(k);
        let scale = ritz.values[0].abs().max(1.0);
        let raised = before
            .iter()
            .zip(&ritz.values)
            .any(|(old, new)| new - old > 1e-9 * scale);
        if raised {
            continue;
        }
        if let Some((vals, vecs)) = st.verified(&ritz, k) {
            return Some(st.finish(vals, vecs));
        }
    }
}

enum Grow {
    Extended,
    Breakdown,
    FullSpace,
    Budget,
}

struct Ritz {
    /// All Ritz values, non-increasing.
    values: Vec<f64>,
    /// Coefficient vectors of the top entries in basis coordinates.
    coeffs: DMatrix<f64>,
    /// Convergence estimates `beta * |last coefficient|` per kept pair.
    estimates: Vec<f64>,
}

/// Krylov basis with full reorthogonalization and seeded restarts.
struct Krylov<'a> {
    a: &'a SymMatrix,
    n: usize,
    budget: usize,
    matvecs: usize,
    basis: Vec<DVector<f64>>,
    projected: DMatrix<f64>,
    chain: Option<(DVector<f64>, Option<DVector<f64>>, f64)>,
    pending_start: Option<DVector<f64>>,
    rng: ChaCha8Rng,
}

impl<'a> Krylov<'a> {
    fn new(a: &'a SymMatrix, seed: u64, start: Option<&DVector<f64>>) -> Self {
        let n = a.dim();
        Self {
            a,
            n,
            budget: MATVEC_BUDGET_FACTOR * n,
            matvecs: 0,
            basis: Vec::new(),
            projected: DMatrix::zeros(n, n),
            chain: None,
            pending_start: start.cloned(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One Lanczos step (or a restart when the previous block broke down).
    fn step(&mut self) -> Grow {
        if self.basis.len() == self.n {
            return Grow::FullSpace;
        }
        if self.matvecs >= self.budget {
            return Grow::Budget;
        }
        let (current, prev, beta) = match self.chain.take() {
            Some(state) => state,
            None => {
                let d = self
                    .pending_start
                    .take()
                    .and_then(|s| normalize_against(s, &self.basis, self.n))
                    .or_else(|| fresh_direction(&mut self.rng, &self.basis, self.n));
                match d {
                    Some(d) => (d, None, 0.0),
                    None => return Grow::Budget,
                }
            }
        };
        let m = self.basis.len();
        self.basis.push(current.clone());

        let mut w = self.a.matvec(&current);
        self.matvecs += 1;
        let alpha = w.dot(&current);
        self.projected[(m, m)] = alpha;
        if beta != 0.0 {
            self.projected[(m - 1, m)] = beta;
            self.projected[(m, m - 1)] = beta;
        }
        w.axpy(-alpha, &current, 1.0);
        if let Some(p) = &prev {
            w.axpy(-beta, p, 1.0);
        }
        // Full reorthogonalization. The first pass also completes the
        // projected matrix: after restarts, A couples the current block to
        // earlier ones, and those couplings are exactly the coefficients
        // removed here. Without them the Ritz problem would be wrong.
        for (i, b) in self.basis.iter().enumerate() {
            let c = w.dot(b);
            w.axpy(-c, b, 1.0);
            if i + 1 < m {
                self.projected[(i, m)] += c;
                self.projected[(m, i)] += c;
            }
        }
        for b in &self.basis {
            let c = w.dot(b);
            w.axpy(-c, b, 1.0);
        }
        let next_beta = w.norm();
        if next_beta <= 1e-13 * alpha.abs().max(1.0) {
            self.chain = None;
            Grow::Breakdown
        } else {
            w /= next_beta;
            self.chain = Some((w, Some(current), next_beta));
            Grow::Extended
        }
    }

    /// Ritz data of the projected problem, keeping the top `k` coefficient
    /// vectors (or fewer while the basis is small).
    fn ritz(&self, k: usize) -> Ritz {
        let m = self.basis.len();
        let t = self.projected.view((0, 0), (m, m)).into_owned();
        let small = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| small.eigenvalues[j].partial_cmp(&small.eigenvalues[i]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| small.eigenvalues[i]).collect();
        let kept = k.min(m);
        let mut coeffs = DMatrix::zeros(m, kept);
        for (dst, &idx) in order.iter().take(kept).enumerate() {
            coeffs.set_column(dst, &small.eigenvectors.column(idx));
        }
        let beta = self.chain.as_ref().map_or(0.0, |(_, _, b)| *b);
        let estimates = (0..kept).map(|i| beta * coeffs[(m - 1, i)].abs()).collect();
        Ritz { values, coeffs, estimates }
    }

    fn tol(&self, ritz: &Ritz) -> f64 {
        EIGH_RESIDUAL_TOL * ritz.values[0].abs().max(1.0)
    }

    fn estimates_pass(&self, ritz: &Ritz, k: usize) -> bool {
        let tol = self.tol(ritz);
        ritz.estimates.len() >= k && ritz.estimates[..k].iter().all(|&e| e <= tol)
    }

    /// Assembles the top-`k` Ritz vectors and checks residuals explicitly.
    fn verified(&mut self, ritz: &Ritz, k: usize) -> Option<(Vec<f64>, DMatrix<f64>)> {
        if ritz.coeffs.ncols() < k {
            return None;
        }
        let tol = self.tol(ritz);
        let mut eigenvalues = Vec::with_capacity(k);
        let mut eigenvectors = DMatrix::zeros(self.n, k);
        for i in 0..k {
            let mut v = DVector::zeros(self.n);
            for (bi, b) in self.basis.iter().enumerate() {
                v.axpy(ritz.coeffs[(bi, i)], b, 1.0);
            }
            let norm = v.norm();
            if norm <= 0.0 {
                return None;
            }
            v /= norm;
            eigenvalues.push(ritz.values[i]);
            eigenvectors.set_column(i, &v);
        }
        for i in 0..k {
            let v = eigenvectors.column(i).into_owned();
            let r = self.a.matvec(&v) - eigenvalues[i] * &v;
            self.matvecs += 1;
            if r.norm() > tol {
                return None;
            }
        }
        Some((eigenvalues, eigenvectors))
    }

    fn finish(&self, eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> TopkEigh {
        TopkEigh {
            spectrum: Spectrum {
                eigenvalues,
                eigenvectors,
                residual_tol: EIGH_RESIDUAL_TOL,
            },
            dense_fallback: false,
            matvecs: self.matvecs,
        }
    }
}

/// Orthogonalizes a caller-provided start vector against `basis`; `None`
/// when it carries no new direction.
fn normalize_against(
    mut v: DVector<f64>,
    basis: &[DVector<f64>],
    n: usize,
) -> Option<DVector<f64>> {
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = v.dot(b);
            v.axpy(-c, b, 1.0);
        }
    }
    let norm = v.norm();
    if norm > 1e-8 {
        Some(v / norm)
    } else {
        None
    }
}

/// A unit vector orthogonalized against `basis`, drawn from the seeded rng.
fn fresh_direction(
    rng: &mut ChaCha8Rng,
    basis: &[DVector<f64>],
    n: usize,
) -> Option<DVector<f64>> {
    for _ in 0..32 {
        let mut v = DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        for _ in 0..2 {
            for b in basis {
                let c = v.dot(b);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return Some(v / norm);
        }
    }
    None
}
