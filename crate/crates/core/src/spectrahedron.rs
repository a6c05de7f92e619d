//! Euclidean projections onto the trace-`tau` spectrahedron
//! `{X symmetric, X >= 0, tr(X) = tau}`, in exact and rank-r truncated form,
//! together with the eigenvalue certificate that tells when the two coincide.
//!
//! The exact projection shifts the spectrum down by the simplex threshold and
//! clips at zero. The truncated variant touches only the top `r+1` eigenpairs:
//! `r` to build the projected point and one more to evaluate the certificate
//! `sum_{i<=r} lambda_i >= tau + r * lambda_{r+1}`. When the certificate
//! holds the truncated point provably equals the exact projection, so a
//! solver can run on low-rank decompositions alone and still know, iteration
//! by iteration, that nothing was lost.

use crate::error::{invalid, Result};
use crate::linalg::{
    full_eigh, numerical_rank, simplex_threshold, topk_eigh_detailed, Spectrum, SymMatrix,
};
use nalgebra::{DMatrix, DVector};

/// Margins in `[-NEAR_BOUNDARY_TOL * tau, 0)` are flagged as near-boundary.
pub const NEAR_BOUNDARY_TOL: f64 = 1e-10;

/// A PSD matrix of trace `tau` stored in factored form: positive eigenvalues
/// (non-increasing) and their orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct LowRankPsd {
    n: usize,
    tau: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl LowRankPsd {
    /// Wraps a factored point, dropping non-positive eigenvalues.
    ///
    /// The caller supplies eigenvalues in non-increasing order whose positive
    /// part sums to `tau`, and matching orthonormal columns.
    pub fn from_factors(
        tau: f64,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
    ) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.ncols() {
            return Err(invalid("eigenvalue/eigenvector count mismatch"));
        }
        let keep = eigenvalues.iter().take_while(|&&l| l > 0.0).count();
        if keep == 0 {
            return Err(invalid("a spectrahedron point needs a positive eigenvalue"));
        }
        let point = Self {
            n: eigenvectors.nrows(),
            tau,
            eigenvalues: eigenvalues[..keep].to_vec(),
            eigenvectors: eigenvectors.columns(0, keep).into_owned(),
        };
        let trace: f64 = point.eigenvalues.iter().sum();
        if (trace - tau).abs() > 1e-8 * tau.max(1.0) {
            return Err(invalid(format!(
                "trace {trace} differs from tau {tau} beyond tolerance"
            )));
        }
        Ok(point)
    }

    /// `tau` times a rank-one projector `v v^T / ||v||^2`.
    pub fn rank_one(tau: f64, v: &DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(invalid("rank_one requires a nonzero finite vector"));
        }
        let unit = v / norm;
        let n = v.len();
        Ok(Self {
            n,
            tau,
            eigenvalues: vec![tau],
            eigenvectors: DMatrix::from_columns(&[unit]),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(i);
            out.ger(lam, &v, &v, 1.0);
        }
        out
    }

    /// `||X||_F`, evaluated on the factors.
    pub fn frobenius_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    /// `<X, G>` for dense symmetric `G`, without materializing `X`.
    pub fn inner_dense(&self, g: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(i);
            acc += lam * (g * v).dot(&v);
        }
        acc
    }

    /// `||X - Y||_F` between two factored points.
    ///
    /// Materializes the difference: the Gram-matrix shortcut cancels
    /// catastrophically near zero (a sqrt(eps) error floor), which is exactly
    /// where this is used as a test statistic.
    pub fn frobenius_distance(&self, other: &LowRankPsd) -> f64 {
        (self.to_dense() - other.to_dense()).norm()
    }

    /// Checks the stored factorization: positive ordered eigenvalues summing
    /// to `tau` and orthonormal columns. Used by tests and debug assertions.
    pub fn validate(&self) -> Result<()> {
        if self.eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("eigenvalues not non-increasing"));
        }
        if self.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(invalid("stored eigenvalue is not positive"));
        }
        let trace = self.trace();
        if (trace - self.tau).abs() > 1e-8 * self.tau.max(1.0) {
            return Err(invalid(format!("trace {} != tau {}", trace, self.tau)));
        }
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > 1e-8 {
                    return Err(invalid("eigenvectors not orthonormal"));
                }
            }
        }
        Ok(())
    }
}

/// What a truncated projection reports alongside the projected point.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub point: LowRankPsd,
    /// True when the certificate margin is non-negative, i.e. the truncated
    /// point equals the exact projection.
    pub certified: bool,
    /// True when the caller asked for certified output and the exact
    /// projection had to be recomputed.
    pub fallback_used: bool,
    /// `sum_{i<=r} lambda_i - tau - r * lambda_{r+1}`.
    pub certificate_margin: f64,
    /// True when the margin failed by less than `1e-10 * tau`; such runs sit
    /// on the boundary of certifiability and deserve attention.
    pub near_boundary: bool,
    /// True when the partial eigensolver did not converge and the dense
    /// solver supplied the spectrum.
    pub eig_dense_fallback: bool,
}

/// Exact Euclidean projection onto the trace-`tau` spectrahedron.
pub fn exact_project(a: &SymMatrix, tau: f64) -> Result<LowRankPsd> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    let spectrum = full_eigh(a)?;
    project_spectrum(&spectrum, tau)
}

fn project_spectrum(spectrum: &Spectrum, tau: f64) -> Result<LowRankPsd> {
    let shift = simplex_threshold(&spectrum.eigenvalues, tau)?;
    let clipped: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .map(|&l| (l - shift).max(0.0))
        .collect();
    LowRankPsd::from_factors(tau, clipped, spectrum.eigenvectors.clone())
}

/// Rank-`r` truncated projection with certificate.
///
/// Computes the top `r+1` eigenpairs of `a`, projects the retained `r`
/// eigenvalues onto the simplex of radius `tau` inside their own eigenbasis,
/// and evaluates the certificate from the extra pair. With
/// `fallback_on_failure` set, an uncertified result is replaced by
/// [`exact_project`] and flagged.
pub fn truncated_project(
    a: &SymMatrix,
    tau: f64,
    r: usize,
    seed: u64,
    fallback_on_failure: bool,
) -> Result<ProjectionOutcome> {
    truncated_project_warm(a, tau, r, seed, fallback_on_failure, None).map(|(out, _)| out)
}

/// [`truncated_project`] with a warm-start direction for the partial
/// eigensolve, used by the solver loop where consecutive inputs are close.
/// Also returns a start vector (a fixed-weight mix of the computed top
/// eigenvectors) for the next call.
pub(crate) fn truncated_project_warm(
    a: &SymMatrix,
    tau: f64,
    r: usize,
    seed: u64,
    fallback_on_failure: bool,
    warm: Option<&DVector<f64>>,
) -> Result<(ProjectionOutcome, DVector<f64>)> {
    let n = a.dim();
    if r == 0 || r >= n {
        return Err(invalid(format!("rank must satisfy 1 <= r < n, got r={r}, n={n}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    let top = crate::linalg::topk_eigh_warm(a, r + 1, seed, warm)?;
    let eigs = &top.spectrum.eigenvalues;
    let (certified, margin) = certify_rank(eigs, tau, r)?;
    let near_boundary = !certified && margin >= -NEAR_BOUNDARY_TOL * tau;
    let warm_next = mix_columns(&top.spectrum.eigenvectors);

    if !certified && fallback_on_failure {
        let point = exact_project(a, tau)?;
        let outcome = ProjectionOutcome {
            point,
            certified,
            fallback_used: true,
            certificate_margin: margin,
            near_boundary,
            eig_dense_fallback: top.dense_fallback,
        };
        return Ok((outcome, warm_next));
    }

    let clipped = crate::linalg::project_simplex(&eigs[..r], tau)?;
    let point = LowRankPsd::from_factors(
        tau,
        clipped,
        top.spectrum.eigenvectors.columns(0, r).into_owned(),
    )?;
    let outcome = ProjectionOutcome {
        point,
        certified,
        fallback_used: false,
        certificate_margin: margin,
        near_boundary,
        eig_dense_fallback: top.dense_fallback,
    };
    Ok((outcome, warm_next))
}

/// Fixed-weight mix `sum_i col_i / (i+1)` of orthonormal columns; a start
/// vector whose Krylov space regenerates the span in a few steps.
fn mix_columns(cols: &DMatrix<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(cols.nrows());
    for i in 0..cols.ncols() {
        v.axpy(1.0 / (i + 1) as f64, &cols.column(i).into_owned(), 1.0);
    }
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    v
}

/// Exact projection reported through the [`ProjectionOutcome`] interface,
/// with the rank-`r` certificate evaluated from the full spectrum as a
/// diagnostic. One eigendecomposition serves both.
pub fn full_project_with_margin(a: &SymMatrix, tau: f64, r: usize) -> Result<ProjectionOutcome> {
    let n = a.dim();
    if r == 0 || r >= n {
        return Err(invalid(format!("rank must satisfy 1 <= r < n, got r={r}, n={n}")));
    }
    let spectrum = full_eigh(a)?;
    let (certified, margin) = certify_rank(&spectrum.eigenvalues[..=r], tau, r)?;
    let point = project_spectrum(&spectrum, tau)?;
    let near_boundary = !certified && margin >= -NEAR_BOUNDARY_TOL * tau;
    Ok(ProjectionOutcome {
        point,
        certified,
        fallback_used: false,
        certificate_margin: margin,
        near_boundary,
        eig_dense_fallback: false,
    })
}

/// Certificate for rank-`r` truncation: passes exactly when
/// `sum_{i<=r} lambda_i - tau - r * lambda_{r+1} >= 0`, comparing with zero
/// slack. Expects the top `r+1` eigenvalues, non-increasing.
pub fn certify_rank(top_eigs: &[f64], tau: f64, r: usize) -> Result<(bool, f64)> {
    if top_eigs.len() != r + 1 {
        return Err(invalid(format!(
            "certificate needs exactly r+1 = {} eigenvalues, got {}",
            r + 1,
            top_eigs.len()
        )));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    let head: f64 = top_eigs[..r].iter().sum();
    let margin = head - tau - r as f64 * top_eigs[r];
    Ok((margin >= 0.0, margin))
}

/// Numerical rank of a factored point, counting eigenvalues above
/// `1e-9 * tau`.
pub fn low_rank_numerical_rank(point: &LowRankPsd) -> usize {
    let spectrum = Spectrum {
        eigenvalues: point.eigenvalues().to_vec(),
        eigenvectors: point.eigenvectors().clone(),
        residual_tol: 0.0,
    };
    numerical_rank(&spectrum, point.tau())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        SymMatrix::symmetrize(&raw).unwrap()
    }

    /// Threshold found by scanning every active-set size, independent of the
    /// sort-and-scan implementation.
    fn oracle_project(a: &SymMatrix, tau: f64) -> DMatrix<f64> {
        let s = full_eigh(a).unwrap();
        let vals = &s.eigenvalues;
        let n = vals.len();
        let mut shift = None;
        for size in 1..=n {
            let sum: f64 = vals[..size].iter().sum();
            let cand = (sum - tau) / size as f64;
            let active_ok = vals[size - 1] - cand > 0.0;
            let inactive_ok = size == n || vals[size] - cand <= 0.0;
            if active_ok && inactive_ok {
                shift = Some(cand);
                break;
            }
        }
        let shift = shift.expect("oracle found no active set");
        let clipped: Vec<f64> = vals.iter().map(|&l| (l - shift).max(0.0)).collect();
        let mut out = DMatrix::zeros(n, n);
        for (i, &c) in clipped.iter().enumerate() {
            let v = s.eigenvectors.column(i);
            out.ger(c, &v, &v, 1.0);
        }
        out
    }

    #[test]
    fn exact_project_diagonal() {
        let a = SymMatrix::from_diagonal(&[2.0, 0.0, 0.0]).unwrap();
        let p = exact_project(&a, 1.0).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0, 0.0]));
        assert!((p.to_dense() - expected).norm() < 1e-12);
    }

    #[test]
    fn exact_project_is_idempotent() {
        let a = random_sym(8, 5);
        let p1 = exact_project(&a, 1.0).unwrap();
        let p2 = exact_project(&SymMatrix::new(p1.to_dense()).unwrap(), 1.0).unwrap();
        assert!(p1.frobenius_distance(&p2) <= 1e-9);
    }

    #[test]
    fn exact_project_matches_active_set_oracle() {
        for seed in 0..20 {
            let a = random_sym(8, seed);
            let p = exact_project(&a, 1.0).unwrap();
            let oracle = oracle_project(&a, 1.0);
            assert!(
                (p.to_dense() - &oracle).norm() < 1e-9,
                "seed {seed}: projection disagrees with oracle"
            );
        }
    }

    #[test]
    fn exact_project_output_is_feasible() {
        for seed in 30..40 {
            let a = random_sym(10, seed);
            let tau = 2.5;
            let p = exact_project(&a, tau).unwrap();
            assert!((p.trace() - tau).abs() <= 1e-8 * tau);
            assert!(p.eigenvalues().iter().all(|&l| l >= -1e-10 * tau));
            p.validate().unwrap();
        }
    }

    #[test]
    fn truncated_certified_diagonal() {
        let a = SymMatrix::from_diagonal(&[2.0, 0.0, 0.0]).unwrap();
        let out = truncated_project(&a, 1.0, 1, 0, false).unwrap();
        assert!(out.certified);
        assert!((out.certificate_margin - 1.0).abs() < 1e-12);
        let expected = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0, 0.0]));
        assert!((out.point.to_dense() - expected).norm() < 1e-9);
    }

    #[test]
    fn truncated_uncertified_flat_spectrum() {
        // Two equal eigenvalues: the rank-1 truncation keeps one of them and
        // diverges from the exact projection, and the certificate says so.
        let a = SymMatrix::from_diagonal(&[1.0, 1.0]).unwrap();
        let out = truncated_project(&a, 1.0, 1, 0, false).unwrap();
        assert!(!out.certified);
        assert!((out.certificate_margin + 1.0).abs() < 1e-9);
        assert_eq!(low_rank_numerical_rank(&out.point), 1);
        let exact = exact_project(&a, 1.0).unwrap();
        assert!(out.point.frobenius_distance(&exact) > 0.4);
    }

    #[test]
    fn certify_rank_examples() {
        assert_eq!(certify_rank(&[2.0, 0.0], 1.0, 1).unwrap(), (true, 1.0));
        assert_eq!(certify_rank(&[1.0, 1.0], 1.0, 1).unwrap(), (false, -1.0));
        let (ok, margin) = certify_rank(&[0.6, 0.5, 0.1], 1.0, 2).unwrap();
        assert!(!ok);
        assert!((margin + 0.1).abs() < 1e-12);
        // The exact projection of that spectrum keeps all three eigenvalues.
        let a = SymMatrix::from_diagonal(&[0.6, 0.5, 0.1]).unwrap();
        let p = exact_project(&a, 1.0).unwrap();
        assert_eq!(p.rank(), 3);
    }

    #[test]
    fn certify_rank_rejects_wrong_count() {
        assert!(certify_rank(&[1.0, 0.5, 0.2], 1.0, 1).is_err());
    }

    #[test]
    fn certified_truncation_equals_exact_on_random_matrices() {
        let mut checked = 0;
        for seed in 0..200 {
            let a = random_sym(12, seed + 1000);
            let r = 1 + (seed as usize % 4);
            let out = truncated_project(&a, 1.0, r, seed, false).unwrap();
            if out.certified {
                let exact = exact_project(&a, 1.0).unwrap();
                let dist = out.point.frobenius_distance(&exact);
                assert!(dist <= 1e-8, "seed {seed}, r {r}: dist {dist}");
                checked += 1;
            }
        }
        assert!(checked > 20, "too few certified cases: {checked}");
    }

    #[test]
    fn fallback_recovers_exact_projection() {
        let a = SymMatrix::from_diagonal(&[1.0, 1.0]).unwrap();
        let out = truncated_project(&a, 1.0, 1, 0, true).unwrap();
        assert!(out.fallback_used);
        assert!(!out.certified);
        let exact = exact_project(&a, 1.0).unwrap();
        assert!(out.point.frobenius_distance(&exact) <= 1e-10);
    }

    #[test]
    fn truncated_rejects_bad_rank() {
        let a = random_sym(4, 3);
        assert!(truncated_project(&a, 1.0, 4, 0, false).is_err());
        assert!(truncated_project(&a, 1.0, 0, 0, false).is_err());
    }
}
