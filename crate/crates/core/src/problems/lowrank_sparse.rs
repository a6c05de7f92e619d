//! Simultaneously low-rank and sparse covariance recovery:
//! `min 0.5 ||X - M||_F^2 + lambda ||X||_1` over the trace-`tau`
//! spectrahedron, `tau = 0.7 tr(Z0 Z0^T)`.
//!
//! The warm start projects the top-r eigenvalues of the observation onto the
//! simplex of radius `tau` inside their own eigenbasis. (Projecting the
//! negated eigenvalues of this PSD-dominant observation would zero the warm
//! start, so the positive spectrum is used.)

use super::{
    sign_matrix, warm_start_seed, NoiseKind, ProblemInstance, ProblemSpec,
};
use crate::error::{invalid, Result};
use crate::linalg::{project_simplex, topk_eigh, SymMatrix};
use crate::solver::{DualDomain, DualPoint, Primal, SaddleProblem, SmoothnessConstants};
use crate::spectrahedron::{exact_project, LowRankPsd};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(super) struct LowRankSparseProblem {
    pub m: DMatrix<f64>,
    pub lambda: f64,
    pub tau: f64,
    pub n: usize,
}

impl SaddleProblem for LowRankSparseProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn trace_radius(&self) -> f64 {
        self.tau
    }

    fn dual_domain(&self) -> DualDomain {
        DualDomain::MatInfBall { n: self.n }
    }

    fn grad_x(&self, x: &Primal, y: &DualPoint) -> DMatrix<f64> {
        x.dense() - &self.m + y.as_matrix() * self.lambda
    }

    fn grad_y(&self, x: &Primal, _y: &DualPoint) -> DualPoint {
        DualPoint::Matrix(x.dense() * self.lambda)
    }

    fn smoothness(&self) -> SmoothnessConstants {
        SmoothnessConstants::new(1.0, 0.0, self.lambda, self.lambda)
    }

    fn value(&self, x: &DMatrix<f64>, y: &DualPoint) -> f64 {
        0.5 * (x - &self.m).norm_squared() + self.lambda * x.dot(y.as_matrix())
    }

    fn primal_objective(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * (x - &self.m).norm_squared()
            + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn dual_objective(&self, y: &DualPoint) -> f64 {
        // f(., y) is strongly convex; its minimizer over the spectrahedron is
        // the projection of M - lambda Y.
        let target = &self.m - y.as_matrix() * self.lambda;
        let sym = SymMatrix::symmetrize(&target).expect("finite target");
        let proj = exact_project(&sym, self.tau).expect("projection");
        self.value(&proj.to_dense(), y)
    }
}

/// Sparse factor with entries zero w.p. 0.9 and otherwise uniform on
/// `{1..10}`, normalized to unit Frobenius norm, resampled until it has full
/// column rank.
fn sparse_factor(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let z = DMatrix::from_fn(n, r, |_, _| {
            if rng.gen::<f64>() < 0.9 {
                0.0
            } else {
                rng.gen_range(1..=10) as f64
            }
        });
        let norm = z.norm();
        if norm == 0.0 {
            continue;
        }
        let z = z / norm;
        if z.clone().svd(false, false).singular_values[r - 1] > 1e-8 {
            return z;
        }
    }
}

pub(super) fn generate(
    spec: &ProblemSpec,
    r: usize,
    snr: f64,
    lambda: f64,
) -> Result<ProblemInstance> {
    let n = spec.n;
    if r == 0 || r >= n {
        return Err(invalid(format!("need 1 <= r < n, got r={r}, n={n}")));
    }
    if !(snr > 0.0) || !(lambda > 0.0) {
        return Err(invalid("snr and lambda must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let z0 = sparse_factor(n, r, &mut rng);
    let m0 = &z0 * z0.transpose();
    let tau = 0.7 * m0.trace();

    let raw = super::sparse_pca::sample_noise(n, NoiseKind::GaussianHalf, &mut rng);
    let sym_noise = &raw + raw.transpose();
    let c = 2.0 * m0.norm() / (snr * sym_noise.norm());
    let noise_term = &sym_noise * (c / 2.0);
    let m = &m0 + &noise_term;
    let measured_snr = m0.norm_squared() / noise_term.norm_squared();

    let m_sym = SymMatrix::symmetrize(&m)?;
    let top = topk_eigh(&m_sym, r, warm_start_seed(spec.seed))?;
    let weights = project_simplex(&top.eigenvalues, tau)?;
    let x1 = LowRankPsd::from_factors(tau, weights, top.eigenvectors.clone())?;
    let y1 = DualPoint::Matrix(sign_matrix(&x1.to_dense()));

    let problem = LowRankSparseProblem { m, lambda, tau, n };
    Ok(ProblemInstance {
        spec: spec.clone(),
        ground_truth: m0,
        rank: r,
        tau,
        target_snr: Some(snr),
        measured_snr,
        problem: Box::new(problem),
        warm_start: (x1, y1),
        default_eta: 1.0,
        default_iterations: 2000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemKind;

    fn spec(n: usize, r: usize, seed: u64) -> ProblemSpec {
        ProblemSpec::new(
            ProblemKind::LowRankSparse { r, snr: 2.4, lambda: 0.0012 },
            n,
            seed,
        )
    }

    #[test]
    fn warm_start_trace_equals_tau() {
        let inst = spec(40, 5, 3).generate().unwrap();
        let trace = inst.warm_start.0.trace();
        assert!((trace - inst.tau).abs() <= 1e-8 * inst.tau);
        inst.warm_start.0.validate().unwrap();
    }

    #[test]
    fn tau_is_seventy_percent_of_ground_truth_trace() {
        let inst = spec(30, 3, 9).generate().unwrap();
        assert!((inst.tau - 0.7 * inst.ground_truth.trace()).abs() < 1e-12);
    }

    #[test]
    fn rejects_rank_out_of_range() {
        assert!(spec(10, 10, 1).generate().is_err());
        assert!(spec(10, 0, 1).generate().is_err());
    }
}
