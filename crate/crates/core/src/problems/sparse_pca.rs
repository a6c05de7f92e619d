//! Sparse PCA: `min <X, -M> + lambda ||X||_1` over the unit-trace
//! spectrahedron, in saddle form against the entrywise infinity ball.
//!
//! The observation is `M = z z^T + (c/2)(N + N^T)` for a sparse unit spike
//! `z`, with `c = 2 / (snr * ||N + N^T||_F)` so the noise has Frobenius norm
//! exactly `1/snr`.

use super::{
    sign_matrix, sparse_spike_vector, warm_start_seed, NoiseKind,
    ProblemInstance, ProblemSpec,
};
use crate::error::{invalid, Result};
use crate::linalg::{full_eigh, topk_eigh, SymMatrix};
use crate::solver::{DualDomain, DualPoint, Primal, SaddleProblem, SmoothnessConstants};
use crate::spectrahedron::LowRankPsd;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub(super) struct SparsePcaProblem {
    pub neg_m: DMatrix<f64>,
    pub lambda: f64,
    pub n: usize,
}

impl SaddleProblem for SparsePcaProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn trace_radius(&self) -> f64 {
        1.0
    }

    fn dual_domain(&self) -> DualDomain {
        DualDomain::MatInfBall { n: self.n }
    }

    fn grad_x(&self, _x: &Primal, y: &DualPoint) -> DMatrix<f64> {
        &self.neg_m + y.as_matrix() * self.lambda
    }

    fn grad_y(&self, x: &Primal, _y: &DualPoint) -> DualPoint {
        DualPoint::Matrix(x.dense() * self.lambda)
    }

    fn smoothness(&self) -> SmoothnessConstants {
        SmoothnessConstants::new(0.0, 0.0, self.lambda, self.lambda)
    }

    fn value(&self, x: &DMatrix<f64>, y: &DualPoint) -> f64 {
        x.dot(&self.neg_m) + self.lambda * x.dot(y.as_matrix())
    }

    fn primal_objective(&self, x: &DMatrix<f64>) -> f64 {
        x.dot(&self.neg_m) + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn dual_objective(&self, y: &DualPoint) -> f64 {
        let c = SymMatrix::symmetrize(&(&self.neg_m + y.as_matrix() * self.lambda))
            .expect("gradient is finite");
        let spectrum = full_eigh(&c).expect("dense eigendecomposition");
        self.trace_radius() * spectrum.eigenvalues[self.n - 1]
    }
}

pub(super) fn sample_noise(
    n: usize,
    kind: NoiseKind,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    match kind {
        NoiseKind::Uniform01 => DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>()),
        NoiseKind::GaussianHalf => {
            let dist = Normal::new(0.5, 1.0).unwrap();
            DMatrix::from_fn(n, n, |_, _| dist.sample(rng))
        }
    }
}

pub(super) fn generate(
    spec: &ProblemSpec,
    snr: f64,
    noise: NoiseKind,
    lambda: f64,
) -> Result<ProblemInstance> {
    let n = spec.n;
    if !(snr > 0.0) {
        return Err(invalid(format!("snr must be positive, got {snr}")));
    }
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let z = sparse_spike_vector(n, &mut rng);
    let m0 = &z * z.transpose();

    let raw = sample_noise(n, noise, &mut rng);
    let sym_noise = &raw + raw.transpose();
    let c = 2.0 / (snr * sym_noise.norm());
    let noise_term = &sym_noise * (c / 2.0);
    let m = &m0 + &noise_term;
    let measured_snr = m0.norm_squared() / noise_term.norm_squared();

    let m_sym = SymMatrix::symmetrize(&m)?;
    let top = topk_eigh(&m_sym, 1, warm_start_seed(spec.seed))?;
    let u1 = top.eigenvectors.column(0).into_owned();
    let x1 = LowRankPsd::rank_one(1.0, &u1)?;
    let y1 = DualPoint::Matrix(sign_matrix(&x1.to_dense()));

    let problem = SparsePcaProblem { neg_m: -&m, lambda, n };
    Ok(ProblemInstance {
        spec: spec.clone(),
        ground_truth: m0,
        rank: 1,
        tau: 1.0,
        target_snr: Some(snr),
        measured_snr,
        problem: Box::new(problem),
        warm_start: (x1, y1),
        default_eta: 1.0 / (2.0 * lambda),
        default_iterations: 1000,
    })
}

/// The fixed sparse-PCA saddle from the rank-blow-up construction: spike
/// `z` on the first `k` coordinates, complementary spike on the rest,
/// penalty `1/(2k)`. Its exact saddle point is known in closed form, which
/// makes it the reference instance for fixed-point and dual-gap tests.
pub fn analytic_instance(n: usize, k: usize) -> Result<AnalyticSaddle> {
    if k == 0 || 4 * k > n {
        return Err(invalid(format!("need 1 <= k <= n/4, got k={k}, n={n}")));
    }
    let mut z = nalgebra::DVector::zeros(n);
    let mut z_perp = nalgebra::DVector::zeros(n);
    let zk = 1.0 / (k as f64).sqrt();
    let zp = 1.0 / ((n - k) as f64).sqrt();
    for i in 0..k {
        z[i] = zk;
    }
    for i in k..n {
        z_perp[i] = zp;
    }
    let m_hat = &z * z.transpose() + &z_perp * z_perp.transpose();
    let lambda = 1.0 / (2.0 * k as f64);
    let problem = SparsePcaProblem { neg_m: -&m_hat, lambda, n };

    let x_star = LowRankPsd::rank_one(1.0, &z)?;
    let y_star = &z * z.transpose() * k as f64
        + &z_perp * z_perp.transpose() * (2.0 * k as f64);
    Ok(AnalyticSaddle {
        problem,
        x_star,
        y_star: DualPoint::Matrix(y_star),
        z,
        z_perp,
        m_hat,
        lambda,
    })
}

/// A problem together with its exact saddle point.
pub struct AnalyticSaddle {
    pub(super) problem: SparsePcaProblem,
    pub x_star: LowRankPsd,
    pub y_star: DualPoint,
    pub z: nalgebra::DVector<f64>,
    pub z_perp: nalgebra::DVector<f64>,
    pub m_hat: DMatrix<f64>,
    pub lambda: f64,
}

impl AnalyticSaddle {
    pub fn problem(&self) -> &dyn SaddleProblem {
        &self.problem
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemKind;

    fn spec(n: usize, snr: f64, noise: NoiseKind, lambda: f64, seed: u64) -> ProblemSpec {
        ProblemSpec::new(ProblemKind::SparsePca { snr, noise, lambda }, n, seed)
    }

    #[test]
    fn noise_norm_matches_snr_dial() {
        for (snr, seed) in [(1.0, 3u64), (0.05, 4)] {
            let inst = spec(40, snr, NoiseKind::Uniform01, 0.01, seed).generate().unwrap();
            // ||(c/2)(N + N^T)||_F = 1/snr by construction.
            let noise = inst.problem.grad_x(
                &Primal::new(inst.warm_start.0.clone()),
                &DualPoint::Matrix(DMatrix::zeros(40, 40)),
            );
            // grad_x at y=0 is -M; reconstruct the noise norm from M - M0.
            let m = -noise;
            let noise_norm = (&m - &inst.ground_truth).norm();
            assert!(
                (noise_norm - 1.0 / snr).abs() <= 1e-10 * (1.0 / snr),
                "snr {snr}: noise norm {noise_norm}"
            );
            assert!((inst.measured_snr - snr * snr).abs() <= 1e-8 * snr * snr);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let s = spec(30, 1.0, NoiseKind::GaussianHalf, 0.02, 11);
        let a = s.generate().unwrap();
        let b = s.generate().unwrap();
        assert_eq!(a.ground_truth, b.ground_truth);
        assert_eq!(
            a.warm_start.0.eigenvectors(),
            b.warm_start.0.eigenvectors()
        );
    }

    #[test]
    fn warm_start_is_feasible() {
        let inst = spec(25, 0.5, NoiseKind::Uniform01, 0.05, 5).generate().unwrap();
        inst.warm_start.0.validate().unwrap();
        assert!(inst.problem.dual_domain().contains(&inst.warm_start.1, 1e-10));
    }

    #[test]
    fn zero_noise_limit_recovers_spike() {
        // With snr -> infinity the top eigenvector of M is z itself, so the
        // warm start already solves the unpenalized problem.
        let inst = spec(30, 1e9, NoiseKind::Uniform01, 1e-9, 13).generate().unwrap();
        let err = super::super::relative_recovery_error(
            &inst.ground_truth,
            inst.tau,
            &inst.warm_start.0,
        );
        assert!(err <= 1e-6, "init error {err}");
    }
}
