//! Projected subgradient steps for the sparse-PCA objective, and the scripted
//! construction showing that one such step from arbitrarily close to a
//! strictly complementary rank-one optimum already produces a rank-2 iterate.
//!
//! The construction: spike `z` uniform on its first `k` coordinates,
//! complementary spike on the rest, objective
//! `-<z z^T + z_perp z_perp^T, X> + ||X||_1 / (2k)`. Its optimum is `z z^T`,
//! yet for any start `v v^T` aligned with it and any step `eta < 2/3` the
//! projected subgradient step keeps at least two positive eigenvalues. This
//! is the rank blow-up that motivates running the saddle-point method with
//! certified truncated projections instead.

use crate::error::{invalid, Result};
use crate::linalg::{full_eigh, numerical_rank, SymMatrix};
use crate::problems::sign_matrix;
use crate::spectrahedron::{exact_project, LowRankPsd};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// How the start vector `v` relates to the spike `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartVector {
    /// `v = z` exactly.
    ExactSpike,
    /// `z` plus Gaussian noise on its support, renormalized, resampled until
    /// the alignment bound `<z, v>^2 >= 1 - 1/(2k^2)` holds.
    Perturbed,
}

/// The fixed data of one rank-blow-up experiment.
#[derive(Debug, Clone)]
pub struct CounterexampleInstance {
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    pub z: DVector<f64>,
    pub z_perp: DVector<f64>,
    pub v: DVector<f64>,
}

impl CounterexampleInstance {
    pub fn new(n: usize, k: usize, eta: f64, start: StartVector, seed: u64) -> Result<Self> {
        if k == 0 || 4 * k > n {
            return Err(invalid(format!("need 1 <= k <= n/4, got k={k}, n={n}")));
        }
        if !(eta > 0.0 && eta < 2.0 / 3.0) {
            return Err(invalid(format!("step size must satisfy 0 < eta < 2/3, got {eta}")));
        }
        let mut z = DVector::zeros(n);
        let mut z_perp = DVector::zeros(n);
        let zk = 1.0 / (k as f64).sqrt();
        let zp = 1.0 / ((n - k) as f64).sqrt();
        for i in 0..k {
            z[i] = zk;
        }
        for i in k..n {
            z_perp[i] = zp;
        }

        let v = match start {
            StartVector::ExactSpike => z.clone(),
            StartVector::Perturbed => sample_aligned(&z, k, seed),
        };
        Ok(Self { n, k, eta, z, z_perp, v })
    }

    /// `1/(2k)`, the l1 penalty weight of the construction.
    pub fn lambda(&self) -> f64 {
        1.0 / (2.0 * self.k as f64)
    }

    /// `z z^T + z_perp z_perp^T`, the signal matrix.
    pub fn signal(&self) -> DMatrix<f64> {
        &self.z * self.z.transpose() + &self.z_perp * self.z_perp.transpose()
    }
}

/// Perturbations of `z` restricted to its support, rejected until the
/// alignment bound holds.
fn sample_aligned(z: &DVector<f64>, k: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 - 1.0 / (2.0 * (k * k) as f64);
    loop {
        let mut v = z.clone();
        for i in 0..k {
            let noise: f64 = StandardNormal.sample(&mut rng);
            v[i] += 0.2 / (k as f64).sqrt() * noise;
        }
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        v /= norm;
        if z.dot(&v).powi(2) >= bound {
            return v;
        }
    }
}

/// One projected subgradient step for
/// `min <X, -M> + lambda ||X||_1` over the unit-trace spectrahedron, using
/// the sign subgradient with `sign(0) = 0`:
/// `proj(X - eta (-M + lambda sign(X)))`.
pub fn subgradient_step_sparse_pca(
    m_hat: &SymMatrix,
    lambda: f64,
    x: &LowRankPsd,
    eta: f64,
) -> Result<LowRankPsd> {
    if !(eta >= 0.0) {
        return Err(invalid("step size must be non-negative"));
    }
    let x_dense = x.to_dense();
    let grad = -m_hat.as_matrix() + sign_matrix(&x_dense) * lambda;
    let stepped = SymMatrix::symmetrize(&(x_dense - grad * eta))?;
    exact_project(&stepped, 1.0)
}

/// Result of one rank-blow-up experiment.
#[derive(Debug, Clone)]
pub struct RankBlowUp {
    pub rank: usize,
    /// Positive eigenvalues of the projected step.
    pub eigenvalues: Vec<f64>,
    pub instance: CounterexampleInstance,
}

/// Takes one subgradient step from `v v^T` and reports the numerical rank of
/// the projection. The statement being demonstrated: the rank is always at
/// least 2, even though the optimum is rank one and strictly complementary.
pub fn lemma_rank_blow_up(
    n: usize,
    k: usize,
    eta: f64,
    start: StartVector,
    seed: u64,
) -> Result<RankBlowUp> {
    let instance = CounterexampleInstance::new(n, k, eta, start, seed)?;
    let m_hat = SymMatrix::new(instance.signal())?;
    let x0 = LowRankPsd::rank_one(1.0, &instance.v)?;
    let next = subgradient_step_sparse_pca(&m_hat, instance.lambda(), &x0, eta)?;

    let spectrum = full_eigh(&SymMatrix::new(next.to_dense())?)?;
    let rank = numerical_rank(&spectrum, 1.0);
    Ok(RankBlowUp {
        rank,
        eigenvalues: next.eigenvalues().to_vec(),
        instance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn optimum_is_fixed_point_of_certifying_subgradient() {
        // Stepping from z z^T with the optimality-certifying subgradient
        // -z z^T / 2 returns z z^T itself.
        let inst = CounterexampleInstance::new(8, 2, 0.5, StartVector::ExactSpike, 0).unwrap();
        let x_star = LowRankPsd::rank_one(1.0, &inst.z).unwrap();
        let g_star = -(&inst.z * inst.z.transpose()) * 0.5;
        let stepped =
            SymMatrix::symmetrize(&(x_star.to_dense() - g_star * inst.eta)).unwrap();
        let next = exact_project(&stepped, 1.0).unwrap();
        assert!(next.frobenius_distance(&x_star) <= 1e-10);
        assert_eq!(next.rank(), 1);
    }

    #[test]
    fn zero_step_returns_input() {
        let inst = CounterexampleInstance::new(12, 3, 0.1, StartVector::ExactSpike, 0).unwrap();
        let m_hat = SymMatrix::new(inst.signal()).unwrap();
        let x = LowRankPsd::rank_one(1.0, &inst.v).unwrap();
        let next = subgradient_step_sparse_pca(&m_hat, inst.lambda(), &x, 0.0).unwrap();
        assert!(next.frobenius_distance(&x) <= 1e-10);
    }

    #[test]
    fn step_matches_literal_projection_formula() {
        // Independent transcription: eigendecompose the stepped matrix, find
        // the shift by bisection on the trace equation, clip.
        let inst = CounterexampleInstance::new(10, 2, 0.3, StartVector::Perturbed, 5).unwrap();
        let m_hat = SymMatrix::new(inst.signal()).unwrap();
        let x = LowRankPsd::rank_one(1.0, &inst.v).unwrap();
        let next = subgradient_step_sparse_pca(&m_hat, inst.lambda(), &x, inst.eta).unwrap();

        let x_dense = x.to_dense();
        let grad = -m_hat.as_matrix() + sign_matrix(&x_dense) * inst.lambda();
        let stepped = SymMatrix::symmetrize(&(x_dense - grad * inst.eta)).unwrap();
        let spectrum = full_eigh(&stepped).unwrap();
        let trace_at = |t: f64| -> f64 {
            spectrum.eigenvalues.iter().map(|&l| (l - t).max(0.0)).sum()
        };
        let (mut lo, mut hi) = (-10.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if trace_at(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let shift = 0.5 * (lo + hi);
        let mut oracle = DMatrix::zeros(10, 10);
        for (i, &l) in spectrum.eigenvalues.iter().enumerate() {
            let w = (l - shift).max(0.0);
            let col = spectrum.eigenvectors.column(i);
            oracle.ger(w, &col, &col, 1.0);
        }
        assert!((next.to_dense() - oracle).norm() <= 1e-9);
    }

    #[test]
    fn rank_blows_up_from_exact_spike() {
        let out = lemma_rank_blow_up(8, 2, 0.5, StartVector::ExactSpike, 0).unwrap();
        assert_eq!(out.rank, 2);
        // Closed form for v = z: eigenvalues (1 - eta/4, eta/4).
        assert!((out.eigenvalues[0] - 0.875).abs() < 1e-10);
        assert!((out.eigenvalues[1] - 0.125).abs() < 1e-10);
    }

    #[test]
    fn rank_blows_up_at_large_scale() {
        let out = lemma_rank_blow_up(64, 16, 0.6, StartVector::ExactSpike, 0).unwrap();
        assert!(out.rank >= 2, "rank {}", out.rank);
    }

    #[test]
    fn sign_of_aligned_outer_product_is_block_of_ones() {
        // Under the alignment bound every entry of v v^T on the support is
        // non-negative, so sign(v v^T) = k z z^T entrywise.
        for seed in 0..5 {
            let inst =
                CounterexampleInstance::new(16, 4, 0.5, StartVector::Perturbed, seed).unwrap();
            let vv = &inst.v * inst.v.transpose();
            let signs = sign_matrix(&vv);
            let expected = (&inst.z * inst.z.transpose()) * inst.k as f64;
            for i in 0..16 {
                for j in 0..16 {
                    assert_eq!(
                        signs[(i, j)],
                        expected[(i, j)].round(),
                        "entry ({i},{j}) seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn optimum_first_order_condition_sampled() {
        // <X - z z^T, -z z^T / 2> >= 0 over random spectrahedron points.
        let inst = CounterexampleInstance::new(12, 3, 0.5, StartVector::ExactSpike, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g_star = -(&inst.z * inst.z.transpose()) * 0.5;
        let x_star = &inst.z * inst.z.transpose();
        for _ in 0..1000 {
            let w = DMatrix::from_fn(12, 4, |_, _| rng.gen::<f64>() - 0.5);
            let gram = &w * w.transpose();
            let x = &gram / gram.trace();
            let inner = (x - &x_star).dot(&g_star);
            assert!(inner >= -1e-10, "first-order optimality violated: {inner}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(CounterexampleInstance::new(8, 3, 0.5, StartVector::ExactSpike, 0).is_err());
        assert!(CounterexampleInstance::new(8, 2, 0.9, StartVector::ExactSpike, 0).is_err());
        assert!(CounterexampleInstance::new(8, 0, 0.5, StartVector::ExactSpike, 0).is_err());
    }
}
