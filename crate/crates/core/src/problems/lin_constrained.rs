//! Linearly constrained low-rank estimation:
//! `min <X, -M> + lambda ||A(X) - b||_2` over the unit-trace spectrahedron,
//! with `A_i = v_i v_i^T` for Gaussian `v_i` and `b` consistent with the
//! rank-one ground truth.

use super::{standard_normal_matrix, warm_start_seed, ProblemInstance, ProblemSpec};
use crate::error::{invalid, Result};
use crate::linalg::{full_eigh, topk_eigh, SymMatrix};
use crate::solver::{DualDomain, DualPoint, Primal, SaddleProblem, SmoothnessConstants};
use crate::spectrahedron::LowRankPsd;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Noise scale `c = 0.36 / sqrt(n)`, matching the reported signal-to-noise
/// levels of the reference experiments at every dimension.
fn noise_scale(n: usize) -> f64 {
    0.36 / (n as f64).sqrt()
}

pub(super) struct LinConstrainedProblem {
    pub neg_m: DMatrix<f64>,
    /// Constraint directions, one column per constraint.
    pub v: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lambda: f64,
    pub op_norm: f64,
    pub n: usize,
    pub m_count: usize,
}

impl LinConstrainedProblem {
    /// `A(X)_i = v_i^T X v_i` from the factored form of `X`.
    fn apply_factored(&self, x: &LowRankPsd) -> DVector<f64> {
        let cross = self.v.transpose() * x.eigenvectors(); // m x k
        let mut out = DVector::zeros(self.m_count);
        for i in 0..self.m_count {
            let mut acc = 0.0;
            for (j, &lam) in x.eigenvalues().iter().enumerate() {
                acc += lam * cross[(i, j)] * cross[(i, j)];
            }
            out[i] = acc;
        }
        out
    }

    fn apply_dense(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let xv = x * &self.v;
        DVector::from_fn(self.m_count, |i, _| self.v.column(i).dot(&xv.column(i)))
    }

    /// `A^*(y) = sum_i y_i v_i v_i^T`.
    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let scaled = {
            let mut s = self.v.clone();
            for i in 0..self.m_count {
                let mut col = s.column_mut(i);
                col *= y[i];
            }
            s
        };
        &scaled * self.v.transpose()
    }
}

impl SaddleProblem for LinConstrainedProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn trace_radius(&self) -> f64 {
        1.0
    }

    fn dual_domain(&self) -> DualDomain {
        DualDomain::VecL2Ball { m: self.m_count }
    }

    fn grad_x(&self, _x: &Primal, y: &DualPoint) -> DMatrix<f64> {
        &self.neg_m + self.adjoint(y.as_vector()) * self.lambda
    }

    fn grad_y(&self, x: &Primal, _y: &DualPoint) -> DualPoint {
        DualPoint::Vector((self.apply_factored(x.factored()) - &self.b) * self.lambda)
    }

    fn smoothness(&self) -> SmoothnessConstants {
        let c = self.lambda * self.op_norm;
        SmoothnessConstants::new(0.0, 0.0, c, c)
    }

    fn value(&self, x: &DMatrix<f64>, y: &DualPoint) -> f64 {
        x.dot(&self.neg_m)
            + self.lambda * (self.apply_dense(x) - &self.b).dot(y.as_vector())
    }

    fn primal_objective(&self, x: &DMatrix<f64>) -> f64 {
        x.dot(&self.neg_m) + self.lambda * (self.apply_dense(x) - &self.b).norm()
    }

    fn dual_objective(&self, y: &DualPoint) -> f64 {
        let g = &self.neg_m + self.adjoint(y.as_vector()) * self.lambda;
        let sym = SymMatrix::symmetrize(&g).expect("finite gradient");
        let spectrum = full_eigh(&sym).expect("dense eigendecomposition");
        let lambda_min = spectrum.eigenvalues[self.n - 1];
        self.trace_radius() * lambda_min - self.lambda * self.b.dot(y.as_vector())
    }
}

/// Operator norm of `A` estimated by seeded power iteration on `A A^*`.
fn estimate_op_norm(v: &DMatrix<f64>, m_count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = standard_normal_matrix(m_count, 1, &mut rng).column(0).into_owned();
    w /= w.norm();
    let cross = v.transpose() * v; // m x m, (i,j) = <v_i, v_j>
    let mut value = 0.0;
    for _ in 0..100 {
        // A A^* y: X = sum y_i v_i v_i^T, then (A X)_i = v_i^T X v_i.
        let mut next = DVector::zeros(m_count);
        for i in 0..m_count {
            let mut acc = 0.0;
            for j in 0..m_count {
                acc += w[j] * cross[(i, j)] * cross[(i, j)];
            }
            next[i] = acc;
        }
        let norm = next.norm();
        if norm == 0.0 {
            return 0.0;
        }
        value = norm;
        w = next / norm;
    }
    value.sqrt()
}

pub(super) fn generate(spec: &ProblemSpec, m_count: usize, lambda: f64) -> Result<ProblemInstance> {
    let n = spec.n;
    if m_count == 0 {
        return Err(invalid("need at least one constraint"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut z0 = standard_normal_matrix(n, 1, &mut rng).column(0).into_owned();
    z0 /= z0.norm();
    let m0 = &z0 * z0.transpose();

    let raw = standard_normal_matrix(n, n, &mut rng);
    let sym_noise = &raw + raw.transpose();
    let noise_term = &sym_noise * (noise_scale(n) / 2.0);
    let m = &m0 + &noise_term;
    let measured_snr = m0.norm_squared() / noise_term.norm_squared();

    let v = standard_normal_matrix(n, m_count, &mut rng);
    let b = {
        let vz = v.transpose() * &z0;
        DVector::from_fn(m_count, |i, _| vz[i] * vz[i])
    };
    let op_norm = estimate_op_norm(&v, m_count, warm_start_seed(spec.seed) ^ 0x51);

    let m_sym = SymMatrix::symmetrize(&m)?;
    let top = topk_eigh(&m_sym, 1, warm_start_seed(spec.seed))?;
    let u1 = top.eigenvectors.column(0).into_owned();
    let x1 = LowRankPsd::rank_one(1.0, &u1)?;

    let problem = LinConstrainedProblem {
        neg_m: -&m,
        v,
        b,
        lambda,
        op_norm,
        n,
        m_count,
    };
    let residual = problem.apply_factored(&x1) - &problem.b;
    let res_norm = residual.norm();
    let y1 = if res_norm > 0.0 {
        DualPoint::Vector(residual / res_norm)
    } else {
        DualPoint::Vector(DVector::zeros(m_count))
    };

    Ok(ProblemInstance {
        spec: spec.clone(),
        ground_truth: m0,
        rank: 1,
        tau: 1.0,
        target_snr: None,
        measured_snr,
        problem: Box::new(problem),
        warm_start: (x1, y1),
        default_eta: 1.0 / (2.0 * lambda),
        default_iterations: 2000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemKind;
    use rand::Rng;

    fn spec(n: usize, seed: u64) -> ProblemSpec {
        ProblemSpec::new(ProblemKind::LinConstrained { m: None, lambda: 2.0 }, n, seed)
    }

    #[test]
    fn b_is_consistent_with_ground_truth() {
        let inst = spec(30, 4).generate().unwrap();
        // The ground truth z0 z0^T satisfies the constraints exactly:
        // recover A(M0) - b through grad_y at a rank-one point equal to M0.
        let m0 = &inst.ground_truth;
        let top = full_eigh(&SymMatrix::symmetrize(m0).unwrap()).unwrap();
        let z0 = top.eigenvectors.column(0).into_owned() * top.eigenvalues[0].sqrt();
        let x = Primal::new(LowRankPsd::rank_one(1.0, &z0).unwrap());
        let gy = inst.problem.grad_y(&x, &inst.warm_start.1);
        assert!(gy.as_vector().norm() <= 1e-9, "residual {}", gy.as_vector().norm());
    }

    fn raw_problem(n: usize, m: usize, seed: u64) -> LinConstrainedProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = standard_normal_matrix(n, m, &mut rng);
        let op_norm = estimate_op_norm(&v, m, seed ^ 0x51);
        LinConstrainedProblem {
            neg_m: DMatrix::zeros(n, n),
            v,
            b: DVector::zeros(m),
            lambda: 1.0,
            op_norm,
            n,
            m_count: m,
        }
    }

    #[test]
    fn adjoint_identity_holds() {
        let problem = raw_problem(12, 7, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let y = DVector::from_fn(7, |_, _| rng.gen::<f64>() - 0.5);
            let raw = standard_normal_matrix(12, 12, &mut rng);
            let x = (&raw + raw.transpose()) * 0.5;
            // <A(X), y> = <X, A*(y)>.
            let lhs = problem.apply_dense(&x).dot(&y);
            let rhs = x.dot(&problem.adjoint(&y));
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn factored_and_dense_application_agree() {
        let problem = raw_problem(15, 6, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = standard_normal_matrix(15, 2, &mut rng);
        let q = raw.qr().q();
        let x =
            LowRankPsd::from_factors(1.0, vec![0.7, 0.3], q.columns(0, 2).into_owned()).unwrap();
        let a_fac = problem.apply_factored(&x);
        let a_dense = problem.apply_dense(&x.to_dense());
        assert!((a_fac - a_dense).norm() <= 1e-12);
    }

    #[test]
    fn op_norm_estimate_upper_bounds_random_actions() {
        let problem = raw_problem(10, 10, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let raw = standard_normal_matrix(10, 10, &mut rng);
            let x = (&raw + raw.transpose()) * 0.5;
            let ratio = problem.apply_dense(&x).norm() / x.norm();
            assert!(ratio <= problem.op_norm * (1.0 + 1e-6), "ratio {ratio}");
        }
    }
}
