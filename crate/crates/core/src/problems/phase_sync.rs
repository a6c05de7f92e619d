//! Phase synchronization: a penalized SDP relaxation
//! `min <X, -M> + lambda ||diag(X) - 1||_2` over Hermitian `X` with
//! `tr(X) = n`, solved through the real embedding
//! `H -> [[Re H, -Im H], [Im H, Re H]]`.
//!
//! The embedding doubles every eigenvalue, turns trace `n` into `2n`, and
//! commutes with the spectrahedron projection, so all real-symmetric kernels
//! apply unchanged; the rank-one complex ground truth becomes rank two. The
//! embedded objective is scaled to equal the complex one exactly
//! (`<E(A), E(B)> = 2 <A, B>`), so reported residuals and errors match the
//! complex formulation.

use super::{ProblemInstance, ProblemSpec};
use crate::error::{invalid, Result};
use crate::linalg::{full_eigh, topk_eigh, SymMatrix};
use crate::solver::{DualDomain, DualPoint, Primal, SaddleProblem, SmoothnessConstants};
use crate::spectrahedron::LowRankPsd;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU as TWO_PI;

/// `[[re, -im], [im, re]]`; symmetric whenever `re` is symmetric and `im`
/// antisymmetric, i.e. whenever `re + i im` is Hermitian.
pub fn complex_embed(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(re);
    out.view_mut((n, n), (n, n)).copy_from(re);
    out.view_mut((0, n), (n, n)).copy_from(&(-im));
    out.view_mut((n, 0), (n, n)).copy_from(im);
    out
}

/// How far a `2n x 2n` matrix is from the embedding structure:
/// `max(||P11 - P22||_F, ||P12 + P21||_F)`.
pub fn embedding_residual(p: &DMatrix<f64>) -> f64 {
    let n2 = p.nrows();
    assert!(n2 % 2 == 0, "embedded matrices have even dimension");
    let n = n2 / 2;
    let d_re = p.view((0, 0), (n, n)) - p.view((n, n), (n, n));
    let d_im = p.view((0, n), (n, n)) + p.view((n, 0), (n, n));
    d_re.norm().max(d_im.norm())
}

pub(super) struct PhaseSyncProblem {
    /// Embedded observation, `2n x 2n`.
    pub m_embedded: DMatrix<f64>,
    pub lambda: f64,
    /// Complex dimension `n`; the ambient dimension is `2n`.
    pub n_complex: usize,
}

impl PhaseSyncProblem {
    /// The complex diagonal of an embedded matrix:
    /// `a_i(X) = (X_ii + X_{n+i,n+i}) / 2`.
    fn complex_diag(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let n = self.n_complex;
        DVector::from_fn(n, |i, _| 0.5 * (x[(i, i)] + x[(n + i, n + i)]))
    }

    /// Adjoint of `complex_diag`: `(1/2) Diag(y (+) y)`.
    fn diag_adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n_complex;
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            out[(i, i)] = 0.5 * y[i];
            out[(n + i, n + i)] = 0.5 * y[i];
        }
        out
    }

    fn diag_residual(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.complex_diag(x).map(|v| v - 1.0)
    }
}

impl SaddleProblem for PhaseSyncProblem {
    fn dim(&self) -> usize {
        2 * self.n_complex
    }

    fn trace_radius(&self) -> f64 {
        2.0 * self.n_complex as f64
    }

    fn dual_domain(&self) -> DualDomain {
        DualDomain::VecL2Ball { m: self.n_complex }
    }

    fn grad_x(&self, _x: &Primal, y: &DualPoint) -> DMatrix<f64> {
        let mut g = self.diag_adjoint(y.as_vector()) * self.lambda;
        g -= &self.m_embedded * 0.5;
        g
    }

    fn grad_y(&self, x: &Primal, _y: &DualPoint) -> DualPoint {
        DualPoint::Vector(self.diag_residual(x.dense()) * self.lambda)
    }

    fn smoothness(&self) -> SmoothnessConstants {
        // The diagonal-extraction map is treated as having unit operator
        // norm, a conservative bound.
        SmoothnessConstants::new(0.0, 0.0, self.lambda, self.lambda)
    }

    fn value(&self, x: &DMatrix<f64>, y: &DualPoint) -> f64 {
        -0.5 * x.dot(&self.m_embedded)
            + self.lambda * self.diag_residual(x).dot(y.as_vector())
    }

    fn primal_objective(&self, x: &DMatrix<f64>) -> f64 {
        -0.5 * x.dot(&self.m_embedded) + self.lambda * self.diag_residual(x).norm()
    }

    fn dual_objective(&self, y: &DualPoint) -> f64 {
        let g = self.diag_adjoint(y.as_vector()) * self.lambda - &self.m_embedded * 0.5;
        let sym = SymMatrix::symmetrize(&g).expect("finite gradient");
        let spectrum = full_eigh(&sym).expect("dense eigendecomposition");
        let lambda_min = spectrum.eigenvalues[spectrum.eigenvalues.len() - 1];
        self.trace_radius() * lambda_min - self.lambda * y.as_vector().sum()
    }
}

/// Table of `(n, lambda, eta)` defaults.
const DEFAULTS: [(usize, f64, f64); 4] = [
    (100, 200.0, 1.0 / 400.0),
    (200, 600.0, 1.0 / 800.0),
    (400, 1600.0, 1.0 / 1800.0),
    (600, 2800.0, 1.0 / 1800.0),
];

fn keyed_defaults(n: usize) -> Option<(f64, f64)> {
    DEFAULTS
        .iter()
        .find(|(dn, _, _)| *dn == n)
        .map(|(_, l, e)| (*l, *e))
}

pub(super) fn generate(
    spec: &ProblemSpec,
    lambda: Option<f64>,
    eta: Option<f64>,
) -> Result<ProblemInstance> {
    let n = spec.n;
    let keyed = keyed_defaults(n);
    let lambda = match (lambda, keyed) {
        (Some(l), _) => l,
        (None, Some((l, _))) => l,
        (None, None) => {
            return Err(invalid(format!(
                "no default lambda for n={n}; pass one explicitly"
            )))
        }
    };
    let eta = match (eta, keyed) {
        (Some(e), _) => e,
        (None, Some((_, e))) => e,
        (None, None) => {
            return Err(invalid(format!("no default eta for n={n}; pass one explicitly")))
        }
    };
    if !(lambda > 0.0) || !(eta > 0.0) {
        return Err(invalid("lambda and eta must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Unit-modulus ground truth z0 and its rank-one Gram matrix.
    let theta: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * TWO_PI).collect();
    let mut sig_re = DMatrix::zeros(n, n);
    let mut sig_im = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            sig_re[(j, k)] = (theta[j] - theta[k]).cos();
            sig_im[(j, k)] = (theta[j] - theta[k]).sin();
        }
    }

    // Hermitian noise: independent complex normals above the diagonal.
    let c = 0.18 * (n as f64).sqrt();
    let mut noise_re = DMatrix::zeros(n, n);
    let mut noise_im = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            noise_re[(j, k)] = re;
            noise_re[(k, j)] = re;
            noise_im[(j, k)] = im;
            noise_im[(k, j)] = -im;
        }
    }

    let m0 = complex_embed(&sig_re, &sig_im);
    let noise = complex_embed(&noise_re, &noise_im) * c;
    let m_embedded = &m0 + &noise;
    let measured_snr = m0.norm_squared() / noise.norm_squared();

    // Warm start: n times the top complex eigenprojector, i.e. the top two
    // embedded eigenpairs each carrying weight n.
    let tau = 2.0 * n as f64;
    let m_sym = SymMatrix::symmetrize(&m_embedded)?;
    let top = topk_eigh(&m_sym, 2, super::warm_start_seed(spec.seed))?;
    let x1 = LowRankPsd::from_factors(
        tau,
        vec![n as f64, n as f64],
        top.eigenvectors.clone(),
    )?;

    let problem = PhaseSyncProblem { m_embedded, lambda, n_complex: n };
    let residual = problem.diag_residual(&x1.to_dense());
    let res_norm = residual.norm();
    let y1 = if res_norm > 0.0 {
        DualPoint::Vector(residual / res_norm)
    } else {
        DualPoint::Vector(DVector::zeros(n))
    };

    Ok(ProblemInstance {
        spec: spec.clone(),
        ground_truth: m0,
        rank: 2,
        tau,
        target_snr: None,
        measured_snr,
        problem: Box::new(problem),
        warm_start: (x1, y1),
        default_eta: eta,
        default_iterations: 10_000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemKind;
    use crate::spectrahedron::exact_project;

    fn spec(n: usize, seed: u64) -> ProblemSpec {
        ProblemSpec::new(ProblemKind::PhaseSync { lambda: Some(50.0), eta: Some(1e-3) }, n, seed)
    }

    #[test]
    fn embedded_spectrum_pairs_up() {
        let inst = spec(12, 3).generate().unwrap();
        let x = Primal::new(inst.warm_start.0.clone());
        let g = inst.problem.grad_x(&x, &inst.warm_start.1);
        let spectrum = full_eigh(&SymMatrix::symmetrize(&g).unwrap()).unwrap();
        let vals = &spectrum.eigenvalues;
        for pair in vals.chunks(2) {
            assert!((pair[0] - pair[1]).abs() <= 1e-8 * vals[0].abs().max(1.0));
        }
    }

    #[test]
    fn projection_commutes_with_embedding() {
        // Projection of an embedded Hermitian matrix stays an embedding.
        let inst = spec(10, 5).generate().unwrap();
        let x = Primal::new(inst.warm_start.0.clone());
        let g = inst.problem.grad_x(&x, &inst.warm_start.1);
        let proj = exact_project(&SymMatrix::symmetrize(&g.map(|v| -v)).unwrap(), 1.0).unwrap();
        let res = embedding_residual(&proj.to_dense());
        assert!(res <= 1e-8, "embedding residual {res}");
    }

    #[test]
    fn zero_noise_warm_start_is_exact() {
        // Without noise the top eigenvector aligns with the embedded z0 and
        // the warm start equals the ground truth.
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * TWO_PI).collect();
        let mut sig_re = DMatrix::zeros(n, n);
        let mut sig_im = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                sig_re[(j, k)] = (theta[j] - theta[k]).cos();
                sig_im[(j, k)] = (theta[j] - theta[k]).sin();
            }
        }
        let m0 = complex_embed(&sig_re, &sig_im);
        let tau = 2.0 * n as f64;
        let top = topk_eigh(&SymMatrix::symmetrize(&m0).unwrap(), 2, 1).unwrap();
        let x1 = LowRankPsd::from_factors(
            tau,
            vec![n as f64, n as f64],
            top.eigenvectors.clone(),
        )
        .unwrap();
        let err = super::super::relative_recovery_error(&m0, tau, &x1);
        assert!(err <= 1e-8, "recovery error {err}");
    }

    #[test]
    fn diag_map_and_adjoint_agree() {
        let inst = spec(8, 2).generate().unwrap();
        let x = Primal::new(inst.warm_start.0.clone());
        // <A(X), y> == <X, A*(y)> for random y.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let y = DVector::from_fn(8, |_, _| rng.gen::<f64>() - 0.5);
        let gy = inst.problem.grad_y(&x, &inst.warm_start.1);
        // grad_y = lambda (A(X) - 1); recover A(X).
        let ax = gy.as_vector() / 50.0 + DVector::from_element(8, 1.0);
        let gx_at_y = inst.problem.grad_x(&x, &DualPoint::Vector(y.clone()));
        let gx_at_zero = inst.problem.grad_x(&x, &DualPoint::Vector(DVector::zeros(8)));
        let adj = (gx_at_y - gx_at_zero) / 50.0;
        let lhs = ax.dot(&y);
        let rhs = x.dense().dot(&adj);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}
