//! Robust PCA: `min ||X - M||_1` over the trace-`tau` spectrahedron,
//! `tau = 0.95 tr(r Z0 Z0^T)`, with sparse sign corruptions of density
//! `1/sqrt(n)`.

use super::{sign_matrix, standard_normal_matrix, ProblemInstance, ProblemSpec};
use crate::error::{invalid, Result};
use crate::linalg::{full_eigh, SymMatrix};
use crate::solver::{DualDomain, DualPoint, Primal, SaddleProblem, SmoothnessConstants};
use crate::spectrahedron::exact_project;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(super) struct RobustPcaProblem {
    pub m: DMatrix<f64>,
    pub tau: f64,
    pub n: usize,
}

impl SaddleProblem for RobustPcaProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn trace_radius(&self) -> f64 {
        self.tau
    }

    fn dual_domain(&self) -> DualDomain {
        DualDomain::MatInfBall { n: self.n }
    }

    fn grad_x(&self, _x: &Primal, y: &DualPoint) -> DMatrix<f64> {
        y.as_matrix().clone()
    }

    fn grad_y(&self, x: &Primal, _y: &DualPoint) -> DualPoint {
        DualPoint::Matrix(x.dense() - &self.m)
    }

    fn smoothness(&self) -> SmoothnessConstants {
        SmoothnessConstants::new(0.0, 0.0, 1.0, 1.0)
    }

    fn value(&self, x: &DMatrix<f64>, y: &DualPoint) -> f64 {
        (x - &self.m).dot(y.as_matrix())
    }

    fn primal_objective(&self, x: &DMatrix<f64>) -> f64 {
        (x - &self.m).iter().map(|v| v.abs()).sum()
    }

    fn dual_objective(&self, y: &DualPoint) -> f64 {
        let ym = SymMatrix::symmetrize(y.as_matrix()).expect("finite dual point");
        let spectrum = full_eigh(&ym).expect("dense eigendecomposition");
        self.tau * spectrum.eigenvalues[self.n - 1] - self.m.dot(y.as_matrix())
    }
}

pub(super) fn generate(spec: &ProblemSpec, r: usize) -> Result<ProblemInstance> {
    let n = spec.n;
    if r == 0 || r >= n {
        return Err(invalid(format!("need 1 <= r < n, got r={r}, n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut z0 = standard_normal_matrix(n, r, &mut rng);
    z0 /= z0.norm();
    let m0 = &z0 * z0.transpose() * r as f64;
    let tau = 0.95 * m0.trace();

    // Sign corruptions: zero w.p. 1 - 1/sqrt(n), otherwise +-1.
    let density = 1.0 / (n as f64).sqrt();
    let raw = DMatrix::from_fn(n, n, |_, _| {
        if rng.gen::<f64>() < density {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        } else {
            0.0
        }
    });
    let noise_term = (&raw + raw.transpose()) * 0.5;
    let m = &m0 + &noise_term;
    let measured_snr = m0.norm_squared() / noise_term.norm_squared();

    let m_sym = SymMatrix::symmetrize(&m)?;
    let x1 = exact_project(&m_sym, tau)?;
    let y1 = DualPoint::Matrix(sign_matrix(&(x1.to_dense() - &m)));

    let problem = RobustPcaProblem { m, tau, n };
    let default_eta = if r == 1 { n as f64 / 10.0 } else { 1.0 };
    let default_iterations = match r {
        1 => 3000,
        2..=5 => 20_000,
        _ => 30_000,
    };
    Ok(ProblemInstance {
        spec: spec.clone(),
        ground_truth: m0,
        rank: r,
        tau,
        target_snr: None,
        measured_snr,
        problem: Box::new(problem),
        warm_start: (x1, y1),
        default_eta,
        default_iterations,
    })
}
