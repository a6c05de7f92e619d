//! Central finite-difference validation of the analytic gradients of a
//! [`SaddleProblem`], along random directions at random feasible points.

use super::{DualDomain, DualPoint, Primal, SaddleProblem};
use crate::error::{invalid, Result};
use crate::linalg::project_simplex;
use crate::spectrahedron::LowRankPsd;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FD_STEP: f64 = 1e-5;
const DIRECTIONS_PER_POINT: usize = 3;

/// Compares analytic `grad_x` / `grad_y` against central finite differences
/// of `value` and returns the worst relative error observed.
pub fn check_gradients(
    problem: &dyn SaddleProblem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let n = problem.dim();
    let tau = problem.trace_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;

    for _ in 0..samples {
        let x = random_feasible_primal(n, tau, &mut rng)?;
        let y = random_feasible_dual(&problem.dual_domain(), &mut rng);
        let x_dense = x.dense().clone();
        let gx = problem.grad_x(&x, &y);
        let gy = problem.grad_y(&x, &y);

        let hx = FD_STEP * x_dense.norm().max(1.0);
        for _ in 0..DIRECTIONS_PER_POINT {
            let dir = random_symmetric_direction(n, &mut rng);
            let plus = problem.value(&(&x_dense + &dir * hx), &y);
            let minus = problem.value(&(&x_dense - &dir * hx), &y);
            let fd = (plus - minus) / (2.0 * hx);
            let analytic = gx.dot(&dir);
            worst = worst.max(relative_error(fd, analytic));
        }

        let hy = FD_STEP * y.norm().max(1.0);
        for _ in 0..DIRECTIONS_PER_POINT {
            let dir = random_dual_direction(&problem.dual_domain(), &mut rng);
            let plus = problem.value(&x_dense, &y.clone().axpy(hy, &dir));
            let minus = problem.value(&x_dense, &y.clone().axpy(-hy, &dir));
            let fd = (plus - minus) / (2.0 * hy);
            let analytic = gy.dot(&dir);
            worst = worst.max(relative_error(fd, analytic));
        }
    }
    Ok(worst)
}

fn relative_error(fd: f64, analytic: f64) -> f64 {
    (fd - analytic).abs() / analytic.abs().max(fd.abs()).max(1.0)
}

/// Random point of the trace-`tau` spectrahedron: a few orthonormal
/// directions carrying simplex-distributed weights.
pub fn random_feasible_primal(
    n: usize,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Primal> {
    let k = rng.gen_range(1..=3usize.min(n));
    let gauss = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gauss.qr();
    let q = qr.q().columns(0, k).into_owned();
    let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * tau).collect();
    let mut weights = project_simplex(&raw, tau)?;
    let mut pairs: Vec<(f64, usize)> =
        weights.drain(..).enumerate().map(|(i, w)| (w, i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sorted_weights: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut cols = DMatrix::zeros(n, k);
    for (dst, &(_, src)) in pairs.iter().enumerate() {
        cols.set_column(dst, &q.column(src));
    }
    Ok(Primal::new(LowRankPsd::from_factors(tau, sorted_weights, cols)?))
}

/// Random interior point of `K`.
pub fn random_feasible_dual(domain: &DualDomain, rng: &mut ChaCha8Rng) -> DualPoint {
    match domain {
        DualDomain::MatInfBall { n } => {
            DualPoint::Matrix(DMatrix::from_fn(*n, *n, |_, _| rng.gen::<f64>() * 1.8 - 0.9))
        }
        DualDomain::VecL2Ball { m } => {
            let mut v = DVector::from_fn(*m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = v.norm();
            if norm > 0.0 {
                v *= rng.gen::<f64>() * 0.9 / norm;
            }
            DualPoint::Vector(v)
        }
    }
}

fn random_symmetric_direction(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sym = (&raw + raw.transpose()) * 0.5;
    let norm = sym.norm();
    sym / norm
}

fn random_dual_direction(domain: &DualDomain, rng: &mut ChaCha8Rng) -> DualPoint {
    match domain {
        DualDomain::MatInfBall { n } => {
            let raw = DMatrix::from_fn(*n, *n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = raw.norm();
            DualPoint::Matrix(raw / norm)
        }
        DualDomain::VecL2Ball { m } => {
            let v = DVector::from_fn(*m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = v.norm();
            DualPoint::Vector(v / norm)
        }
    }
}
