//! Sort-and-scan threshold for Euclidean projection onto the scaled simplex
//! `{z >= 0, sum z_i = tau}`, plus the numerical rank helper.

use super::Spectrum;
use crate::error::{invalid, Result};

/// Eigenvalues at or below `NUMERICAL_RANK_TOL * tau` do not count toward rank.
pub const NUMERICAL_RANK_TOL: f64 = 1e-9;

/// The unique scalar `t` with `sum_i max(0, values_i - t) = tau`, for a
/// non-increasing `values` slice.
///
/// This is the eigenvalue shift that turns an eigendecomposition into the
/// Euclidean projection onto the trace-`tau` spectrahedron.
pub fn simplex_threshold(values: &[f64], tau: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("simplex_threshold requires a non-empty list"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("tau must be positive and finite, got {tau}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("simplex_threshold: non-finite input"));
    }
    debug_assert!(
        values.windows(2).all(|w| w[0] >= w[1]),
        "values must be non-increasing"
    );

    // Scan active-set sizes in increasing order; the first prefix whose
    // candidate threshold still keeps the next value inactive is the answer.
    let n = values.len();
    let mut prefix = 0.0f64;
    for a in 1..=n {
        prefix += values[a - 1];
        let candidate = (prefix - tau) / a as f64;
        let next_inactive = a == n || values[a] - candidate <= 0.0;
        if next_inactive && values[a - 1] - candidate > 0.0 {
            return Ok(candidate);
        }
    }
    // All entries active (possible only through rounding); fall back to the
    // full-support candidate.
    Ok((values.iter().sum::<f64>() - tau) / n as f64)
}

/// Euclidean projection of `v` onto `{z >= 0, sum z_i = tau}` as
/// `max(0, v_i - t)` with `t` from [`simplex_threshold`].
pub fn project_simplex(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("project_simplex: non-finite input"));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let t = simplex_threshold(&sorted, tau)?;
    Ok(v.iter().map(|&x| (x - t).max(0.0)).collect())
}

/// Number of eigenvalues greater than `1e-9 * tau`.
pub fn numerical_rank(spectrum: &Spectrum, tau: f64) -> usize {
    let cut = NUMERICAL_RANK_TOL * tau;
    spectrum.eigenvalues.iter().filter(|&&l| l > cut).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Spectrum;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_single_active_eigenvalue() {
        assert_eq!(simplex_threshold(&[2.0, 0.0, 0.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn threshold_symmetric_pair() {
        assert_eq!(simplex_threshold(&[1.0, 1.0], 1.0).unwrap(), 0.5);
    }

    #[test]
    fn threshold_top_only_active() {
        assert_eq!(simplex_threshold(&[3.0, 1.0], 1.0).unwrap(), 2.0);
    }

    #[test]
    fn threshold_rejects_empty_and_bad_tau() {
        assert!(simplex_threshold(&[], 1.0).is_err());
        assert!(simplex_threshold(&[1.0], 0.0).is_err());
        assert!(simplex_threshold(&[1.0], -2.0).is_err());
    }

    #[test]
    fn threshold_residual_is_tiny() {
        let vals = [2.5, 1.0, 0.3, -0.2, -4.0];
        let tau = 1.7;
        let t = simplex_threshold(&vals, tau).unwrap();
        let s: f64 = vals.iter().map(|v| (v - t).max(0.0)).sum();
        assert!((s - tau).abs() <= 1e-12 * tau);
    }

    #[test]
    fn projection_keeps_feasible_points() {
        let out = project_simplex(&[0.2, 0.8], 1.0).unwrap();
        assert!((out[0] - 0.2).abs() < 1e-15);
        assert!((out[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn projection_clips_to_simplex() {
        let out = project_simplex(&[2.0, 0.0], 1.0).unwrap();
        assert_eq!(out, vec![1.0, 0.0]);
    }

    /// Exhaustive active-set oracle: try every support, keep the unique
    /// candidate that satisfies the KKT conditions.
    fn brute_force_projection(v: &[f64], tau: f64) -> Vec<f64> {
        let n = v.len();
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let s: f64 = support.iter().map(|&i| v[i]).sum();
            let t = (s - tau) / support.len() as f64;
            let feasible = support.iter().all(|&i| v[i] - t > 0.0);
            let optimal = (0..n)
                .filter(|i| !support.contains(i))
                .all(|i| v[i] - t <= 0.0);
            if feasible && optimal {
                return (0..n)
                    .map(|i| if support.contains(&i) { v[i] - t } else { 0.0 })
                    .collect();
            }
        }
        panic!("no valid active set found");
    }

    #[test]
    fn projection_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let v: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let tau = rng.gen::<f64>() * 3.0 + 0.1;
            let fast = project_simplex(&v, tau).unwrap();
            let slow = brute_force_projection(&v, tau);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rank_counts_above_threshold() {
        let spec = |vals: &[f64]| Spectrum {
            eigenvalues: vals.to_vec(),
            eigenvectors: DMatrix::identity(vals.len(), vals.len()),
            residual_tol: 1e-10,
        };
        assert_eq!(numerical_rank(&spec(&[1.0, 1e-15, 0.0]), 1.0), 1);
        assert_eq!(numerical_rank(&spec(&[0.5, 0.5]), 1.0), 2);
    }
}
