//! Episode loop, sweeps, metrics and result export.

mod episode;
mod export;
mod sweep;

use crate::error::{Error, Result};

pub use episode::{run_episode, run_episode_with, EpisodeConfig, EpisodeError, EpisodeResult, SharedLanguage};
pub use export::{export_results, CONVERGENCE_FILE, EPISODES_FILE, MANIFEST_FILE, SUMMARY_FILE};
pub use sweep::{
    default_utterances, run_sweep, Algorithm, ConvergenceRow, EpisodeKey, EpisodeRecord,
    SummaryCell, SummaryTable, SweepConfig, SweepResult,
};

/// Normalized mean squared error between two weight vectors: both are scaled
/// to unit length first, so the metric sees only relative importance.
pub fn nmse(theta_hat: &[f64], theta_star: &[f64]) -> Result<f64> {
    if theta_hat.len() != theta_star.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_star.len(),
            got: theta_hat.len(),
        });
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nh = norm(theta_hat);
    let ns = norm(theta_star);
    if nh == 0.0 || ns == 0.0 {
        return Err(Error::ZeroVector);
    }
    let d = theta_hat.len() as f64;
    Ok(theta_hat
        .iter()
        .zip(theta_star)
        .map(|(h, s)| {
            let diff = h / nh - s / ns;
            diff * diff
        })
        .sum::<f64>()
        / d)
}

/// SplitMix-style avalanche, stable across platforms.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministically derive a child seed from a base seed and salt values.
pub fn derive_seed(base: u64, salt: &[u64]) -> u64 {
    let mut h = mix64(base);
    for &s in salt {
        h = mix64(h ^ mix64(s));
    }
    h
}

/// Mean and standard error of the mean; SEM is 0 for a single sample.
pub(crate) fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_give_zero() {
        assert_eq!(nmse(&[5.0, 2.5, 20.0, 40.0], &[5.0, 2.5, 20.0, 40.0]).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_unit_vectors_give_one_for_d2() {
        assert_eq!(nmse(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn power_of_two_rescaling_is_exact() {
        let a = [1.3, -0.7, 2.9];
        let b = [5.0, 2.5, 20.0];
        let base = nmse(&a, &b).unwrap();
        for c in [0.5, 2.0, 4.0, 1024.0] {
            let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
            assert_eq!(nmse(&scaled, &b).unwrap(), base);
        }
    }

    #[test]
    fn arbitrary_rescaling_is_invariant_to_rounding() {
        let a = [1.3, -0.7, 2.9];
        let b = [5.0, 2.5, 20.0];
        let base = nmse(&a, &b).unwrap();
        for c in [0.3, 1.7, 9.99] {
            let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
            assert!((nmse(&scaled, &b).unwrap() - base).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_vectors_are_rejected() {
        assert!(matches!(nmse(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
        assert!(matches!(nmse(&[1.0, 0.0], &[0.0, 0.0]), Err(Error::ZeroVector)));
        assert!(nmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn nmse_stays_in_range() {
        let v = nmse(&[-1.0, -2.0], &[1.0, 2.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-15); // antipodal: 4/d with d=2
    }

    #[test]
    fn derive_seed_is_stable_and_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
    }

    #[test]
    fn mean_sem_single_sample_is_zero_sem() {
        let (mean, sem) = mean_sem(&[0.42]);
        assert_eq!(mean, 0.42);
        assert_eq!(sem, 0.0);
    }
}
