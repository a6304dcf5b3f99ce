//! Reward-update mathematics.
//!
//! Physical corrections contribute a linear term in the feature difference;
//! language contributes a Gaussian shift observation whose variance shrinks
//! with confidence, and an attention gate that widens the prior on attended
//! weights. The closed-form MAP update per feature `i` is
//!
//! ```text
//! theta_i' = theta_i + (sigma_i^2 * dphi_i + mu_i^capped) / (lambda_i * sigma_i^2 + 1)
//! ```
//!
//! with `lambda_i = 1 / (alpha (gate_i + eps_prior))` and
//! `sigma_i^2 = k^2 (1 - m_i)^2 / (eps_var + m_i)^2`. The scalar
//! `kappa_i = 1 / (lambda_i sigma_i^2 + 1)` acts as a Kalman-style gain
//! assigning credit between the two modalities. `log_posterior` provides the
//! objective this update maximizes and serves as the independent check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Update hyperparameters. Serialized keys follow the configuration table
/// naming (`base_learning_rate`, `language_confidence_scale`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// Base prior variance scale (alpha).
    #[serde(rename = "base_learning_rate")]
    pub alpha: f64,
    /// Language confidence scale (k).
    #[serde(rename = "language_confidence_scale")]
    pub k: f64,
    /// Numerical stability floor applied to the gain denominator.
    #[serde(rename = "numerical_stability")]
    pub eps: f64,
    /// Minimum-precision stabilizer in the conditional prior.
    #[serde(rename = "prior_stability")]
    pub eps_prior: f64,
    /// Stabilizer in the confidence-dependent variance.
    #[serde(rename = "variance_stability")]
    pub eps_var: f64,
    /// Cap on language shifts, as a multiple of |dphi|.
    #[serde(rename = "capping_factor")]
    pub cap_factor: f64,
    /// Effort coefficient from the correction likelihood; constant in the
    /// weights, carried for configuration completeness.
    pub lambda_effort: f64,
    /// Carried for configuration completeness; referenced by no update rule.
    pub beta_power: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            k: 1.2,
            eps: 1e-4,
            eps_prior: 1e-6,
            eps_var: 1e-3,
            cap_factor: 5.0,
            lambda_effort: 1.0,
            beta_power: 2.0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("base_learning_rate", self.alpha),
            ("language_confidence_scale", self.k),
            ("numerical_stability", self.eps),
            ("prior_stability", self.eps_prior),
            ("variance_stability", self.eps_var),
            ("capping_factor", self.cap_factor),
            ("lambda_effort", self.lambda_effort),
            ("beta_power", self.beta_power),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "hyperparameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Current weight estimate with an update counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceEstimate {
    pub theta: Vec<f64>,
    pub step_index: usize,
}

impl PreferenceEstimate {
    pub fn new(theta: Vec<f64>) -> Self {
        Self {
            theta,
            step_index: 0,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn advanced(&self, theta: Vec<f64>) -> Self {
        Self {
            theta,
            step_index: self.step_index + 1,
        }
    }
}

/// Structured output of the language pipeline: attention gate, shift and
/// confidence, one entry per active feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSignal {
    pub gate: Vec<f64>,
    pub mu: Vec<f64>,
    pub confidence: Vec<f64>,
}

impl LanguageSignal {
    /// Central validity check applied to every signal leaving the language
    /// pipeline: lengths match `d`, gate/confidence in [0, 1], mu finite.
    pub fn validate(&self, d: usize) -> Result<()> {
        for (name, v) in [("gate", &self.gate), ("mu", &self.mu), ("confidence", &self.confidence)] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "language signal `{name}` contains non-finite values"
                )));
            }
        }
        for v in self.gate.iter().chain(&self.confidence) {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidConfig(format!(
                    "gate/confidence value {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Attention-modulated prior precision `1 / (alpha (r + eps_prior))`.
/// Decreasing in the gate: unattended features are pinned to their value.
pub fn prior_precision(r: f64, hp: &Hyperparameters) -> f64 {
    1.0 / (hp.alpha * (r + hp.eps_prior))
}

/// Confidence-dependent language variance
/// `k^2 (1 - m)^2 / (eps_var + m)^2`; zero at full confidence.
pub fn language_variance(m: f64, hp: &Hyperparameters) -> f64 {
    hp.k * hp.k * (1.0 - m).powi(2) / (hp.eps_var + m).powi(2)
}

/// Kalman-style scalar gain `1 / (lambda * sigma^2 + 1)` in (0, 1].
pub fn gain(lambda_prior: f64, sigma_sq: f64) -> f64 {
    1.0 / (lambda_prior * sigma_sq + 1.0)
}

fn gain_denominator(lambda_prior: f64, sigma_sq: f64, hp: &Hyperparameters) -> f64 {
    // The denominator is >= 1 analytically; the floor guards degenerate
    // hyperparameter choices.
    (lambda_prior * sigma_sq + 1.0).max(hp.eps)
}

/// Cap language shifts to `cap_factor * |dphi|` per feature, preserving sign.
pub fn cap_mu(mu: &[f64], dphi: &[f64], hp: &Hyperparameters) -> Result<Vec<f64>> {
    check_len(mu.len(), dphi.len())?;
    Ok(mu
        .iter()
        .zip(dphi)
        .map(|(&m, &d)| m.signum() * m.abs().min(hp.cap_factor * d.abs()))
        .collect())
}

/// Full MAP update fusing the physical feature difference with the language
/// signal. Applied element-wise; the shift is capped first.
pub fn update_quicklap(
    est: &PreferenceEstimate,
    dphi: &[f64],
    sig: &LanguageSignal,
    hp: &Hyperparameters,
) -> Result<PreferenceEstimate> {
    check_len(est.theta.len(), dphi.len())?;
    sig.validate(est.theta.len())?;
    let mu_capped = cap_mu(&sig.mu, dphi, hp)?;
    let theta = est
        .theta
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let lambda = prior_precision(sig.gate[i], hp);
            let sigma_sq = language_variance(sig.confidence[i], hp);
            t + (sigma_sq * dphi[i] + mu_capped[i]) / gain_denominator(lambda, sigma_sq, hp)
        })
        .collect();
    Ok(est.advanced(theta))
}

/// Physical-only baseline: `theta' = theta + alpha * dphi`.
pub fn update_phri(
    est: &PreferenceEstimate,
    dphi: &[f64],
    hp: &Hyperparameters,
) -> Result<PreferenceEstimate> {
    check_len(est.theta.len(), dphi.len())?;
    let theta = est
        .theta
        .iter()
        .zip(dphi)
        .map(|(t, d)| t + hp.alpha * d)
        .collect();
    Ok(est.advanced(theta))
}

/// Attention-gated physical baseline:
/// `theta_i' = theta_i + alpha (gate_i + eps_prior) dphi_i`, i.e. the full
/// update with the language likelihood removed.
pub fn update_masked(
    est: &PreferenceEstimate,
    dphi: &[f64],
    gate: &[f64],
    hp: &Hyperparameters,
) -> Result<PreferenceEstimate> {
    check_len(est.theta.len(), dphi.len())?;
    check_len(est.theta.len(), gate.len())?;
    let theta = est
        .theta
        .iter()
        .enumerate()
        .map(|(i, &t)| t + hp.alpha * (gate[i] + hp.eps_prior) * dphi[i])
        .collect();
    Ok(est.advanced(theta))
}

/// Language-only ablation: the full update with the `sigma^2 * dphi` term
/// deleted.
pub fn update_language_only(
    est: &PreferenceEstimate,
    dphi: &[f64],
    sig: &LanguageSignal,
    hp: &Hyperparameters,
) -> Result<PreferenceEstimate> {
    check_len(est.theta.len(), dphi.len())?;
    sig.validate(est.theta.len())?;
    let mu_capped = cap_mu(&sig.mu, dphi, hp)?;
    let theta = est
        .theta
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let lambda = prior_precision(sig.gate[i], hp);
            let sigma_sq = language_variance(sig.confidence[i], hp);
            t + mu_capped[i] / gain_denominator(lambda, sigma_sq, hp)
        })
        .collect();
    Ok(est.advanced(theta))
}

/// Log-posterior over weights (up to constants in `theta`):
///
/// ```text
/// theta . dphi - 1/2 sum_i lambda_i (theta_i - theta_t_i)^2
///              - 1/2 sum_i (mu_i - (theta_i - theta_t_i))^2 / sigma_i^2
/// ```
///
/// At full confidence (`sigma_i^2 == 0`) the language term becomes a hard
/// equality constraint `theta_i = theta_t_i + mu_i`: violations return
/// negative infinity. Callers checking the MAP update pass the capped shift.
pub fn log_posterior(
    theta: &[f64],
    theta_t: &[f64],
    dphi: &[f64],
    gate: &[f64],
    mu: &[f64],
    m: &[f64],
    hp: &Hyperparameters,
) -> Result<f64> {
    let d = theta.len();
    for v in [theta_t.len(), dphi.len(), gate.len(), mu.len(), m.len()] {
        check_len(d, v)?;
    }
    let mut total = 0.0;
    for i in 0..d {
        let shift = theta[i] - theta_t[i];
        total += theta[i] * dphi[i];
        total -= 0.5 * prior_precision(gate[i], hp) * shift * shift;
        let sigma_sq = language_variance(m[i], hp);
        if sigma_sq == 0.0 {
            if (mu[i] - shift).abs() > 1e-9 {
                return Ok(f64::NEG_INFINITY);
            }
        } else {
            let r = mu[i] - shift;
            total -= 0.5 * r * r / sigma_sq;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hp() -> Hyperparameters {
        Hyperparameters::default()
    }

    #[test]
    fn prior_precision_examples() {
        let h = hp();
        assert_relative_eq!(prior_precision(0.0, &h), 1e6, max_relative = 1e-12);
        assert_relative_eq!(prior_precision(1.0, &h), 0.999999, max_relative = 1e-6);
        let h2 = Hyperparameters {
            alpha: 2.0,
            eps_prior: 1e-15,
            ..h
        };
        assert_relative_eq!(prior_precision(1.0, &h2), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn language_variance_examples() {
        let h = hp();
        assert_eq!(language_variance(1.0, &h), 0.0);
        assert_relative_eq!(language_variance(0.0, &h), 1.44e6, max_relative = 1e-12);
        assert_relative_eq!(
            language_variance(0.5, &h),
            1.44 * 0.25 / (0.501f64).powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn language_variance_strictly_decreasing() {
        let h = hp();
        let mut prev = language_variance(0.0, &h);
        for i in 1..=100 {
            let cur = language_variance(i as f64 / 100.0, &h);
            assert!(cur < prev, "variance must strictly decrease on [0, 1]");
            prev = cur;
        }
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gain(1.0, 0.0), 1.0);
        assert_relative_eq!(gain(1.0, 1.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(gain(1e6, 1.44e6), 6.944444444439622e-13, max_relative = 1e-9);
    }

    #[test]
    fn cap_mu_examples() {
        let h = hp();
        assert_eq!(cap_mu(&[6.0], &[0.1], &h).unwrap(), vec![0.5]);
        assert_eq!(cap_mu(&[-0.3], &[0.1], &h).unwrap(), vec![-0.3]);
        assert_eq!(cap_mu(&[3.0, -3.0], &[0.0, 0.0], &h).unwrap(), vec![0.0, 0.0]);
        assert!(cap_mu(&[1.0], &[1.0, 2.0], &h).is_err());
    }

    fn estimate(theta: &[f64]) -> PreferenceEstimate {
        PreferenceEstimate::new(theta.to_vec())
    }

    fn signal(gate: &[f64], mu: &[f64], m: &[f64]) -> LanguageSignal {
        LanguageSignal {
            gate: gate.to_vec(),
            mu: mu.to_vec(),
            confidence: m.to_vec(),
        }
    }

    #[test]
    fn full_confidence_applies_capped_shift_exactly() {
        let h = hp();
        let est = estimate(&[1.0, 2.0]);
        let dphi = [0.2, -0.4];
        let sig = signal(&[1.0, 1.0], &[0.5, -6.0], &[1.0, 1.0]);
        let out = update_quicklap(&est, &dphi, &sig, &h).unwrap();
        let capped = cap_mu(&sig.mu, &dphi, &h).unwrap();
        assert_eq!(out.theta[0], 1.0 + capped[0]);
        assert_eq!(out.theta[1], 2.0 + capped[1]);
        assert_eq!(out.step_index, 1);
    }

    #[test]
    fn zero_confidence_full_attention_recovers_physical_update() {
        let h = hp();
        let est = estimate(&[1.0, -0.5]);
        let dphi = [0.3, 0.7];
        let sig = signal(&[1.0, 1.0], &[2.0, -2.0], &[0.0, 0.0]);
        let out = update_quicklap(&est, &dphi, &sig, &h).unwrap();
        let phys = update_phri(&est, &dphi, &h).unwrap();
        for i in 0..2 {
            assert!((out.theta[i] - phys.theta[i]).abs() <= 1e-3 * dphi[i].abs());
        }
    }

    #[test]
    fn zero_attention_zero_confidence_freezes_weights() {
        let h = hp();
        let est = estimate(&[4.0]);
        let dphi = [0.9];
        let sig = signal(&[0.0], &[3.0], &[0.0]);
        let out = update_quicklap(&est, &dphi, &sig, &h).unwrap();
        let bound = h.alpha * h.eps_prior * dphi[0].abs() + 1e-9;
        assert!((out.theta[0] - 4.0).abs() <= bound);
    }

    #[test]
    fn phri_examples() {
        let h = hp();
        let out = update_phri(&estimate(&[0.0, 0.0]), &[0.2, -0.1], &h).unwrap();
        assert_eq!(out.theta, vec![0.2, -0.1]);
        let unchanged = update_phri(&estimate(&[1.0]), &[0.0], &h).unwrap();
        assert_eq!(unchanged.theta, vec![1.0]);
        // linearity: two sequential updates == one update of the summed delta
        let a = update_phri(&update_phri(&estimate(&[1.0]), &[0.3], &h).unwrap(), &[0.5], &h).unwrap();
        let b = update_phri(&estimate(&[1.0]), &[0.8], &h).unwrap();
        assert_relative_eq!(a.theta[0], b.theta[0], max_relative = 1e-15);
        assert!(update_phri(&estimate(&[1.0]), &[0.1, 0.2], &h).is_err());
    }

    #[test]
    fn masked_examples() {
        let h = hp();
        let est = estimate(&[1.0, 1.0]);
        let dphi = [0.4, -0.2];
        let ones = update_masked(&est, &dphi, &[1.0, 1.0], &h).unwrap();
        let phys = update_phri(&est, &dphi, &h).unwrap();
        for i in 0..2 {
            assert!((ones.theta[i] - phys.theta[i]).abs() <= h.eps_prior * dphi[i].abs() * 1.01);
        }
        let gated = update_masked(&est, &dphi, &[0.0, 1.0], &h).unwrap();
        assert!((gated.theta[0] - 1.0).abs() <= h.alpha * h.eps_prior * dphi[0].abs() + 1e-15);
        let frozen = update_masked(&est, &[0.0, 0.0], &[1.0, 1.0], &h).unwrap();
        assert_eq!(frozen.theta, vec![1.0, 1.0]);
    }

    #[test]
    fn language_only_examples() {
        let h = hp();
        let est = estimate(&[1.0]);
        let dphi = [0.5];
        // full confidence: identical to the full update (dphi term already zero)
        let sig = signal(&[1.0], &[1.5], &[1.0]);
        let a = update_language_only(&est, &dphi, &sig, &h).unwrap();
        let b = update_quicklap(&est, &dphi, &sig, &h).unwrap();
        assert_eq!(a.theta, b.theta);
        // zero shift: unchanged
        let zero = update_language_only(&est, &dphi, &signal(&[1.0], &[0.0], &[0.7]), &h).unwrap();
        assert_eq!(zero.theta, vec![1.0]);
        // zero confidence: change bounded by |mu_capped| / (lambda sigma^2)
        let low = update_language_only(&est, &dphi, &signal(&[1.0], &[2.0], &[0.0]), &h).unwrap();
        assert!((low.theta[0] - 1.0).abs() <= 2.0 / 1.44e6 * 1.01);
    }

    #[test]
    fn log_posterior_trivial_case() {
        let h = hp();
        let v = log_posterior(&[1.0, 2.0], &[1.0, 2.0], &[0.0, 0.0], &[0.5, 0.5], &[0.0, 0.0], &[0.5, 0.5], &h)
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn log_posterior_hard_constraint_at_full_confidence() {
        let h = hp();
        let ok = log_posterior(&[1.5], &[1.0], &[0.0], &[1.0], &[0.5], &[1.0], &h).unwrap();
        assert!(ok.is_finite());
        let bad = log_posterior(&[1.6], &[1.0], &[0.0], &[1.0], &[0.5], &[1.0], &h).unwrap();
        assert_eq!(bad, f64::NEG_INFINITY);
    }

    fn numerical_gradient(
        theta: &[f64],
        theta_t: &[f64],
        dphi: &[f64],
        gate: &[f64],
        mu: &[f64],
        m: &[f64],
        h: &Hyperparameters,
    ) -> Vec<f64> {
        let step = 1e-5;
        (0..theta.len())
            .map(|i| {
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[i] += step;
                minus[i] -= step;
                let fp = log_posterior(&plus, theta_t, dphi, gate, mu, m, h).unwrap();
                let fm = log_posterior(&minus, theta_t, dphi, gate, mu, m, h).unwrap();
                (fp - fm) / (2.0 * step)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn map_update_zeroes_the_posterior_gradient(
            theta_t in proptest::collection::vec(-3.0f64..3.0, 1..6),
            seeds in proptest::collection::vec((0.0f64..1.0, -6.0f64..6.0, 0.0f64..0.99, -1.0f64..1.0), 1..6),
        ) {
            let d = theta_t.len().min(seeds.len());
            let theta_t = &theta_t[..d];
            let gate: Vec<f64> = seeds[..d].iter().map(|s| s.0).collect();
            let mu: Vec<f64> = seeds[..d].iter().map(|s| s.1).collect();
            let m: Vec<f64> = seeds[..d].iter().map(|s| s.2).collect();
            let dphi: Vec<f64> = seeds[..d].iter().map(|s| s.3).collect();
            let h = hp();
            let est = PreferenceEstimate::new(theta_t.to_vec());
            let sig = LanguageSignal { gate: gate.clone(), mu: mu.clone(), confidence: m.clone() };
            let out = update_quicklap(&est, &dphi, &sig, &h).unwrap();
            let capped = cap_mu(&mu, &dphi, &h).unwrap();
            let grad = numerical_gradient(&out.theta, theta_t, &dphi, &gate, &capped, &m, &h);
            let grad_at_start = numerical_gradient(theta_t, theta_t, &dphi, &gate, &capped, &m, &h);
            let scale = 1.0 + grad_at_start.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            for g in grad {
                prop_assert!(g.abs() <= 1e-6 * scale, "gradient {g} exceeds tolerance {}", 1e-6 * scale);
            }
        }

        #[test]
        fn updates_decouple_across_features(
            base in (0.0f64..1.0, -6.0f64..6.0, 0.0f64..0.99, -1.0f64..1.0),
            other in (0.0f64..1.0, -6.0f64..6.0, 0.0f64..0.99, -1.0f64..1.0),
        ) {
            let h = hp();
            let est = PreferenceEstimate::new(vec![1.0, 1.0]);
            let sig_a = LanguageSignal {
                gate: vec![base.0, other.0],
                mu: vec![base.1, other.1],
                confidence: vec![base.2, other.2],
            };
            // change only feature 1's inputs
            let sig_b = LanguageSignal {
                gate: vec![base.0, other.0 * 0.5],
                mu: vec![base.1, -other.1],
                confidence: vec![base.2, other.2 * 0.5],
            };
            let a = update_quicklap(&est, &[base.3, other.3], &sig_a, &h).unwrap();
            let b = update_quicklap(&est, &[base.3, -other.3], &sig_b, &h).unwrap();
            prop_assert_eq!(a.theta[0], b.theta[0]);
        }

        #[test]
        fn capping_bounds_the_update_step(
            gate in 0.0f64..1.0,
            mu in -20.0f64..20.0,
            m in 0.0f64..1.0,
            dphi in -2.0f64..2.0,
        ) {
            let h = hp();
            let est = PreferenceEstimate::new(vec![0.0]);
            let sig = LanguageSignal { gate: vec![gate], mu: vec![mu], confidence: vec![m] };
            let out = update_quicklap(&est, &[dphi], &sig, &h).unwrap();
            let bound = h.alpha * (1.0 + h.eps_prior) * dphi.abs() * h.cap_factor.max(1.0);
            prop_assert!(out.theta[0].abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn tradeoff_weights_move_in_opposite_directions() {
        let h = Hyperparameters {
            k: 1.0,
            ..Hyperparameters::default()
        };
        let lambda = 1.0;
        let mut prev_w_phi = f64::INFINITY;
        let mut prev_w_mu = -1.0;
        for i in 0..=100 {
            let m = i as f64 / 100.0;
            let sigma_sq = language_variance(m, &h);
            let w_phi = sigma_sq * gain(lambda, sigma_sq);
            let w_mu = gain(lambda, sigma_sq);
            assert!(w_phi <= prev_w_phi + 1e-15);
            assert!(w_mu >= prev_w_mu - 1e-15);
            assert!(w_mu > 0.0 && w_mu <= 1.0);
            prev_w_phi = w_phi;
            prev_w_mu = w_mu;
        }
        assert_eq!(gain(lambda, language_variance(1.0, &h)), 1.0);
    }

    #[test]
    fn grid_search_finds_no_better_point_than_map() {
        let h = hp();
        let theta_t = [0.5, -1.0, 2.0];
        let dphi = [0.4, -0.6, 0.1];
        let gate = [1.0, 0.3, 0.0];
        let mu = [1.5, -0.2, 0.05];
        let m = [0.9, 0.5, 0.1];
        let est = PreferenceEstimate::new(theta_t.to_vec());
        let sig = LanguageSignal {
            gate: gate.to_vec(),
            mu: mu.to_vec(),
            confidence: m.to_vec(),
        };
        let out = update_quicklap(&est, &dphi, &sig, &h).unwrap();
        let capped = cap_mu(&mu, &dphi, &h).unwrap();
        let best = log_posterior(&out.theta, &theta_t, &dphi, &gate, &capped, &m, &h).unwrap();
        for i in 0..3 {
            for step in -500..=500 {
                let mut probe = out.theta.clone();
                probe[i] += step as f64 * 1e-4;
                let v = log_posterior(&probe, &theta_t, &dphi, &gate, &capped, &m, &h).unwrap();
                assert!(v <= best + 1e-12 * (1.0 + best.abs()));
            }
        }
    }
}
