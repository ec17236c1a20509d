//! Scalar forward/backward Kalman smoothing of lag-domain pitch observations.
//!
//! The state is the pitch period in samples under a random-walk model. The
//! observation variance is not fixed: it is the windowed mean of squared
//! residuals against an exponentially smoothed observation mean, updated
//! every frame. Two filters run in opposite directions over the voiced
//! observations and are fused by inverse-variance weighting.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the observation variance fed to the gain computation.
pub const VARIANCE_FLOOR: f64 = 1e-6;
/// Observation variances above this are treated as this value.
pub const VARIANCE_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanConfig {
    /// Window length for the observation-variance estimate, in frames.
    pub l_window: usize,
    /// Smoothing factor of the recursive observation mean.
    pub alpha: f64,
    /// System-noise variance in squared samples.
    pub sigma2_delta0: f64,
    /// Initial error variance; defaults to `10 * sigma2_delta0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0_init: Option<f64>,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            l_window: 8,
            alpha: 0.95,
            sigma2_delta0: 0.06,
            p0_init: None,
        }
    }
}

impl KalmanConfig {
    pub fn initial_error_variance(&self) -> f64 {
        self.p0_init.unwrap_or(10.0 * self.sigma2_delta0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.sigma2_delta0.is_finite() && self.sigma2_delta0 > 0.0) {
            return bad(format!("sigma2_delta0 must be positive, got {}", self.sigma2_delta0));
        }
        if self.l_window < 2 {
            return bad(format!("l_window must be at least 2, got {}", self.l_window));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        let p0 = self.initial_error_variance();
        if !(p0.is_finite() && p0 > 0.0) {
            return bad(format!("p0_init must be positive, got {p0}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    /// Corrected period estimate `N0(k|k)` in samples.
    pub estimate: f64,
    /// Corrected error variance `P(k|k)`.
    pub error_variance: f64,
    pub gain: f64,
}

/// Running mean and windowed residual variance of the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStats {
    pub mean: f64,
    pub variance: f64,
    /// Residuals `N(i) - mean(i)` of the most recent observations, oldest first.
    residuals: VecDeque<f64>,
}

impl ObservationStats {
    /// Cold start from the first observation: the mean equals it, its
    /// residual is zero and the reported variance is `sigma2_delta0`.
    pub fn new(first: f64, cfg: &KalmanConfig) -> Self {
        let mut residuals = VecDeque::with_capacity(cfg.l_window);
        residuals.push_back(0.0);
        Self {
            mean: first,
            variance: cfg.sigma2_delta0,
            residuals,
        }
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.residuals.iter().copied()
    }
}

/// Folds one observation into the statistics.
///
/// `mean(k) = alpha N(k) + (1 - alpha) mean(k-1)`; the variance is the mean
/// of `[N(i) - mean(i)]^2` over the last `min(L, count)` observations, each
/// residual taken against the mean current at its own time.
pub fn update_observation_stats(mut stats: ObservationStats, obs: f64, cfg: &KalmanConfig) -> ObservationStats {
    stats.mean = cfg.alpha * obs + (1.0 - cfg.alpha) * stats.mean;
    stats.residuals.push_back(obs - stats.mean);
    while stats.residuals.len() > cfg.l_window {
        stats.residuals.pop_front();
    }
    stats.variance = stats.residuals.iter().map(|r| r * r).sum::<f64>() / stats.residuals.len() as f64;
    stats
}

/// One predict/correct cycle of the random-walk filter.
pub fn kf_step(state: KalmanState, obs: f64, sigma2_obs: f64, cfg: &KalmanConfig) -> KalmanState {
    let predicted = state.estimate;
    let predicted_var = state.error_variance + cfg.sigma2_delta0;
    let sigma2_obs = sigma2_obs.min(VARIANCE_CAP);
    let denom = predicted_var + sigma2_obs;
    let gain = if denom > 0.0 { predicted_var / denom } else { 1.0 };
    KalmanState {
        estimate: predicted + gain * (obs - predicted),
        error_variance: (1.0 - gain) * predicted_var,
        gain,
    }
}

/// Per-observation output of one filtering direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub estimates: Vec<f64>,
    /// Observation variance used at each step (after flooring).
    pub variances: Vec<f64>,
    pub error_variances: Vec<f64>,
}

/// Filters the observations in order.
pub fn run_forward(observations: &[f64], cfg: &KalmanConfig) -> Result<FilterOutput> {
    let (&first, rest) = observations.split_first().ok_or(Error::NoObservations)?;
    let mut stats = ObservationStats::new(first, cfg);
    let mut state = KalmanState {
        estimate: first,
        error_variance: cfg.initial_error_variance(),
        gain: 1.0,
    };
    let mut out = FilterOutput {
        estimates: Vec::with_capacity(observations.len()),
        variances: Vec::with_capacity(observations.len()),
        error_variances: Vec::with_capacity(observations.len()),
    };
    out.estimates.push(state.estimate);
    out.variances.push(stats.variance.max(VARIANCE_FLOOR));
    out.error_variances.push(state.error_variance);

    for &obs in rest {
        stats = update_observation_stats(stats, obs, cfg);
        let sigma2 = stats.variance.max(VARIANCE_FLOOR);
        state = kf_step(state, obs, sigma2, cfg);
        out.estimates.push(state.estimate);
        out.variances.push(sigma2);
        out.error_variances.push(state.error_variance);
    }
    Ok(out)
}

/// Filters the time-reversed observations; outputs are in original order.
pub fn run_backward(observations: &[f64], cfg: &KalmanConfig) -> Result<FilterOutput> {
    let reversed: Vec<f64> = observations.iter().rev().copied().collect();
    let mut out = run_forward(&reversed, cfg)?;
    out.estimates.reverse();
    out.variances.reverse();
    out.error_variances.reverse();
    Ok(out)
}

/// Inverse-variance weighted combination of the two directions. Two zero
/// variances give the plain average.
pub fn fuse(forward: f64, forward_var: f64, backward: f64, backward_var: f64) -> f64 {
    let total = forward_var + backward_var;
    if total > 0.0 {
        (backward_var * forward + forward_var * backward) / total
    } else {
        0.5 * (forward + backward)
    }
}

/// `fs / lag`, clamped to `[f_min, f_max]`.
///
/// # Panics
/// If `lag` is not positive.
pub fn to_frequency(lag: f64, sample_rate: u32, f_min: f64, f_max: f64) -> f64 {
    assert!(lag > 0.0, "non-positive lag {lag}");
    (f64::from(sample_rate) / lag).clamp(f_min, f_max)
}

/// Forward, backward and fused estimates over a sequence of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedLags {
    pub forward: FilterOutput,
    pub backward: FilterOutput,
    pub fused: Vec<f64>,
}

pub fn smooth(observations: &[f64], cfg: &KalmanConfig) -> Result<SmoothedLags> {
    cfg.validate()?;
    let forward = run_forward(observations, cfg)?;
    let backward = run_backward(observations, cfg)?;
    let fused = (0..observations.len())
        .map(|i| {
            fuse(
                forward.estimates[i],
                forward.variances[i],
                backward.estimates[i],
                backward.variances[i],
            )
        })
        .collect();
    Ok(SmoothedLags {
        forward,
        backward,
        fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> KalmanConfig {
        KalmanConfig::default()
    }

    fn state(estimate: f64, error_variance: f64) -> KalmanState {
        KalmanState {
            estimate,
            error_variance,
            gain: 0.0,
        }
    }

    #[test]
    fn mean_update() {
        let mut stats = ObservationStats::new(100.0, &cfg());
        stats = update_observation_stats(stats, 120.0, &cfg());
        assert!((stats.mean - 119.0).abs() < 1e-12);
    }

    #[test]
    fn constant_observations_have_zero_variance() {
        let mut stats = ObservationStats::new(80.0, &cfg());
        for _ in 0..20 {
            stats = update_observation_stats(stats, 80.0, &cfg());
            assert_eq!(stats.variance, 0.0);
        }
    }

    #[test]
    fn windowed_variance_matches_transcription() {
        // Scratch transcription: mu(0) = N(0); mu(k) = a N(k) + (1-a) mu(k-1);
        // var(k) = mean over i in [k-L+1, k] (clipped at 0) of (N(i) - mu(i))^2.
        let n: [f64; 8] = [80.0, 80.0, 80.0, 80.0, 120.0, 120.0, 120.0, 120.0];
        let a = 0.95;
        let mut mu = vec![n[0]];
        for k in 1..n.len() {
            let prev = mu[k - 1];
            mu.push(a * n[k] + (1.0 - a) * prev);
        }
        let k = n.len() - 1;
        let oracle = (0..=k).map(|i| (n[i] - mu[i]).powi(2)).sum::<f64>() / 8.0;

        let mut stats = ObservationStats::new(n[0], &cfg());
        for &x in &n[1..] {
            stats = update_observation_stats(stats, x, &cfg());
        }
        assert!((stats.variance - oracle).abs() < 1e-12);
        // residuals after the step: 2, 0.1, 0.005, 0.00025
        assert!((oracle - (4.0 + 0.01 + 0.000025 + 6.25e-8) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn step_direct_evaluation() {
        let c = KalmanConfig {
            sigma2_delta0: 0.5,
            ..cfg()
        };
        // P(k|k-1) = 0.5 + 0.5 = 1
        let s = kf_step(state(80.0, 0.5), 100.0, 1.0, &c);
        assert_eq!(s.gain, 0.5);
        assert_eq!(s.estimate, 90.0);
        assert_eq!(s.error_variance, 0.5);
    }

    #[test]
    fn step_limits() {
        let s = kf_step(state(80.0, 1.0), 100.0, f64::INFINITY, &cfg());
        assert!(s.gain < 1e-11);
        assert!((s.estimate - 80.0).abs() < 1e-9);
        let s = kf_step(state(80.0, 1.0), 100.0, 0.0, &cfg());
        assert_eq!(s.gain, 1.0);
        assert_eq!(s.estimate, 100.0);
        let degenerate = KalmanConfig {
            sigma2_delta0: 0.0,
            ..cfg()
        };
        assert_eq!(kf_step(state(80.0, 0.0), 90.0, 0.0, &degenerate).gain, 1.0);
    }

    #[test]
    fn single_observation() {
        let out = run_forward(&[80.0], &cfg()).unwrap();
        assert_eq!(out.estimates, vec![80.0]);
        assert!(run_forward(&[], &cfg()).is_err());
    }

    #[test]
    fn constant_input_reaches_riccati_fixed_point() {
        let c = cfg();
        let out = run_forward(&[80.0; 400], &c).unwrap();
        assert!(out.estimates.iter().all(|&e| e == 80.0));
        // Oracle: iterate P <- (1 - g) (P + q), g = (P + q) / (P + q + r)
        // to convergence with r at the variance floor.
        let (q, r) = (c.sigma2_delta0, VARIANCE_FLOOR);
        let mut p = 1.0;
        for _ in 0..100_000 {
            let pp = p + q;
            p = (1.0 - pp / (pp + r)) * pp;
        }
        let last = *out.error_variances.last().unwrap();
        assert!((last - p).abs() < 1e-12, "{last} vs {p}");
    }

    #[test]
    fn step_input_transitions_monotonically() {
        let mut obs = vec![80.0; 20];
        obs.extend(vec![120.0; 30]);
        let out = run_forward(&obs, &cfg()).unwrap();
        for w in out.estimates.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(out.estimates.iter().all(|&e| (80.0..=120.0).contains(&e)));
    }

    #[test]
    fn backward_is_reversed_forward() {
        let obs: Vec<f64> = (0..30).map(|i| 60.0 + (i as f64).powf(1.3)).collect();
        let b = run_backward(&obs, &cfg()).unwrap();
        let rev: Vec<f64> = obs.iter().rev().copied().collect();
        let mut f = run_forward(&rev, &cfg()).unwrap();
        f.estimates.reverse();
        assert_eq!(b.estimates, f.estimates);

        let constant = run_backward(&[90.0; 10], &cfg()).unwrap();
        assert_eq!(constant.estimates, run_forward(&[90.0; 10], &cfg()).unwrap().estimates);

        let fwd = run_forward(&obs, &cfg()).unwrap();
        assert!((fwd.estimates[0] - b.estimates[0]).abs() > 1e-3);
        assert!((fwd.estimates[29] - b.estimates[29]).abs() > 1e-3);
    }

    #[test]
    fn fuse_cases() {
        assert_eq!(fuse(80.0, 2.0, 100.0, 2.0), 90.0);
        assert_eq!(fuse(80.0, 0.0, 100.0, 5.0), 80.0);
        assert_eq!(fuse(80.0, 1.0, 100.0, 3.0), 85.0);
        assert_eq!(fuse(80.0, 0.0, 100.0, 0.0), 90.0);
    }

    #[test]
    fn frequency_conversion() {
        assert_eq!(to_frequency(80.0, 16_000, 60.0, 460.0), 200.0);
        assert_eq!(to_frequency(34.0, 16_000, 60.0, 460.0), 460.0);
        assert_eq!(to_frequency(160.0, 16_000, 60.0, 460.0), 100.0);
    }

    #[test]
    #[should_panic]
    fn frequency_rejects_zero_lag() {
        to_frequency(0.0, 16_000, 60.0, 460.0);
    }

    #[test]
    fn fused_beats_forward_after_jump() {
        // 30 frames at lag 100, then 30 frames at lag 60.
        let mut obs = vec![100.0; 30];
        obs.extend(vec![60.0; 30]);
        let s = smooth(&obs, &cfg()).unwrap();
        let err = |v: &[f64]| (30..33).map(|i| (v[i] - 60.0).abs()).sum::<f64>() / 3.0;
        let fused_err = err(&s.fused);
        let fwd_err = err(&s.forward.estimates);
        assert!(fused_err <= fwd_err, "{fused_err} vs {fwd_err}");
        assert!(s.forward.variances[30] > 100.0 * s.backward.variances[30]);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!((cfg().initial_error_variance() - 0.6).abs() < 1e-15);
        for bad in [
            KalmanConfig { l_window: 1, ..cfg() },
            KalmanConfig { alpha: 0.0, ..cfg() },
            KalmanConfig {
                sigma2_delta0: 0.0,
                ..cfg()
            },
            KalmanConfig {
                p0_init: Some(-1.0),
                ..cfg()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    proptest! {
        #[test]
        fn correction_is_convex_combination(
            est in 20.0f64..300.0, p in 0.0f64..100.0, obs in 20.0f64..300.0, r in 0.0f64..1e4,
        ) {
            let s = kf_step(state(est, p), obs, r, &cfg());
            prop_assert!((0.0..=1.0).contains(&s.gain));
            let combo = (1.0 - s.gain) * est + s.gain * obs;
            prop_assert!((s.estimate - combo).abs() <= 1e-9 * combo.abs());
            prop_assert!(s.error_variance <= p + cfg().sigma2_delta0);
            prop_assert!(s.error_variance >= 0.0);
        }

        #[test]
        fn fuse_is_symmetric_and_bounded(
            f in 20.0f64..300.0, vf in 0.0f64..100.0, b in 20.0f64..300.0, vb in 0.0f64..100.0,
        ) {
            let x = fuse(f, vf, b, vb);
            prop_assert_eq!(x, fuse(b, vb, f, vf));
            prop_assert!(x >= f.min(b) - 1e-12 && x <= f.max(b) + 1e-12);
        }

        #[test]
        fn variance_is_non_negative(obs in prop::collection::vec(20.0f64..300.0, 1..50)) {
            let mut stats = ObservationStats::new(obs[0], &cfg());
            for &x in &obs[1..] {
                stats = update_observation_stats(stats, x, &cfg());
                prop_assert!(stats.variance >= 0.0);
            }
        }
    }
}
