//! Breaking policies: per step they decide the break probability for every
//! slot of the next batch.

use lvbreak_predict::{learned_policy, predict_points, ProbePredictor};
use lvbreak_recsys::UserFeatures;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::sampler::Draw;

pub const DEFAULT_SAFETY_THRESHOLD: f64 = 16.0;
pub const DEFAULT_SAFETY_LOOKBACK: usize = 10;
pub const DEFAULT_SAFETY_COOLDOWN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyParams {
    pub threshold: f64,
    pub lookback: usize,
    pub cooldown: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self { threshold: DEFAULT_SAFETY_THRESHOLD, lookback: DEFAULT_SAFETY_LOOKBACK, cooldown: DEFAULT_SAFETY_COOLDOWN }
    }
}

impl SafetyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) || self.lookback == 0 || !(self.cooldown > 0.0) {
            return Err(SimError::Config(format!("invalid safety parameters {self:?}")));
        }
        Ok(())
    }
}

/// Serves only breaks for a cooldown period once the trailing rate exceeds
/// the threshold; otherwise never breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyPolicy {
    pub params: SafetyParams,
    cooldown_until: f64,
}

impl SafetyPolicy {
    pub fn new(params: SafetyParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, cooldown_until: f64::NEG_INFINITY })
    }

    pub fn in_cooldown(&self, t: f64) -> bool {
        t < self.cooldown_until
    }

    /// `history` ends with the current event time. Returns `true` when every
    /// slot of the current batch must be a break.
    pub fn step(&mut self, history: &[f64]) -> bool {
        let Some(&t) = history.last() else { return false };
        if self.in_cooldown(t) {
            return true;
        }
        let k = self.params.lookback;
        if history.len() <= k {
            return false;
        }
        let rate = k as f64 / (t - history[history.len() - 1 - k]);
        if rate > self.params.threshold {
            self.cooldown_until = t + self.params.cooldown;
            return true;
        }
        false
    }
}

/// Trailing empirical rate `k / (t_i - t_{i-k})`, if enough history exists.
pub fn trailing_rate(history: &[f64], k: usize) -> Option<f64> {
    if k == 0 || history.len() <= k {
        return None;
    }
    let n = history.len();
    Some(k as f64 / (history[n - 1] - history[n - 1 - k]))
}

#[derive(Debug, Clone)]
pub struct AdaptiveParams {
    /// Adaptation time `T0`.
    pub t0: f64,
    /// Probability that a served item's rating is reported.
    pub rating_density: f64,
    pub p_max: f64,
}

/// Runs a stationary policy, collects sparse ratings until `T0`, then swaps
/// the ρ̂ feature for their mean and re-derives the breaking probability once.
#[derive(Debug, Clone)]
pub struct AdaptivePolicy {
    params: AdaptiveParams,
    p: f64,
    features: UserFeatures,
    predictors: Vec<ProbePredictor>,
    rating_rng: ChaCha8Rng,
    rating_sum: f64,
    rating_count: usize,
    updated: bool,
}

impl AdaptivePolicy {
    /// `rating_seed` drives only the rating reports, so the main simulation
    /// stream is unaffected by them.
    pub fn new(
        params: AdaptiveParams,
        initial_p: f64,
        features: UserFeatures,
        predictors: Vec<ProbePredictor>,
        rating_seed: u64,
    ) -> Result<Self> {
        if !(params.t0 >= 0.0) {
            return Err(SimError::Config(format!("adaptation time {} must be >= 0", params.t0)));
        }
        if !(0.0..=1.0).contains(&params.rating_density) {
            return Err(SimError::Config(format!("rating density {} outside [0, 1]", params.rating_density)));
        }
        check_probability(initial_p)?;
        Ok(Self {
            params,
            p: initial_p,
            features,
            predictors,
            rating_rng: ChaCha8Rng::seed_from_u64(rating_seed),
            rating_sum: 0.0,
            rating_count: 0,
            updated: false,
        })
    }

    pub fn current_p(&self) -> f64 {
        self.p
    }

    pub fn has_updated(&self) -> bool {
        self.updated
    }

    pub fn ratings_observed(&self) -> usize {
        self.rating_count
    }

    fn begin_step(&mut self, t: f64) -> Result<f64> {
        if !self.updated && t >= self.params.t0 {
            self.updated = true;
            let ratings: Vec<f64> = if self.rating_count == 0 {
                Vec::new()
            } else {
                vec![self.rating_sum / self.rating_count as f64]
            };
            if let Some(p) = adaptive_policy_update(&ratings, &self.features, &self.predictors, self.params.p_max)? {
                self.p = p;
            }
        }
        Ok(self.p)
    }

    fn observe(&mut self, t: f64, draws: &[Draw], served: &[bool]) {
        if self.updated || t >= self.params.t0 {
            return;
        }
        for (d, &s) in draws.iter().zip(served) {
            if s && self.rating_rng.random_bool(self.params.rating_density) {
                self.rating_sum += d.rating;
                self.rating_count += 1;
            }
        }
    }
}

/// New breaking probability from collected ratings, or `None` when no
/// ratings were observed.
pub fn adaptive_policy_update(
    ratings: &[f64],
    features: &UserFeatures,
    predictors: &[ProbePredictor],
    p_max: f64,
) -> Result<Option<f64>> {
    if ratings.is_empty() {
        return Ok(None);
    }
    let mean = ratings.iter().sum::<f64>() / ratings.len() as f64;
    let updated = features.with_rho_hat(mean);
    let points = predict_points(predictors, &updated)?;
    Ok(Some(learned_policy(&points, p_max).p_hat))
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::Config(format!("break probability {p} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum BreakingPolicy {
    Stationary(f64),
    Safety(SafetyPolicy),
    Adaptive(Box<AdaptivePolicy>),
}

impl BreakingPolicy {
    /// Never breaks.
    pub fn default_policy() -> Self {
        Self::Stationary(0.0)
    }

    pub fn stationary(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self::Stationary(p))
    }

    pub fn safety(params: SafetyParams) -> Result<Self> {
        Ok(Self::Safety(SafetyPolicy::new(params)?))
    }

    /// Break probability for every slot of the batch at `history.last()`.
    pub fn begin_step(&mut self, history: &[f64]) -> Result<f64> {
        match self {
            Self::Stationary(p) => Ok(*p),
            Self::Safety(s) => Ok(if s.step(history) { 1.0 } else { 0.0 }),
            Self::Adaptive(a) => a.begin_step(history.last().copied().unwrap_or(0.0)),
        }
    }

    /// Called with the batch delivered at time `t`.
    pub fn observe(&mut self, t: f64, draws: &[Draw], served: &[bool]) {
        if let Self::Adaptive(a) = self {
            a.observe(t, draws, served);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safety_triggers_on_fast_window() {
        let mut s = SafetyPolicy::new(SafetyParams::default()).unwrap();
        let history: Vec<f64> = (0..=10).map(|i| 1.0 + i as f64 * 0.05).collect();
        assert!((trailing_rate(&history, 10).unwrap() - 20.0).abs() < 1e-9);
        assert!(s.step(&history));
        assert!(s.in_cooldown(1.5 + 0.49));
        assert!(!s.in_cooldown(1.5 + 0.5));
    }

    #[test]
    fn safety_serves_content_below_threshold() {
        let mut s = SafetyPolicy::new(SafetyParams { threshold: 14.0, ..SafetyParams::default() }).unwrap();
        let history: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        assert!((trailing_rate(&history, 10).unwrap() - 10.0).abs() < 1e-9);
        assert!(!s.step(&history));
    }

    #[test]
    fn safety_needs_full_window() {
        let mut s = SafetyPolicy::new(SafetyParams::default()).unwrap();
        let history: Vec<f64> = (0..10).map(|i| i as f64 * 1e-3).collect();
        assert!(!s.step(&history));
        assert!(!s.step(&[]));
    }

    #[test]
    fn cooldown_overrides_slow_rate() {
        let mut s = SafetyPolicy::new(SafetyParams::default()).unwrap();
        let mut history: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        assert!(s.step(&history));
        // A slow event inside the cooldown still gets a full break batch.
        history.push(0.9);
        assert!(s.step(&history));
        history.push(1.1);
        assert!(!s.step(&history));
    }

    #[test]
    fn invalid_parameters() {
        assert!(SafetyPolicy::new(SafetyParams { lookback: 0, ..SafetyParams::default() }).is_err());
        assert!(SafetyPolicy::new(SafetyParams { cooldown: 0.0, ..SafetyParams::default() }).is_err());
        assert!(BreakingPolicy::stationary(1.2).is_err());
    }

    #[test]
    fn no_ratings_keeps_policy() {
        let f = UserFeatures::new(vec![0.0, 0.0, 3.0]).unwrap();
        assert_eq!(adaptive_policy_update(&[], &f, &[], 0.95).unwrap(), None);
    }
}
