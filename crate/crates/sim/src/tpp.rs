//! Discrete-time event samplers.
//!
//! Per step, slots are sampled in order: for each slot the serve indicator,
//! then the recommended item. Seeded traces depend on this order.

use lvbreak_core::{equilibrium, Constants, State};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::policy::BreakingPolicy;
use crate::sampler::{Draw, ItemSampler};
use crate::sequence::{Event, InteractionSequence, BREAK_MARKER};

pub const DEFAULT_BATCH: usize = 10;
pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_INIT_NOISE: f64 = 0.1;
pub const DEFAULT_CHURN_FLOOR: f64 = 1e-6;
pub const DEFAULT_TAU: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Slots per step, `B`.
    pub batch: usize,
    pub horizon: f64,
    /// Half-width of the relative uniform perturbation of the initial state.
    pub init_noise: f64,
    /// Drive at or below this ends the sequence as churned.
    pub churn_floor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            batch: DEFAULT_BATCH,
            horizon: DEFAULT_HORIZON,
            init_noise: DEFAULT_INIT_NOISE,
            churn_floor: DEFAULT_CHURN_FLOOR,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(SimError::Config("batch size must be positive".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SimError::Config(format!("horizon {} must be > 0", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.init_noise) {
            return Err(SimError::Config(format!("init noise {} outside [0, 1)", self.init_noise)));
        }
        if !(self.churn_floor >= 0.0) {
            return Err(SimError::Config(format!("churn floor {} must be >= 0", self.churn_floor)));
        }
        Ok(())
    }
}

/// Latent per-user behavior parameters. `β` comes from the item sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLatent {
    pub constants: Constants,
    /// Rate scale of the stateless model.
    pub tau: f64,
}

impl Default for UserLatent {
    fn default() -> Self {
        Self { constants: Constants::DEFAULT, tau: DEFAULT_TAU }
    }
}

/// Equilibrium of `(α, E_ψ[β], γ, δ)` without breaks, perturbed by
/// independent relative noise per coordinate. `q` is capped at 1.
pub fn initial_state<S: ItemSampler, R: Rng + ?Sized>(
    user: &UserLatent,
    sampler: &S,
    config: &SimConfig,
    rng: &mut R,
) -> Result<State> {
    let theta = user.constants.with_beta(sampler.mean_beta())?;
    let eq = equilibrium(&theta, 0.0)?;
    let mut xi = || if config.init_noise > 0.0 { rng.random_range(-config.init_noise..config.init_noise) } else { 0.0 };
    let lambda = eq.lambda_star * (1.0 + xi());
    let q = (eq.q_star * (1.0 + xi())).min(1.0);
    Ok(State { lambda, q })
}

fn draw_batch<S: ItemSampler, R: Rng + ?Sized>(
    p: f64,
    batch: usize,
    sampler: &S,
    rng: &mut R,
) -> (Vec<bool>, Vec<Draw>) {
    let mut served = Vec::with_capacity(batch);
    let mut draws = Vec::with_capacity(batch);
    for _ in 0..batch {
        served.push(rng.random_bool(1.0 - p));
        draws.push(sampler.draw(rng));
    }
    (served, draws)
}

fn event(t: f64, served: Vec<bool>, draws: &[Draw]) -> Event {
    let items = draws.iter().zip(&served).map(|(d, &s)| if s { d.item } else { BREAK_MARKER }).collect();
    Event { t, items, indicators: served }
}

/// LV-discretized point process starting from a perturbed equilibrium.
pub fn sample_lv_sequence<S: ItemSampler, R: Rng + ?Sized>(
    user: &UserLatent,
    policy: &mut BreakingPolicy,
    sampler: &S,
    config: &SimConfig,
    rng: &mut R,
) -> Result<InteractionSequence> {
    config.validate()?;
    let init = initial_state(user, sampler, config, rng)?;
    sample_lv_sequence_from(user, init, policy, sampler, config, rng)
}

/// LV-discretized point process from an explicit initial state.
///
/// Each step uses `Δt = 1/λ_i` in the Euler update and then advances time by
/// `1/λ_{i+1}`. A drive at or below the churn floor, negative or nonfinite
/// ends the sequence as churned after the current event is recorded.
pub fn sample_lv_sequence_from<S: ItemSampler, R: Rng + ?Sized>(
    user: &UserLatent,
    init: State,
    policy: &mut BreakingPolicy,
    sampler: &S,
    config: &SimConfig,
    rng: &mut R,
) -> Result<InteractionSequence> {
    config.validate()?;
    let Constants { alpha, gamma, delta } = user.constants;
    let b = config.batch as f64;
    let mut seq = InteractionSequence { events: Vec::new(), horizon: config.horizon, batch: config.batch, churned: false };
    let (mut lambda, mut q) = (init.lambda, init.q.clamp(0.0, 1.0));
    if !(lambda.is_finite() && lambda > config.churn_floor) {
        seq.churned = true;
        return Ok(seq);
    }
    let mut times: Vec<f64> = Vec::new();
    let mut t = 0.0;
    while t < config.horizon {
        times.push(t);
        let p = policy.begin_step(&times)?;
        let (served, draws) = draw_batch(p, config.batch, sampler, rng);
        policy.observe(t, &draws, &served);

        let (mut gain, mut n_served) = (0.0, 0.0);
        for (d, &s) in draws.iter().zip(&served) {
            if s {
                gain += d.beta;
                n_served += 1.0;
            }
        }
        let dt = 1.0 / lambda;
        let next_lambda = lambda + (-alpha + gain / b * q) * lambda * dt;
        let next_q = (q + (gamma * (1.0 - q) - n_served * delta / b * lambda) * q * dt).clamp(0.0, 1.0);
        seq.events.push(event(t, served, &draws));

        if !(next_lambda.is_finite() && next_lambda > config.churn_floor) {
            seq.churned = true;
            break;
        }
        lambda = next_lambda;
        q = next_q;
        t += 1.0 / lambda;
    }
    Ok(seq)
}

/// Stateless point process: the gap to the next batch is
/// `(1/τ) / mean_k(I_k·r_k)`. An all-break batch ends the sequence.
pub fn sample_stateless_sequence<S: ItemSampler, R: Rng + ?Sized>(
    user: &UserLatent,
    policy: &mut BreakingPolicy,
    sampler: &S,
    config: &SimConfig,
    rng: &mut R,
) -> Result<InteractionSequence> {
    config.validate()?;
    if !(user.tau.is_finite() && user.tau > 0.0) {
        return Err(SimError::Config(format!("tau {} must be > 0", user.tau)));
    }
    let b = config.batch as f64;
    let mut seq = InteractionSequence { events: Vec::new(), horizon: config.horizon, batch: config.batch, churned: false };
    let mut times: Vec<f64> = Vec::new();
    let mut t = 0.0;
    while t < config.horizon {
        times.push(t);
        let p = policy.begin_step(&times)?;
        let (served, draws) = draw_batch(p, config.batch, sampler, rng);
        policy.observe(t, &draws, &served);
        let mean_rating = draws.iter().zip(&served).filter(|(_, &s)| s).map(|(d, _)| d.rating).sum::<f64>() / b;
        seq.events.push(event(t, served, &draws));
        if mean_rating <= 0.0 {
            break;
        }
        t += 1.0 / (user.tau * mean_rating);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::FixedSampler;
    use crate::sequence::engagement_rate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn user(alpha: f64) -> UserLatent {
        UserLatent { constants: Constants { alpha, gamma: 0.2, delta: 0.01 }, tau: 4.0 }
    }

    #[test]
    fn full_breaking_decays_by_alpha_each_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let init = State { lambda: 5.0, q: 0.5 };
        let seq = sample_lv_sequence_from(
            &user(1.3),
            init,
            &mut BreakingPolicy::Stationary(1.0),
            &FixedSampler::new(5.0),
            &SimConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(seq.len(), 4);
        assert!(seq.churned);
        // Times advance by 1/λ_{i+1} with λ = 3.7, 2.4, 1.1.
        let want = [0.0, 1.0 / 3.7, 1.0 / 3.7 + 1.0 / 2.4, 1.0 / 3.7 + 1.0 / 2.4 + 1.0 / 1.1];
        for (e, w) in seq.events.iter().zip(want) {
            assert!((e.t - w).abs() < 1e-12);
            assert!(e.items.iter().all(|&x| x == BREAK_MARKER));
        }
        seq.validate().unwrap();
    }

    #[test]
    fn churn_regime_terminates() {
        // β = 1 < α = 1.3: no positive equilibrium; start from a nonzero drive.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = sample_lv_sequence_from(
            &user(1.3),
            State { lambda: 10.0, q: 1.0 },
            &mut BreakingPolicy::default_policy(),
            &FixedSampler::new(1.0),
            &SimConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!(seq.churned);
        assert!(seq.events.last().unwrap().t < 100.0);
    }

    #[test]
    fn extinct_start_is_empty_and_churned() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = sample_lv_sequence(
            &user(1.3),
            &mut BreakingPolicy::default_policy(),
            &FixedSampler::new(1.0),
            &SimConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!(seq.is_empty() && seq.churned);
    }

    #[test]
    fn stateless_constant_rating() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seq = sample_stateless_sequence(
            &user(1.3),
            &mut BreakingPolicy::default_policy(),
            &FixedSampler::new(5.0),
            &SimConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!((seq.events[1].t - 0.05).abs() < 1e-15);
        // 2000 steps of 0.05 up to rounding at the horizon.
        assert!((engagement_rate(&seq) - 20.0).abs() <= 0.01 + 1e-12);
        assert!(!seq.churned);
    }

    #[test]
    fn stateless_full_breaking_stops_after_one_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = sample_stateless_sequence(
            &user(1.3),
            &mut BreakingPolicy::Stationary(1.0),
            &FixedSampler::new(5.0),
            &SimConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(seq.len(), 1);
        assert!(!seq.churned);
    }

    #[test]
    fn initial_state_near_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = UserLatent::default();
        for _ in 0..100 {
            let s = initial_state(&u, &FixedSampler::new(5.0), &SimConfig::default(), &mut rng).unwrap();
            assert!((s.lambda / 20.0 - 0.74).abs() <= 0.1 * 0.74 + 1e-12);
            assert!((s.q / 0.26 - 1.0).abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { batch: 0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { horizon: 0.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { init_noise: 1.0, ..SimConfig::default() }.validate().is_err());
    }
}
