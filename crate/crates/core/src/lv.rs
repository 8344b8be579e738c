//! Controlled Lotka-Volterra user dynamics.
//!
//! Drive `lambda` (the instantaneous consumption rate) feeds on interest `q`;
//! a stationary breaking probability `p` scales the interaction terms by
//! `1 - p`:
//!
//! ```text
//! dλ/dt = -α λ + β λ q (1 - p)
//! dq/dt =  γ q (1 - q) - δ λ q (1 - p)
//! ```

use crate::error::{LvError, Result};
use crate::scalar::{Real, Scalar};

/// Largest excursion of a state variable outside its domain that is
/// attributed to discretization and silently clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-6;

/// Default fixed integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// The four rates `(α, β, γ, δ)` describing one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvParams<T> {
    /// Decay rate of drive.
    pub alpha: T,
    /// Interest-mediated reinforcement of drive.
    pub beta: T,
    /// Natural replenishment rate of interest.
    pub gamma: T,
    /// Depletion of interest per unit drive.
    pub delta: T,
}

/// Rates held fixed across users; `β` varies with the recommended items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvConstants<T> {
    pub alpha: T,
    pub gamma: T,
    pub delta: T,
}

impl LvConstants<f64> {
    /// Experiment defaults: α = 1.3, γ = 0.2, δ = 0.01.
    pub const DEFAULT: Self = Self { alpha: 1.3, gamma: 0.2, delta: 0.01 };
}

impl<T: Scalar> LvConstants<T> {
    pub fn with_beta(&self, beta: T) -> Result<LvParams<T>> {
        LvParams::new(self.alpha, beta, self.gamma, self.delta)
    }
}

impl<T: Scalar> LvParams<T> {
    pub fn new(alpha: T, beta: T, gamma: T, delta: T) -> Result<Self> {
        let params = Self { alpha, beta, gamma, delta };
        params.validate()?;
        Ok(params)
    }

    /// Checks that every rate is a usable, nonnegative number.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !v.is_usable() || v < T::zero() {
                return Err(LvError::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// `α/β`, the engagement ratio that alone decides the optimal policy.
    pub fn alpha_over_beta(&self) -> Result<T> {
        self.validate()?;
        if self.beta <= T::zero() {
            return Err(LvError::Precondition("beta must be > 0".into()));
        }
        Ok(self.alpha / self.beta)
    }

    /// `γ/δ`, the scale of the equilibrium curve.
    pub fn gamma_over_delta(&self) -> Result<T> {
        self.validate()?;
        if self.delta <= T::zero() {
            return Err(LvError::Precondition("delta must be > 0".into()));
        }
        Ok(self.gamma / self.delta)
    }

    /// Time derivative of the state under breaking probability `p`.
    pub fn vector_field(&self, p: T, state: LvState<T>) -> (T, T) {
        let engaged = T::one() - p;
        let lambda = state.lambda;
        let q = state.q;
        let d_lambda = -self.alpha * lambda + self.beta * lambda * q * engaged;
        let d_q = self.gamma * q * (T::one() - q) - self.delta * lambda * q * engaged;
        (d_lambda, d_q)
    }
}

/// Drive and interest at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvState<T> {
    pub lambda: T,
    pub q: T,
}

impl<T: Scalar> LvState<T> {
    pub fn new(lambda: T, q: T) -> Result<Self> {
        let state = Self { lambda, q };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_usable() || self.lambda < T::zero() {
            return Err(LvError::Precondition(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !self.q.is_usable() || self.q < T::zero() || self.q > T::one() {
            return Err(LvError::Precondition(format!("q = {} must lie in [0, 1]", self.q)));
        }
        Ok(())
    }
}

/// Sampled solution of the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<LvState<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, LvState<T>)> {
        Some((*self.times.last()?, *self.states.last()?))
    }
}

/// Fixed-step classic RK4 integration of the controlled system from `init`
/// over `[0, horizon]`, recording every step.
pub fn integrate<T: Real>(
    params: &LvParams<T>,
    p: T,
    init: LvState<T>,
    dt: T,
    horizon: T,
) -> Result<Trajectory<T>> {
    let mut times = vec![T::zero()];
    let mut states = vec![init];
    run(params, p, init, dt, horizon, |t, s| {
        times.push(t);
        states.push(s);
    })?;
    Ok(Trajectory { times, states })
}

/// Same as [`integrate`] but only returns the state at `horizon`.
pub fn integrate_to<T: Real>(
    params: &LvParams<T>,
    p: T,
    init: LvState<T>,
    dt: T,
    horizon: T,
) -> Result<LvState<T>> {
    run(params, p, init, dt, horizon, |_, _| {})
}

fn run<T: Real>(
    params: &LvParams<T>,
    p: T,
    init: LvState<T>,
    dt: T,
    horizon: T,
    mut record: impl FnMut(T, LvState<T>),
) -> Result<LvState<T>> {
    params.validate()?;
    init.validate()?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(LvError::Precondition(format!("dt = {dt} must be > 0")));
    }
    if !(horizon > dt) || !horizon.is_finite() {
        return Err(LvError::Precondition(format!("horizon = {horizon} must exceed dt = {dt}")));
    }
    if !(T::zero()..=T::one()).contains(&p) {
        return Err(LvError::Precondition(format!("p = {p} must lie in [0, 1]")));
    }

    let steps = (horizon / dt).ceil().to_usize().ok_or_else(|| {
        LvError::Precondition("horizon / dt does not fit in usize".into())
    })?;
    let tol = T::lit(CLAMP_TOLERANCE);
    let mut state = init;
    for step in 1..=steps {
        let t_prev = dt * T::from_usize(step - 1).unwrap();
        // Final step lands exactly on the horizon.
        let h = if step == steps { horizon - t_prev } else { dt };
        state = rk4_step(params, p, state, h);
        let t = t_prev + h;
        if !state.lambda.is_finite() || !state.q.is_finite() {
            return Err(LvError::IntegrationDiverged { step, time: t.to_f64_lossy() });
        }
        state.q = clamp_unit(state.q, T::zero(), Some(T::one()), tol, step)?;
        state.lambda = clamp_unit(state.lambda, T::zero(), None, tol, step)?;
        record(t, state);
    }
    Ok(state)
}

fn clamp_unit<T: Real>(v: T, lo: T, hi: Option<T>, tol: T, step: usize) -> Result<T> {
    if v < lo {
        let excursion = lo - v;
        if excursion > tol {
            return Err(LvError::StepTooLarge { step, excursion: excursion.to_f64_lossy() });
        }
        return Ok(lo);
    }
    if let Some(hi) = hi {
        if v > hi {
            let excursion = v - hi;
            if excursion > tol {
                return Err(LvError::StepTooLarge { step, excursion: excursion.to_f64_lossy() });
            }
            return Ok(hi);
        }
    }
    Ok(v)
}

fn rk4_step<T: Real>(params: &LvParams<T>, p: T, s: LvState<T>, h: T) -> LvState<T> {
    let two = T::two();
    let half_h = h / two;
    let shifted = |k: (T, T), scale: T| LvState { lambda: s.lambda + scale * k.0, q: s.q + scale * k.1 };

    let k1 = params.vector_field(p, s);
    let k2 = params.vector_field(p, shifted(k1, half_h));
    let k3 = params.vector_field(p, shifted(k2, half_h));
    let k4 = params.vector_field(p, shifted(k3, h));
    let sixth = h / T::lit(6.0);
    LvState {
        lambda: s.lambda + sixth * (k1.0 + two * k2.0 + two * k3.0 + k4.0),
        q: s.q + sixth * (k1.1 + two * k2.1 + two * k3.1 + k4.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, g: f64, d: f64) -> LvParams<f64> {
        LvParams::new(a, b, g, d).unwrap()
    }

    #[test]
    fn full_breaking_decouples_into_linear_decay() {
        let theta = params(1.3, 3.0, 0.2, 0.01);
        let init = LvState::new(2.0, 0.5).unwrap();
        let traj = integrate(&theta, 1.0, init, DEFAULT_DT, 1.0).unwrap();
        let (t, s) = traj.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((s.lambda - 2.0 * (-1.3_f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn zero_interest_is_invariant() {
        let theta = params(0.7, 2.0, 0.5, 0.3);
        let init = LvState::new(2.0, 0.0).unwrap();
        let traj = integrate(&theta, 0.3, init, 1e-2, 3.0).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert_eq!(s.q, 0.0);
            assert!((s.lambda - 2.0 * (-0.7 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn converges_to_interior_equilibrium() {
        let theta = params(1.0, 2.0, 1.0, 1.0);
        let init = LvState::new(0.55, 0.45).unwrap();
        let end = integrate_to(&theta, 0.0, init, 1e-2, 500.0).unwrap();
        assert!((end.lambda - 0.5).abs() < 1e-3);
        assert!((end.q - 0.5).abs() < 1e-3);
    }

    #[test]
    fn times_strictly_increase_and_end_on_horizon() {
        let theta = params(1.0, 2.0, 1.0, 1.0);
        let init = LvState::new(0.3, 0.9).unwrap();
        let traj = integrate(&theta, 0.1, init, 0.03, 1.0).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert_eq!(traj.len(), traj.states.len());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let theta = params(1.0, 50.0, 40.0, 30.0);
        let init = LvState::new(5.0, 0.9).unwrap();
        let err = integrate(&theta, 0.0, init, 0.5, 10.0).unwrap_err();
        assert!(
            matches!(err, LvError::StepTooLarge { .. } | LvError::IntegrationDiverged { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn overflow_reports_divergence() {
        let theta = params(0.0, 1e300, 0.0, 0.0);
        let init = LvState::new(1e10, 1.0).unwrap();
        let err = integrate(&theta, 0.0, init, 1.0, 10.0).unwrap_err();
        assert_eq!(err, LvError::IntegrationDiverged { step: 1, time: 1.0 });
    }

    #[test]
    fn preconditions() {
        let theta = params(1.0, 2.0, 1.0, 1.0);
        let init = LvState::new(0.5, 0.5).unwrap();
        assert!(integrate(&theta, 0.0, init, 0.0, 1.0).is_err());
        assert!(integrate(&theta, 0.0, init, 1.0, 0.5).is_err());
        assert!(integrate(&theta, 1.5, init, 0.1, 1.0).is_err());
        assert!(LvState::new(0.5, 1.2).is_err());
        assert!(LvParams::new(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(LvParams::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let theta = LvParams::new(1.0_f32, 2.0, 1.0, 1.0).unwrap();
        let init = LvState::new(0.55_f32, 0.45).unwrap();
        let end = integrate_to(&theta, 0.0, init, 1e-2, 200.0).unwrap();
        assert!((end.lambda - 0.5).abs() < 1e-3);
    }
}
