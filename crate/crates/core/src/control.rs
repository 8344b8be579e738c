//! Closed-form equilibria and optimal stationary breaking control.
//!
//! With `x = 1/(1-p)` the equilibrium drive is the downward parabola
//! `(γ/δ)·x·(1 - (α/β)·x)` on `x ∈ [1, β/α]` and zero beyond it, so
//! everything here reduces to the two ratios `α/β` and `γ/δ`.

use crate::error::{LvError, Result};
use crate::lv::LvParams;
use crate::scalar::Scalar;

/// Long-run state of the controlled system for a fixed `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium<T> {
    pub lambda_star: T,
    pub q_star: T,
}

impl<T: Scalar> Equilibrium<T> {
    /// The extinct branch: no drive left, interest fully recovered.
    pub fn extinct() -> Self {
        Self { lambda_star: T::zero(), q_star: T::one() }
    }

    pub fn is_extinct(&self) -> bool {
        self.lambda_star == T::zero()
    }
}

/// Best stationary breaking probability and the drive it sustains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPolicy<T> {
    pub p_opt: T,
    pub lambda_opt: T,
}

fn check_probability<T: Scalar>(name: &str, p: T) -> Result<()> {
    if !p.is_usable() || p < T::zero() || p > T::one() {
        return Err(LvError::Precondition(format!("{name} = {p} must lie in [0, 1]")));
    }
    Ok(())
}

fn require_positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v <= T::zero() {
        return Err(LvError::Precondition(format!("{name} must be > 0")));
    }
    Ok(())
}

/// Equilibrium `(λ*, q*)` under stationary breaking probability `p`.
///
/// On the boundary `p = 1 - α/β` both branches give `(0, 1)`.
pub fn equilibrium<T: Scalar>(params: &LvParams<T>, p: T) -> Result<Equilibrium<T>> {
    params.validate()?;
    require_positive("beta", params.beta)?;
    require_positive("gamma", params.gamma)?;
    require_positive("delta", params.delta)?;
    check_probability("p", p)?;

    if p == T::one() {
        return Ok(Equilibrium::extinct());
    }
    let ratio = params.alpha / params.beta;
    let x = T::one() / (T::one() - p);
    let q_star = ratio * x;
    if q_star > T::one() {
        return Ok(Equilibrium::extinct());
    }
    let lambda_star = params.gamma / params.delta * x * (T::one() - q_star);
    Ok(Equilibrium { lambda_star, q_star })
}

/// Upper bound `βγ/(4αδ)` on `λ*(p)` over all `p`.
pub fn equilibrium_upper_bound<T: Scalar>(params: &LvParams<T>) -> Result<T> {
    params.validate()?;
    require_positive("alpha", params.alpha)?;
    require_positive("delta", params.delta)?;
    Ok(params.beta * params.gamma / (T::lit(4.0) * params.alpha * params.delta))
}

/// Breaking probability that maximizes the equilibrium for a known `α/β`,
/// without any cap: `1 - 2·α/β` below the phase transition, else zero.
pub fn policy_for_ratio<T: Scalar>(alpha_over_beta: T) -> T {
    if alpha_over_beta >= T::half() {
        T::zero()
    } else {
        (T::one() - T::two() * alpha_over_beta).min_of(T::one())
    }
}

/// Optimal stationary policy. Users with `α/β > 1` churn under every
/// stationary policy and get `(0, 0)`.
pub fn optimal_policy<T: Scalar>(params: &LvParams<T>) -> Result<OptimalPolicy<T>> {
    params.validate()?;
    require_positive("alpha", params.alpha)?;
    require_positive("beta", params.beta)?;
    require_positive("delta", params.delta)?;

    let ratio = params.alpha / params.beta;
    let scale = params.gamma / params.delta;
    let policy = if ratio <= T::half() {
        OptimalPolicy {
            p_opt: T::one() - T::two() * ratio,
            lambda_opt: scale / (T::lit(4.0) * ratio),
        }
    } else if ratio <= T::one() {
        OptimalPolicy { p_opt: T::zero(), lambda_opt: scale * (T::one() - ratio) }
    } else {
        OptimalPolicy { p_opt: T::zero(), lambda_opt: T::zero() }
    };
    Ok(policy)
}

/// Worst-case error of the two-point `α/β` estimate when both predicted
/// rates are off by at most `eps`.
///
/// Only valid while `eps ≤ (γ/δ)·|p1 - p0|/4`.
pub fn alpha_beta_error_bound<T: Scalar>(params: &LvParams<T>, p0: T, p1: T, eps: T) -> Result<T> {
    params.validate()?;
    require_positive("alpha", params.alpha)?;
    require_positive("beta", params.beta)?;
    require_positive("gamma", params.gamma)?;
    require_positive("delta", params.delta)?;
    check_probability("p0", p0)?;
    check_probability("p1", p1)?;
    if p0 == p1 {
        return Err(LvError::Precondition("probe probabilities must differ".into()));
    }
    if eps < T::zero() {
        return Err(LvError::Precondition("eps must be >= 0".into()));
    }
    let gap = (p1 - p0).abs();
    let threshold = params.gamma / params.delta * gap / T::lit(4.0);
    if eps > threshold {
        return Err(LvError::BoundNotApplicable(format!(
            "eps = {eps} exceeds (γ/δ)|p1-p0|/4 = {threshold}"
        )));
    }
    Ok(eps / gap * (params.beta * params.delta) / (params.alpha * params.gamma))
}

/// Bound on the equilibrium drive lost by acting on an estimate `ab_hat`
/// of `α/β` instead of the true ratio.
///
/// Valid while `|α/β - ab_hat| ≤ min(α/(2β), 1)`. The linear branch has
/// slope `(γ/δ)/(2(α/β)²)`; the loss reaches the constant branch
/// `(γ/δ)/(4α/β)` exactly at `ab_hat = α/(2β)`.
pub fn estimation_price_bound<T: Scalar>(params: &LvParams<T>, ab_hat: T) -> Result<T> {
    params.validate()?;
    require_positive("alpha", params.alpha)?;
    let ratio = params.alpha_over_beta()?;
    let scale = params.gamma_over_delta()?;
    let deviation = (ratio - ab_hat).abs();
    let limit = (ratio / T::two()).min_of(T::one());
    if deviation > limit {
        return Err(LvError::BoundNotApplicable(format!(
            "|α/β - ab_hat| = {deviation} exceeds min(α/(2β), 1) = {limit}"
        )));
    }
    let linear = deviation / (T::two() * ratio * ratio);
    let constant = T::one() / (T::lit(4.0) * ratio);
    Ok(scale * linear.min_of(constant))
}

/// Population constants and error magnitudes entering the regret bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs<T> {
    /// Upper bound on `β/α` over the population.
    pub nu: T,
    /// `max γ/δ · max δ/γ` over the population.
    pub mu: T,
    pub p_pair: (T, T),
    pub eps_pred: T,
    pub eps_dev: T,
    pub eps_lv: T,
}

impl<T: Scalar> BoundInputs<T> {
    pub fn validate(&self) -> Result<()> {
        if self.nu < T::one() || self.mu < T::one() {
            return Err(LvError::Precondition("nu and mu must be >= 1".into()));
        }
        check_probability("p_pair.0", self.p_pair.0)?;
        check_probability("p_pair.1", self.p_pair.1)?;
        if self.p_pair.0 == self.p_pair.1 {
            return Err(LvError::Precondition("probe probabilities must differ".into()));
        }
        for (name, v) in [("eps_pred", self.eps_pred), ("eps_dev", self.eps_dev), ("eps_lv", self.eps_lv)] {
            if !v.is_usable() || v < T::zero() {
                return Err(LvError::Precondition(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Scale factor `ν³/2 + (ν + ν²/4)·μ + 2ν` of the regret bound.
pub fn eta_tpp<T: Scalar>(nu: T, mu: T) -> T {
    let four = T::lit(4.0);
    nu * nu * nu / T::two() + (nu + nu * nu / four) * mu + T::two() * nu
}

/// Regret bound `η/|p1 - p0| · (ε_pred + ε_dev + ε_LV)` of the learned policy.
pub fn regret_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    inputs.validate()?;
    let gap = (inputs.p_pair.1 - inputs.p_pair.0).abs();
    let eps = inputs.eps_pred + inputs.eps_dev + inputs.eps_lv;
    Ok(eta_tpp(inputs.nu, inputs.mu) / gap * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i128>;

    fn theta(a: f64, b: f64, g: f64, d: f64) -> LvParams<f64> {
        LvParams::new(a, b, g, d).unwrap()
    }

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn equilibrium_examples() {
        let t = theta(1.0, 2.0, 1.0, 1.0);
        assert_eq!(equilibrium(&t, 0.0).unwrap(), Equilibrium { lambda_star: 0.5, q_star: 0.5 });
        assert_eq!(equilibrium(&t, 0.6).unwrap(), Equilibrium::extinct());
        assert_eq!(equilibrium(&theta(0.1, 9.0, 3.0, 0.5), 1.0).unwrap(), Equilibrium::extinct());
    }

    #[test]
    fn equilibrium_boundary_is_continuous() {
        let t = LvParams::new(q(1, 1), q(2, 1), q(1, 1), q(1, 1)).unwrap();
        let eq = equilibrium(&t, q(1, 2)).unwrap();
        assert_eq!(eq, Equilibrium::extinct());
    }

    #[test]
    fn equilibrium_preconditions() {
        assert!(equilibrium(&theta(1.0, 0.0, 1.0, 1.0), 0.1).is_err());
        assert!(equilibrium(&theta(1.0, 2.0, 0.0, 1.0), 0.1).is_err());
        assert!(equilibrium(&theta(1.0, 2.0, 1.0, 0.0), 0.1).is_err());
        assert!(equilibrium(&theta(1.0, 2.0, 1.0, 1.0), -0.1).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(equilibrium_upper_bound(&theta(1.0, 4.0, 1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(equilibrium_upper_bound(&theta(1.0, 2.0, 1.0, 1.0)).unwrap(), 0.5);
        assert_eq!(equilibrium_upper_bound(&theta(1.0, 1.0, 1.0, 1.0)).unwrap(), 0.25);
        assert_eq!(equilibrium(&theta(1.0, 1.0, 1.0, 1.0), 0.0).unwrap().lambda_star, 0.0);
        assert!(equilibrium_upper_bound(&theta(0.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn upper_bound_matches_grid_maximum() {
        // Oracle: dense sweep of the closed-form equilibrium.
        let t = theta(1.0, 4.0, 1.0, 1.0);
        let best = (0..=10_000)
            .map(|i| equilibrium(&t, i as f64 / 10_000.0).unwrap().lambda_star)
            .fold(0.0, f64::max);
        assert!((best - 1.0).abs() < 1e-8);
        let t = theta(1.0, 2.0, 1.0, 1.0);
        assert!((0..=10_000).all(|i| equilibrium(&t, i as f64 / 1e4).unwrap().lambda_star <= 0.5));
    }

    #[test]
    fn optimal_policy_examples_exact() {
        let t = LvParams::new(q(1, 1), q(4, 1), q(1, 1), q(1, 1)).unwrap();
        assert_eq!(optimal_policy(&t).unwrap(), OptimalPolicy { p_opt: q(1, 2), lambda_opt: q(1, 1) });
        let t = LvParams::new(q(1, 1), q(3, 2), q(1, 1), q(1, 1)).unwrap();
        assert_eq!(optimal_policy(&t).unwrap(), OptimalPolicy { p_opt: q(0, 1), lambda_opt: q(1, 3) });
        let t = LvParams::new(q(1, 1), q(2, 1), q(1, 1), q(1, 1)).unwrap();
        assert_eq!(optimal_policy(&t).unwrap(), OptimalPolicy { p_opt: q(0, 1), lambda_opt: q(1, 2) });
        let t = LvParams::new(q(3, 1), q(2, 1), q(1, 1), q(1, 1)).unwrap();
        assert_eq!(optimal_policy(&t).unwrap(), OptimalPolicy { p_opt: q(0, 1), lambda_opt: q(0, 1) });
    }

    #[test]
    fn optimal_policy_matches_grid_search() {
        let t = theta(1.0, 4.0, 1.0, 1.0);
        let (arg, _) = (0..=10_000)
            .map(|i| {
                let p = i as f64 / 1e4;
                (p, equilibrium(&t, p).unwrap().lambda_star)
            })
            .fold((0.0, f64::MIN), |acc, v| if v.1 > acc.1 { v } else { acc });
        let opt = optimal_policy(&t).unwrap();
        assert!((arg - opt.p_opt).abs() <= 1e-4);
    }

    #[test]
    fn alpha_beta_bound_examples() {
        let t = theta(1.0, 4.0, 1.0, 1.0);
        assert!((alpha_beta_error_bound(&t, 0.0, 0.2, 0.05).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(alpha_beta_error_bound(&t, 0.0, 0.2, 0.0).unwrap(), 0.0);
        assert!(matches!(
            alpha_beta_error_bound(&t, 0.0, 0.2, 0.06),
            Err(LvError::BoundNotApplicable(_))
        ));
        assert!(alpha_beta_error_bound(&t, 0.2, 0.2, 0.01).is_err());
    }

    #[test]
    fn price_bound_examples() {
        let t = theta(1.0, 4.0, 1.0, 1.0);
        assert_eq!(estimation_price_bound(&t, 0.25).unwrap(), 0.0);
        // slope (γ/δ)/(2·0.25²) = 8 on a deviation of 0.05
        assert!((estimation_price_bound(&t, 0.30).unwrap() - 0.4).abs() < 1e-12);
        assert!(matches!(estimation_price_bound(&t, 0.40), Err(LvError::BoundNotApplicable(_))));
    }

    #[test]
    fn price_bound_dominates_true_price() {
        for &(a, b) in &[(1.0, 4.0), (1.0, 2.5), (1.0, 1.6), (0.3, 3.0), (1.3, 1.5)] {
            let t = theta(a, b, 0.7, 0.3);
            let r = a / b;
            let opt = optimal_policy(&t).unwrap().lambda_opt;
            let half_width = (r / 2.0).min(1.0) * (1.0 - 1e-12);
            for i in 0..=2000 {
                let ab_hat = (r - half_width + 2.0 * half_width * i as f64 / 2000.0).max(0.0);
                let realized = equilibrium(&t, policy_for_ratio(ab_hat)).unwrap().lambda_star;
                let bound = estimation_price_bound(&t, ab_hat).unwrap();
                assert!(opt - realized <= bound + 1e-12, "r={r} ab_hat={ab_hat}");
            }
        }
    }

    #[test]
    fn regret_bound_examples() {
        let base = BoundInputs { nu: 1.0_f64, mu: 1.0, p_pair: (0.0, 1.0), eps_pred: 0.5, eps_dev: 0.25, eps_lv: 0.25 };
        assert!((regret_bound(&base).unwrap() - 3.75).abs() < 1e-12);
        let zero = BoundInputs { eps_pred: 0.0, eps_dev: 0.0, eps_lv: 0.0, ..base };
        assert_eq!(regret_bound(&zero).unwrap(), 0.0);
        let halved = BoundInputs { p_pair: (0.25, 0.75), ..base };
        assert!((regret_bound(&halved).unwrap() - 7.5).abs() < 1e-12);
        assert!(regret_bound(&BoundInputs { nu: 0.5, ..base }).is_err());
        assert!(regret_bound(&BoundInputs { p_pair: (0.3, 0.3), ..base }).is_err());
    }

    #[test]
    fn eta_is_exact_over_rationals() {
        assert_eq!(eta_tpp(q(1, 1), q(1, 1)), q(15, 4));
        assert_eq!(eta_tpp(q(2, 1), q(3, 1)), q(4, 1) + q(3, 1) * q(3, 1) + q(4, 1));
    }
}
