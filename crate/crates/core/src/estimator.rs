//! Fitting the equilibrium curve `λ*(x) = c1·x - c2·x²`, `x = 1/(1-p)`,
//! to predicted engagement rates and turning it into a breaking policy.
//!
//! The coefficients are `c1 = γ/δ` and `c2 = (α/β)(γ/δ)`, so their ratio
//! estimates `α/β`, the only quantity the optimal policy depends on.

use crate::control::policy_for_ratio;
use crate::error::{LvError, Result};
use crate::nnls::{nnls_solve, Matrix};
use crate::scalar::{Real, Scalar};

/// Default cap on the learned breaking probability.
pub const DEFAULT_P_MAX: f64 = 0.95;

/// `c1` at or below this is treated as "no signal".
pub const C1_ZERO_THRESHOLD: f64 = 1e-12;

/// A probe breaking probability paired with the engagement rate predicted
/// (or observed) under it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreatmentPoint<T> {
    pub p: T,
    pub f: T,
}

impl<T: Scalar> TreatmentPoint<T> {
    pub fn new(p: T, f: T) -> Result<Self> {
        let point = Self { p, f };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p.is_usable() || self.p < T::zero() || self.p >= T::one() {
            return Err(LvError::Precondition(format!("probe p = {} must lie in [0, 1)", self.p)));
        }
        if !self.f.is_usable() || self.f < T::zero() {
            return Err(LvError::Precondition(format!("rate f = {} must be >= 0", self.f)));
        }
        Ok(())
    }

    /// `x = 1/(1-p)`
    pub fn x(&self) -> T {
        T::one() / (T::one() - self.p)
    }
}

/// Fitted equilibrium curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumCurve<T> {
    /// Coefficient of `x`; estimates `γ/δ`.
    pub c1: T,
    /// Coefficient of `-x²`; estimates `(α/β)(γ/δ)`.
    pub c2: T,
    /// A coefficient was clipped to zero or the fit carried no signal.
    pub degenerate: bool,
}

impl<T: Scalar> EquilibriumCurve<T> {
    /// Curve value at breaking probability `p`, floored at zero like the
    /// true equilibrium.
    pub fn eval(&self, p: T) -> T {
        if p >= T::one() {
            return T::zero();
        }
        let x = T::one() / (T::one() - p);
        (self.c1 * x - self.c2 * x * x).max_of(T::zero())
    }

    /// Estimated `α/β`, defined only when `c1` carries signal.
    pub fn alpha_over_beta(&self) -> Option<T> {
        if self.c1 <= T::lit(C1_ZERO_THRESHOLD) {
            None
        } else {
            Some(self.c2 / self.c1)
        }
    }
}

/// Why a decision fell back to a boundary value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// `c1 ≈ 0`: predictions carry no usable signal, no breaks served.
    NoSignal,
    /// The formula asked for more breaking than `p_max` allows.
    Capped,
    /// The curve fit clipped a coefficient to zero.
    ClippedFit,
    /// The probes could not be fitted at all (e.g. identical probabilities).
    FitFailed,
}

/// Learned breaking probability for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDecision<T> {
    pub p_hat: T,
    pub ab_hat: Option<T>,
    pub degenerate: Option<Degeneracy>,
}

impl<T: Scalar> PolicyDecision<T> {
    /// The no-breaks decision used when fitting is impossible.
    pub fn fallback(reason: Degeneracy) -> Self {
        Self { p_hat: T::zero(), ab_hat: None, degenerate: Some(reason) }
    }
}

/// Exact two-point fit of the curve (Cramer's rule). Negative coefficients
/// are clipped to zero and flag the curve as degenerate.
pub fn fit_two_point<T: Scalar>(
    pt0: TreatmentPoint<T>,
    pt1: TreatmentPoint<T>,
) -> Result<EquilibriumCurve<T>> {
    pt0.validate()?;
    pt1.validate()?;
    if pt0.p == pt1.p {
        return Err(LvError::Precondition("treatment probabilities must differ".into()));
    }
    let (s0, s1) = (T::one() - pt0.p, T::one() - pt1.p);
    let gap = pt1.p - pt0.p;
    let c1 = (s0 * s0 * pt0.f - s1 * s1 * pt1.f) / gap;
    let c2 = s0 * s1 * (s0 * pt0.f - s1 * pt1.f) / gap;
    Ok(clip(c1, c2, false))
}

fn clip<T: Scalar>(c1: T, c2: T, flagged: bool) -> EquilibriumCurve<T> {
    let mut degenerate = flagged;
    let mut clamp = |v: T| {
        if v < T::zero() {
            degenerate = true;
            T::zero()
        } else {
            v
        }
    };
    let (c1, c2) = (clamp(c1), clamp(c2));
    if c1 <= T::lit(C1_ZERO_THRESHOLD) {
        degenerate = true;
    }
    EquilibriumCurve { c1, c2, degenerate }
}

/// Least-squares fit of the curve to any number of probes, subject to
/// `c1, c2 ≥ 0`.
pub fn fit_nnls<T: Real>(points: &[TreatmentPoint<T>]) -> Result<EquilibriumCurve<T>> {
    for pt in points {
        pt.validate()?;
    }
    let mut distinct: Vec<T> = points.iter().map(|pt| pt.p).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(LvError::Precondition(format!(
            "need at least 2 distinct probe probabilities, got {}",
            distinct.len()
        )));
    }
    let rows: Vec<Vec<T>> = points
        .iter()
        .map(|pt| {
            let x = pt.x();
            vec![x, -(x * x)]
        })
        .collect();
    let targets: Vec<T> = points.iter().map(|pt| pt.f).collect();
    let sol = nnls_solve(&Matrix::from_rows(&rows)?, &targets)?;
    let at_bound = sol.x.iter().any(|v| *v == T::zero());
    Ok(clip(sol.x[0], sol.x[1], at_bound || sol.rank_deficient))
}

/// Turns a fitted curve into a capped breaking probability.
pub fn derive_policy<T: Scalar>(curve: &EquilibriumCurve<T>, p_max: T) -> PolicyDecision<T> {
    let Some(ab_hat) = curve.alpha_over_beta() else {
        return PolicyDecision::fallback(Degeneracy::NoSignal);
    };
    let unclipped = policy_for_ratio(ab_hat);
    let mut degenerate = curve.degenerate.then_some(Degeneracy::ClippedFit);
    let p_hat = if unclipped > p_max {
        degenerate = Some(Degeneracy::Capped);
        p_max
    } else {
        unclipped
    };
    PolicyDecision { p_hat, ab_hat: Some(ab_hat), degenerate }
}
