//! Controlled Lotka-Volterra user dynamics, optimal stationary breaking
//! control, and estimation of the equilibrium curve from engagement
//! predictions.
//!
//! All math is generic over the scalar type. The aliases below fix it to
//! `f64` (what the simulator and pipeline use) or to an exact rational.

pub mod control;
pub mod error;
pub mod estimator;
pub mod lv;
pub mod nnls;
pub mod scalar;

pub use control::{
    alpha_beta_error_bound, equilibrium, equilibrium_upper_bound, estimation_price_bound, eta_tpp,
    optimal_policy, policy_for_ratio, regret_bound, BoundInputs, Equilibrium, OptimalPolicy,
};
pub use error::{LvError, Result};
pub use estimator::{
    derive_policy, fit_nnls, fit_two_point, Degeneracy, EquilibriumCurve, PolicyDecision,
    TreatmentPoint, C1_ZERO_THRESHOLD, DEFAULT_P_MAX,
};
pub use lv::{integrate, integrate_to, LvConstants, LvParams, LvState, Trajectory, DEFAULT_DT};
pub use nnls::{nnls_solve, Matrix, NnlsSolution};
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i128>;

pub type Params = LvParams<f64>;
pub type Constants = LvConstants<f64>;
pub type State = LvState<f64>;
pub type Curve = EquilibriumCurve<f64>;
pub type Decision = PolicyDecision<f64>;
pub type Point = TreatmentPoint<f64>;

pub type ExactParams = LvParams<Rational>;
pub type ExactCurve = EquilibriumCurve<Rational>;
