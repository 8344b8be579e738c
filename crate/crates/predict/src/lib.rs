//! Engagement-rate prediction: one linear regressor per probe breaking
//! probability, plus an oracle that reads the latent dynamics directly.

use std::sync::Arc;

use lvbreak_core::{derive_policy, equilibrium, fit_nnls, Constants, Decision, Degeneracy, LvError, Point};
use lvbreak_recsys::UserFeatures;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Conditioning term added to the normal equations.
pub const DEFAULT_RIDGE: f64 = 1e-8;
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("need at least {needed} examples, got {got}")]
    TooFewExamples { needed: usize, got: usize },

    #[error("feature length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("normal equations are singular")]
    Singular,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported checkpoint version {0}")]
    Version(u32),

    #[error(transparent)]
    Dynamics(#[from] LvError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PredictError>;

/// Users observed under one probe policy, with their engagement rates.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentDataset {
    p: f64,
    horizon: f64,
    features: Vec<UserFeatures>,
    rates: Vec<f64>,
}

impl TreatmentDataset {
    pub fn new(p: f64, horizon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PredictError::InvalidArgument(format!("p = {p} outside [0, 1]")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(PredictError::InvalidArgument(format!("horizon {horizon} must be > 0")));
        }
        Ok(Self { p, horizon, features: Vec::new(), rates: Vec::new() })
    }

    pub fn push(&mut self, features: UserFeatures, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(PredictError::InvalidArgument(format!("rate {rate} must be finite and >= 0")));
        }
        if let Some(first) = self.features.first() {
            if first.len() != features.len() {
                return Err(PredictError::LengthMismatch { expected: first.len(), got: features.len() });
            }
        }
        self.features.push(features);
        self.rates.push(rate);
        Ok(())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn features(&self) -> &[UserFeatures] {
        &self.features
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Anything mapping user features to a nonnegative predicted rate.
pub trait Predictor: Send + Sync {
    fn predict(&self, features: &UserFeatures) -> Result<f64>;
}

/// Linear model `w·[u; 1]`, intercept last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub schema_version: u32,
    pub p: f64,
    pub horizon: f64,
    pub weights: Vec<f64>,
    pub train_rmse: f64,
}

impl Regressor {
    pub fn feature_len(&self) -> usize {
        self.weights.len() - 1
    }

    /// Prediction before clipping.
    pub fn raw_predict(&self, features: &UserFeatures) -> Result<f64> {
        let f = features.as_slice();
        if f.len() != self.feature_len() {
            return Err(PredictError::LengthMismatch { expected: self.feature_len(), got: f.len() });
        }
        let dot: f64 = f.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        Ok(dot + self.weights[f.len()])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let reg: Self = serde_json::from_str(text)?;
        if reg.schema_version != FEATURE_SCHEMA_VERSION {
            return Err(PredictError::Version(reg.schema_version));
        }
        if reg.weights.is_empty() || reg.weights.iter().any(|w| !w.is_finite()) {
            return Err(PredictError::InvalidArgument("checkpoint weights must be finite and nonempty".into()));
        }
        Ok(reg)
    }
}

impl Predictor for Regressor {
    fn predict(&self, features: &UserFeatures) -> Result<f64> {
        predict_rate(self, features)
    }
}

/// Least squares with a small ridge on all weights, solved by Cholesky.
pub fn fit_ols(data: &TreatmentDataset, ridge: f64) -> Result<Regressor> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(PredictError::InvalidArgument(format!("ridge {ridge} must be >= 0")));
    }
    let dim = match data.features.first() {
        Some(f) => f.len() + 1,
        None => return Err(PredictError::TooFewExamples { needed: 1, got: 0 }),
    };
    if data.len() < dim {
        return Err(PredictError::TooFewExamples { needed: dim, got: data.len() });
    }
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut row = DVector::<f64>::zeros(dim);
    for (f, &y) in data.features.iter().zip(&data.rates) {
        row.rows_mut(0, dim - 1).copy_from_slice(f.as_slice());
        row[dim - 1] = 1.0;
        gram.ger(1.0, &row, &row, 1.0);
        rhs.axpy(y, &row, 1.0);
    }
    for i in 0..dim {
        gram[(i, i)] += ridge;
    }
    let chol = gram.cholesky().ok_or(PredictError::Singular)?;
    let w = chol.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(PredictError::Singular);
    }
    let mut reg = Regressor {
        schema_version: FEATURE_SCHEMA_VERSION,
        p: data.p,
        horizon: data.horizon,
        weights: w.iter().copied().collect(),
        train_rmse: 0.0,
    };
    reg.train_rmse = rmse(&reg, data)?;
    Ok(reg)
}

/// `max(0, w·[u; 1])`.
pub fn predict_rate(reg: &Regressor, features: &UserFeatures) -> Result<f64> {
    Ok(reg.raw_predict(features)?.max(0.0))
}

/// Root mean squared error of clipped predictions.
pub fn rmse(reg: &Regressor, data: &TreatmentDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(PredictError::TooFewExamples { needed: 1, got: 0 });
    }
    let mut sq = 0.0;
    for (f, &y) in data.features.iter().zip(&data.rates) {
        let e = predict_rate(reg, f)? - y;
        sq += e * e;
    }
    Ok((sq / data.len() as f64).sqrt())
}

/// Equilibrium rate of the user's dynamics with `β` replaced by its mean
/// under the recommender.
pub fn oracle_predict(constants: &Constants, mean_beta: f64, p: f64) -> Result<f64> {
    let theta = constants.with_beta(mean_beta)?;
    Ok(equilibrium(&theta, p)?.lambda_star)
}

/// A predictor tied to the breaking probability it was trained under.
#[derive(Clone)]
pub struct ProbePredictor {
    pub p: f64,
    pub predictor: Arc<dyn Predictor>,
}

impl std::fmt::Debug for ProbePredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProbePredictor").field("p", &self.p).finish_non_exhaustive()
    }
}

/// `(p_j, f_{p_j}(u))` for every probe.
pub fn predict_points(predictors: &[ProbePredictor], features: &UserFeatures) -> Result<Vec<Point>> {
    predictors
        .iter()
        .map(|pp| Ok(Point::new(pp.p, pp.predictor.predict(features)?)?))
        .collect()
}

/// Fits the equilibrium curve to predicted rates and derives the breaking
/// probability. A failed fit falls back to no breaks.
pub fn learned_policy(points: &[Point], p_max: f64) -> Decision {
    match fit_nnls(points) {
        Ok(curve) => derive_policy(&curve, p_max),
        Err(_) => Decision::fallback(Degeneracy::FitFailed),
    }
}
