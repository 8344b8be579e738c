//! Biased matrix factorization trained by plain SGD.
//!
//! Prediction is `μ + b_u + b_x + v_u·v_x`. The global mean is the
//! training-set average and is not updated.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{RecsysError, Result};
use crate::ratings::RatingsTable;

pub const MF_CHECKPOINT_VERSION: u32 = 1;
pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub regularization: f64,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self { dim: 8, epochs: 20, learning_rate: 0.005, regularization: 0.02 }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(RecsysError::InvalidArgument("latent dimension must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(RecsysError::InvalidArgument(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if !(self.regularization.is_finite() && self.regularization >= 0.0) {
            return Err(RecsysError::InvalidArgument(format!(
                "regularization {} must be >= 0",
                self.regularization
            )));
        }
        Ok(())
    }
}

/// Trained factorization. Ids are kept sorted; factors are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfModel {
    version: u32,
    dim: usize,
    global_mean: f64,
    user_ids: Vec<u32>,
    item_ids: Vec<u32>,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

pub fn train_mf<R: Rng + ?Sized>(ratings: &RatingsTable, config: &MfConfig, rng: &mut R) -> Result<MfModel> {
    config.validate()?;
    if ratings.is_empty() {
        return Err(RecsysError::Empty("cannot train on an empty table".into()));
    }
    let d = config.dim;
    let user_ids = ratings.users();
    let item_ids = ratings.items();
    let records: Vec<(usize, usize, f64)> = ratings
        .records()
        .iter()
        .map(|r| {
            let u = user_ids.binary_search(&r.user).expect("user id present");
            let x = item_ids.binary_search(&r.item).expect("item id present");
            (u, x, f64::from(r.rating))
        })
        .collect();
    let global_mean = records.iter().map(|r| r.2).sum::<f64>() / records.len() as f64;

    let init = Normal::new(0.0, 0.1 / (d as f64).sqrt()).expect("valid normal");
    let mut user_factors: Vec<f64> = (0..user_ids.len() * d).map(|_| init.sample(rng)).collect();
    let mut item_factors: Vec<f64> = (0..item_ids.len() * d).map(|_| init.sample(rng)).collect();
    let mut user_bias = vec![0.0; user_ids.len()];
    let mut item_bias = vec![0.0; item_ids.len()];

    let (lr, reg) = (config.learning_rate, config.regularization);
    let mut order: Vec<usize> = (0..records.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut sq = 0.0;
        for &i in &order {
            let (u, x, r) = records[i];
            let pu = &mut user_factors[u * d..(u + 1) * d];
            let qx = &mut item_factors[x * d..(x + 1) * d];
            let dot: f64 = pu.iter().zip(qx.iter()).map(|(a, b)| a * b).sum();
            let err = r - (global_mean + user_bias[u] + item_bias[x] + dot);
            sq += err * err;
            user_bias[u] += lr * (err - reg * user_bias[u]);
            item_bias[x] += lr * (err - reg * item_bias[x]);
            for f in 0..d {
                let (a, b) = (pu[f], qx[f]);
                pu[f] += lr * (err * b - reg * a);
                qx[f] += lr * (err * a - reg * b);
            }
        }
        if !sq.is_finite() {
            return Err(RecsysError::Diverged { epoch });
        }
    }

    Ok(MfModel {
        version: MF_CHECKPOINT_VERSION,
        dim: d,
        global_mean,
        user_ids,
        item_ids,
        user_bias,
        item_bias,
        user_factors,
        item_factors,
    })
}

impl MfModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_ids(&self) -> &[u32] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[u32] {
        &self.item_ids
    }

    fn user_index(&self, user: u32) -> Result<usize> {
        self.user_ids.binary_search(&user).map_err(|_| RecsysError::UnknownUser(user))
    }

    fn item_index(&self, item: u32) -> Result<usize> {
        self.item_ids.binary_search(&item).map_err(|_| RecsysError::UnknownItem(item))
    }

    pub fn knows_user(&self, user: u32) -> bool {
        self.user_ids.binary_search(&user).is_ok()
    }

    pub fn knows_item(&self, item: u32) -> bool {
        self.item_ids.binary_search(&item).is_ok()
    }

    pub fn user_bias(&self, user: u32) -> Result<f64> {
        Ok(self.user_bias[self.user_index(user)?])
    }

    pub fn user_factors(&self, user: u32) -> Result<&[f64]> {
        let u = self.user_index(user)?;
        Ok(&self.user_factors[u * self.dim..(u + 1) * self.dim])
    }

    /// Unclipped score.
    pub fn raw_score(&self, user: u32, item: u32) -> Result<f64> {
        let u = self.user_index(user)?;
        let x = self.item_index(item)?;
        let d = self.dim;
        let dot: f64 = self.user_factors[u * d..(u + 1) * d]
            .iter()
            .zip(&self.item_factors[x * d..(x + 1) * d])
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.global_mean + self.user_bias[u] + self.item_bias[x] + dot)
    }

    /// Predicted rating clipped to [1, 5].
    pub fn predict_rating(&self, user: u32, item: u32) -> Result<f64> {
        Ok(clip_rating(self.raw_score(user, item)?))
    }

    /// Root mean squared error of clipped predictions. Unknown pairs are an error.
    pub fn rmse(&self, ratings: &RatingsTable) -> Result<f64> {
        let mut sq = 0.0;
        for r in ratings.records() {
            let e = f64::from(r.rating) - self.predict_rating(r.user, r.item)?;
            sq += e * e;
        }
        Ok((sq / ratings.len() as f64).sqrt())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.version != MF_CHECKPOINT_VERSION {
            return Err(RecsysError::Version { found: model.version, expected: MF_CHECKPOINT_VERSION });
        }
        let d = model.dim;
        let consistent = d > 0
            && model.user_bias.len() == model.user_ids.len()
            && model.item_bias.len() == model.item_ids.len()
            && model.user_factors.len() == model.user_ids.len() * d
            && model.item_factors.len() == model.item_ids.len() * d
            && model.user_ids.windows(2).all(|w| w[0] < w[1])
            && model.item_ids.windows(2).all(|w| w[0] < w[1]);
        if !consistent {
            return Err(RecsysError::InvalidArgument("checkpoint arrays are inconsistent".into()));
        }
        Ok(model)
    }
}

pub fn clip_rating(score: f64) -> f64 {
    score.clamp(RATING_MIN, RATING_MAX)
}
