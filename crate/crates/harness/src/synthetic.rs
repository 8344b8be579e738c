//! MovieLens-like ratings for running the pipeline without the real dataset.
//!
//! Ratings follow a biased low-rank model plus noise, rounded to 1..=5;
//! items are picked with Zipf-like popularity and every user rates at least
//! `min_ratings` items.

use rand::seq::{index::sample_weighted, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use lvbreak_recsys::{Rating, RatingsTable};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    pub min_ratings: usize,
    pub mean_ratings: f64,
    pub latent_dim: usize,
    pub global_mean: f64,
    pub user_bias_sd: f64,
    pub item_bias_sd: f64,
    pub factor_sd: f64,
    pub noise_sd: f64,
    pub popularity_exponent: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            users: 1000,
            items: 800,
            min_ratings: 20,
            mean_ratings: 70.0,
            latent_dim: 4,
            global_mean: 3.58,
            user_bias_sd: 0.45,
            item_bias_sd: 0.5,
            factor_sd: 0.45,
            noise_sd: 0.75,
            popularity_exponent: 0.8,
            seed: 2023,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.latent_dim == 0 {
            return Err(HarnessError::Config("synthetic data needs users and a latent dimension".into()));
        }
        if self.min_ratings == 0 || self.items < 2 * self.min_ratings {
            return Err(HarnessError::Config(format!(
                "synthetic data needs at least {} items for {} ratings per user",
                2 * self.min_ratings,
                self.min_ratings
            )));
        }
        if !(self.mean_ratings >= self.min_ratings as f64) {
            return Err(HarnessError::Config("mean ratings per user below the minimum".into()));
        }
        for v in [self.user_bias_sd, self.item_bias_sd, self.factor_sd, self.noise_sd, self.popularity_exponent] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(HarnessError::Config("synthetic spreads must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite, nonnegative sd")
}

pub fn generate_ratings<R: Rng + ?Sized>(config: &SyntheticConfig, rng: &mut R) -> Result<RatingsTable> {
    config.validate()?;
    let d = config.latent_dim;
    let fac = normal(config.factor_sd);
    let user_bias: Vec<f64> = (0..config.users).map(|_| normal(config.user_bias_sd).sample(rng)).collect();
    let item_bias: Vec<f64> = (0..config.items).map(|_| normal(config.item_bias_sd).sample(rng)).collect();
    let user_f: Vec<f64> = (0..config.users * d).map(|_| fac.sample(rng)).collect();
    let item_f: Vec<f64> = (0..config.items * d).map(|_| fac.sample(rng)).collect();

    let mut rank: Vec<usize> = (0..config.items).collect();
    rank.shuffle(rng);
    let weights: Vec<f64> = rank.iter().map(|&r| ((r + 1) as f64).powf(-config.popularity_exponent)).collect();

    let extra = Exp::new(1.0 / (config.mean_ratings - config.min_ratings as f64).max(1e-9)).expect("positive rate");
    let cap = config.items / 2;
    let noise = normal(config.noise_sd);
    let mut records = Vec::new();
    let mut ts = 0u64;
    for u in 0..config.users {
        let n = (config.min_ratings + extra.sample(rng).floor() as usize).min(cap);
        let picked = sample_weighted(rng, config.items, |i| weights[i], n)
            .map_err(|e| HarnessError::Data(format!("item sampling failed: {e}")))?;
        let mut items: Vec<usize> = picked.into_iter().collect();
        items.sort_unstable();
        for x in items {
            let dot: f64 = user_f[u * d..(u + 1) * d].iter().zip(&item_f[x * d..(x + 1) * d]).map(|(a, b)| a * b).sum();
            let score = config.global_mean + user_bias[u] + item_bias[x] + dot + noise.sample(rng);
            ts += 1;
            records.push(Rating { user: u as u32 + 1, item: x as u32 + 1, rating: score.round().clamp(1.0, 5.0) as u8, timestamp: ts });
        }
    }
    Ok(RatingsTable::new(records)?)
}
