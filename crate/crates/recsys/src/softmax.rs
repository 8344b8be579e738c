use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::error::{RecsysError, Result};

pub const DEFAULT_TEMPERATURE: f64 = 0.5;

/// Numerically stable `softmax(scores / temperature)`.
pub fn softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Samples one candidate item per call with softmax probabilities over its
/// scores. Sampling is with replacement.
#[derive(Debug, Clone)]
pub struct SoftmaxRecommender {
    items: Vec<u32>,
    scores: Vec<f64>,
    probs: Vec<f64>,
    temperature: f64,
    sampler: WeightedIndex<f64>,
}

impl SoftmaxRecommender {
    pub fn new(items: Vec<u32>, scores: Vec<f64>, temperature: f64) -> Result<Self> {
        if items.is_empty() {
            return Err(RecsysError::Empty("recommender needs at least one candidate".into()));
        }
        if items.len() != scores.len() {
            return Err(RecsysError::InvalidArgument(format!(
                "{} items but {} scores",
                items.len(),
                scores.len()
            )));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(RecsysError::InvalidArgument(format!("temperature {temperature} must be > 0")));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(RecsysError::InvalidArgument("scores must be finite".into()));
        }
        let probs = softmax(&scores, temperature);
        let sampler = WeightedIndex::new(&probs)
            .map_err(|e| RecsysError::InvalidArgument(format!("softmax weights: {e}")))?;
        Ok(Self { items, scores, probs, temperature, sampler })
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Index into [`Self::items`] of a sampled candidate.
    pub fn recommend_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn recommend<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.items[self.recommend_index(rng)]
    }

    /// Expectation of a per-candidate quantity under the softmax distribution.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.probs.len());
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}
