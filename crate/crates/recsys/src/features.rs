use serde::{Deserialize, Serialize};

use crate::error::{RecsysError, Result};
use crate::mf::MfModel;
use crate::softmax::{SoftmaxRecommender, DEFAULT_TEMPERATURE};

/// `(v_u, b_u, ρ̂_u)`: latent factors, user bias and the softmax-weighted
/// mean predicted rating. Length is `d + 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatures {
    values: Vec<f64>,
}

impl UserFeatures {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(RecsysError::InvalidArgument("feature vector needs at least bias and rho".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RecsysError::InvalidArgument("features must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn factor_dim(&self) -> usize {
        self.values.len() - 2
    }

    pub fn rho_hat(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Same features with the ρ̂ slot replaced.
    pub fn with_rho_hat(&self, rho: f64) -> Self {
        let mut values = self.values.clone();
        let last = values.len() - 1;
        values[last] = rho;
        Self { values }
    }
}

/// Features from a recommender whose scores are the clipped predicted ratings.
pub fn features_from_recommender(model: &MfModel, user: u32, rec: &SoftmaxRecommender) -> Result<UserFeatures> {
    let mut values = model.user_factors(user)?.to_vec();
    values.push(model.user_bias(user)?);
    values.push(rec.expectation(rec.scores()));
    UserFeatures::new(values)
}

pub fn build_features_with(model: &MfModel, user: u32, candidates: &[u32], temperature: f64) -> Result<UserFeatures> {
    if candidates.is_empty() {
        return Err(RecsysError::Empty(format!("user {user} has no candidate items")));
    }
    let scores = candidates.iter().map(|&x| model.predict_rating(user, x)).collect::<Result<Vec<_>>>()?;
    let rec = SoftmaxRecommender::new(candidates.to_vec(), scores, temperature)?;
    features_from_recommender(model, user, &rec)
}

pub fn build_features(model: &MfModel, user: u32, candidates: &[u32]) -> Result<UserFeatures> {
    build_features_with(model, user, candidates, DEFAULT_TEMPERATURE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mf::{train_mf, MfConfig};
    use crate::ratings::{Rating, RatingsTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> MfModel {
        let mut recs = Vec::new();
        for u in 0..10 {
            for x in 0..10 {
                recs.push(Rating { user: u, item: x, rating: ((u + x) % 5 + 1) as u8, timestamp: 0 });
            }
        }
        train_mf(&RatingsTable::new(recs).unwrap(), &MfConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn length_is_dim_plus_two() {
        let m = model();
        let f = build_features(&m, 3, &[1, 2, 3]).unwrap();
        assert_eq!(f.len(), 10);
        assert_eq!(f.factor_dim(), 8);
        assert_eq!(&f.as_slice()[..8], m.user_factors(3).unwrap());
        assert_eq!(f.as_slice()[8], m.user_bias(3).unwrap());
    }

    #[test]
    fn rho_of_constant_scores() {
        let rec = SoftmaxRecommender::new(vec![1, 2, 3], vec![4.0; 3], 0.5).unwrap();
        assert!((rec.expectation(rec.scores()) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rho_of_two_scores() {
        let rec = SoftmaxRecommender::new(vec![1, 2], vec![5.0, 3.0], 0.5).unwrap();
        let f = features_from_recommender(&model(), 0, &rec).unwrap();
        assert!((f.rho_hat() - 4.964).abs() < 1e-3);
    }

    #[test]
    fn rho_in_rating_range_and_replaceable() {
        let m = model();
        let f = build_features(&m, 5, &[0, 4, 9]).unwrap();
        assert!((1.0..=5.0).contains(&f.rho_hat()));
        let g = f.with_rho_hat(2.5);
        assert_eq!(g.rho_hat(), 2.5);
        assert_eq!(&g.as_slice()[..9], &f.as_slice()[..9]);
    }

    #[test]
    fn empty_candidates_rejected() {
        assert!(matches!(build_features(&model(), 0, &[]), Err(RecsysError::Empty(_))));
    }
}
