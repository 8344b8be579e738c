use crate::beta::beta_of_item;
use crate::error::{RecsysError, Result};
use crate::features::{features_from_recommender, UserFeatures};
use crate::mf::MfModel;
use crate::softmax::SoftmaxRecommender;

/// One user's candidate items with true and predicted ratings and the
/// softmax recommender over them.
#[derive(Debug, Clone)]
pub struct UserCatalog {
    user: u32,
    ratings: Vec<f64>,
    recommender: SoftmaxRecommender,
}

impl UserCatalog {
    /// `rated` holds (item, true rating) pairs; all items must be known to `model`.
    pub fn build(model: &MfModel, user: u32, rated: &[(u32, u8)], temperature: f64) -> Result<Self> {
        if rated.is_empty() {
            return Err(RecsysError::Empty(format!("user {user} has no candidate items")));
        }
        let items: Vec<u32> = rated.iter().map(|r| r.0).collect();
        let scores = items.iter().map(|&x| model.predict_rating(user, x)).collect::<Result<Vec<_>>>()?;
        let ratings = rated.iter().map(|r| f64::from(r.1)).collect();
        Ok(Self { user, ratings, recommender: SoftmaxRecommender::new(items, scores, temperature)? })
    }

    pub fn user(&self) -> u32 {
        self.user
    }

    pub fn items(&self) -> &[u32] {
        self.recommender.items()
    }

    pub fn true_ratings(&self) -> &[f64] {
        &self.ratings
    }

    pub fn predicted_ratings(&self) -> &[f64] {
        self.recommender.scores()
    }

    pub fn recommender(&self) -> &SoftmaxRecommender {
        &self.recommender
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Per-candidate β at mixing weight `kappa`.
    pub fn betas(&self, kappa: f64) -> Result<Vec<f64>> {
        self.ratings
            .iter()
            .zip(self.predicted_ratings())
            .map(|(&r, &rh)| beta_of_item(r, rh, kappa))
            .collect()
    }

    /// `E_ψ[β]` over the softmax distribution.
    pub fn expected_beta(&self, kappa: f64) -> Result<f64> {
        Ok(self.recommender.expectation(&self.betas(kappa)?))
    }

    pub fn features(&self, model: &MfModel) -> Result<UserFeatures> {
        features_from_recommender(model, self.user, &self.recommender)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mf::{train_mf, MfConfig};
    use crate::ratings::{Rating, RatingsTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expected_beta_with_all_fives_is_five() {
        let recs: Vec<Rating> = (0..4)
            .flat_map(|u| (0..6).map(move |x| Rating { user: u, item: x, rating: 5, timestamp: 0 }))
            .collect();
        let model = train_mf(&RatingsTable::new(recs).unwrap(), &MfConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let cat = UserCatalog::build(&model, 1, &[(0, 5), (3, 5), (4, 5)], 0.5).unwrap();
        assert!((cat.expected_beta(1.0).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(cat.features(&model).unwrap().len(), 10);
        assert!(UserCatalog::build(&model, 1, &[], 0.5).is_err());
        assert!(UserCatalog::build(&model, 1, &[(99, 5)], 0.5).is_err());
    }
}
