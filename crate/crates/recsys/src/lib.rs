//! Collaborative filtering, softmax recommendation and the rating-to-gain
//! mapping used by the behavior simulator.

pub mod beta;
pub mod catalog;
pub mod error;
pub mod features;
pub mod mf;
pub mod ratings;
pub mod softmax;

pub use beta::{beta_of_item, mixed_rating, BETA_MAX, BETA_MIN};
pub use catalog::UserCatalog;
pub use error::{RecsysError, Result};
pub use features::{build_features, build_features_with, features_from_recommender, UserFeatures};
pub use mf::{clip_rating, train_mf, MfConfig, MfModel, MF_CHECKPOINT_VERSION};
pub use ratings::{load_ratings, load_ratings_from, parse_line, read_ratings, LoadStats, Rating, RatingsTable, MIN_RATINGS_PER_USER};
pub use softmax::{softmax, SoftmaxRecommender, DEFAULT_TEMPERATURE};
