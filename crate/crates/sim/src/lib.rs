//! User behavior simulation: discrete temporal point processes driven by
//! recommended items and breaking policies.

pub mod error;
pub mod policy;
pub mod sampler;
pub mod sequence;
pub mod tpp;

pub use error::{Result, SimError};
pub use policy::{
    adaptive_policy_update, trailing_rate, AdaptiveParams, AdaptivePolicy, BreakingPolicy, SafetyParams, SafetyPolicy,
    DEFAULT_SAFETY_COOLDOWN, DEFAULT_SAFETY_LOOKBACK, DEFAULT_SAFETY_THRESHOLD,
};
pub use sampler::{CatalogSampler, Draw, FixedSampler, ItemSampler};
pub use sequence::{engagement_rate, engagement_rate_counting, Event, EventCounting, InteractionSequence, BREAK_MARKER};
pub use tpp::{
    initial_state, sample_lv_sequence, sample_lv_sequence_from, sample_stateless_sequence, SimConfig, UserLatent,
    DEFAULT_BATCH, DEFAULT_CHURN_FLOOR, DEFAULT_HORIZON, DEFAULT_INIT_NOISE, DEFAULT_TAU,
};
