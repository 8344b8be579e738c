//! Mapping from a (true, predicted) rating pair to the per-item consumption gain β.

use crate::error::{RecsysError, Result};

pub const BETA_MIN: f64 = 0.2;
pub const BETA_MAX: f64 = 5.0;

/// `κ·r + (1-κ)·r̂`.
pub fn mixed_rating(rating: f64, predicted: f64, kappa: f64) -> Result<f64> {
    for (name, v) in [("rating", rating), ("predicted rating", predicted)] {
        if !(1.0..=5.0).contains(&v) {
            return Err(RecsysError::InvalidArgument(format!("{name} {v} outside [1, 5]")));
        }
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(RecsysError::InvalidArgument(format!("kappa {kappa} outside [0, 1]")));
    }
    Ok(kappa * rating + (1.0 - kappa) * predicted)
}

/// `β = r̃² / 5` with `r̃` from [`mixed_rating`]; lies in [0.2, 5].
pub fn beta_of_item(rating: f64, predicted: f64, kappa: f64) -> Result<f64> {
    let r = mixed_rating(rating, predicted, kappa)?;
    Ok(r * r / 5.0)
}
