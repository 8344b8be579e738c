use lvbreak_recsys::UserCatalog;
use rand::Rng;

use crate::error::Result;

/// One recommended item together with what it does to the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub item: u32,
    /// Consumption gain if the item is served.
    pub beta: f64,
    /// The user's true rating of the item.
    pub rating: f64,
}

/// The recommender ψ as seen by the simulator.
pub trait ItemSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw;

    /// `E_ψ[β]`.
    fn mean_beta(&self) -> f64;
}

/// Every draw is the same item with a fixed gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedSampler {
    pub item: u32,
    pub beta: f64,
    pub rating: f64,
}

impl FixedSampler {
    pub fn new(beta: f64) -> Self {
        Self { item: 0, beta, rating: 5.0 }
    }
}

impl ItemSampler for FixedSampler {
    fn draw<R: Rng + ?Sized>(&self, _rng: &mut R) -> Draw {
        Draw { item: self.item, beta: self.beta, rating: self.rating }
    }

    fn mean_beta(&self) -> f64 {
        self.beta
    }
}

/// Softmax recommendations over a user's catalog, with β at a fixed κ.
#[derive(Debug, Clone)]
pub struct CatalogSampler<'a> {
    catalog: &'a UserCatalog,
    betas: Vec<f64>,
    mean_beta: f64,
}

impl<'a> CatalogSampler<'a> {
    pub fn new(catalog: &'a UserCatalog, kappa: f64) -> Result<Self> {
        let betas = catalog.betas(kappa)?;
        let mean_beta = catalog.recommender().expectation(&betas);
        Ok(Self { catalog, betas, mean_beta })
    }
}

impl ItemSampler for CatalogSampler<'_> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let i = self.catalog.recommender().recommend_index(rng);
        Draw { item: self.catalog.items()[i], beta: self.betas[i], rating: self.catalog.true_ratings()[i] }
    }

    fn mean_beta(&self) -> f64 {
        self.mean_beta
    }
}
