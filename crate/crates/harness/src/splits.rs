//! User-stratified CF holdout and disjoint user groups.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use lvbreak_recsys::RatingsTable;

use crate::config::SplitConfig;
use crate::error::{HarnessError, Result};

/// Group sizes in users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub test: usize,
    pub main: usize,
    pub per_treatment: usize,
    pub treatments: usize,
}

impl SplitSizes {
    /// Sizes for `n_users` from fractional settings; treatment and main
    /// counts round down.
    pub fn resolve(n_users: usize, config: &SplitConfig, treatments: usize) -> Result<Self> {
        if config.test_users >= n_users {
            return Err(HarnessError::Config(format!(
                "{} test users requested but only {n_users} users available",
                config.test_users
            )));
        }
        let pool = n_users - config.test_users;
        let train = config.train_users.unwrap_or(pool);
        if train > pool {
            return Err(HarnessError::Config(format!("{train} training users requested but only {pool} remain")));
        }
        let sizes = Self {
            test: config.test_users,
            main: (config.main_fraction * train as f64 + 1e-9).floor() as usize,
            per_treatment: (config.treatment_fraction * train as f64 + 1e-9).floor() as usize,
            treatments,
        };
        if sizes.main == 0 || sizes.per_treatment == 0 {
            return Err(HarnessError::Config(format!("{train} training users leave an empty group")));
        }
        Ok(sizes)
    }

    pub fn users_needed(&self) -> usize {
        self.test + self.main + self.per_treatment * self.treatments
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    /// Record indices used only for the factorization.
    pub cf_records: Vec<usize>,
    /// Per user, the remaining (item, rating) pairs: the recommender's candidates.
    pub candidates: BTreeMap<u32, Vec<(u32, u8)>>,
    pub test: Vec<u32>,
    pub main: Vec<u32>,
    pub treatments: Vec<Vec<u32>>,
}

impl SplitPlan {
    /// Pairwise disjoint user groups and CF coverage of every user and item.
    pub fn check(&self, ratings: &RatingsTable) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &u in self.test.iter().chain(&self.main).chain(self.treatments.iter().flatten()) {
            if !seen.insert(u) {
                return Err(HarnessError::Data(format!("user {u} appears in two groups")));
            }
        }
        let cf_users: BTreeSet<u32> = self.cf_records.iter().map(|&i| ratings.records()[i].user).collect();
        let cf_items: BTreeSet<u32> = self.cf_records.iter().map(|&i| ratings.records()[i].item).collect();
        if cf_users.len() != ratings.users().len() || cf_items.len() != ratings.items().len() {
            return Err(HarnessError::Data("CF subset does not cover all users and items".into()));
        }
        Ok(())
    }
}

/// Deterministic given `rng`. Every user keeps at least one candidate item.
pub fn make_splits<R: Rng + ?Sized>(
    ratings: &RatingsTable,
    cf_fraction: f64,
    sizes: SplitSizes,
    rng: &mut R,
) -> Result<SplitPlan> {
    if !(cf_fraction > 0.0 && cf_fraction < 1.0) {
        return Err(HarnessError::Config(format!("cf fraction {cf_fraction} outside (0, 1)")));
    }
    let records = ratings.records();
    let by_user = ratings.by_user();
    if sizes.users_needed() > by_user.len() {
        return Err(HarnessError::Config(format!(
            "split needs {} users, table has {}",
            sizes.users_needed(),
            by_user.len()
        )));
    }

    let mut in_cf = vec![false; records.len()];
    let mut kept = BTreeMap::new();
    for (&u, idx) in &by_user {
        if idx.len() < 2 {
            return Err(HarnessError::Data(format!("user {u} has fewer than 2 ratings")));
        }
        let mut idx = idx.clone();
        idx.shuffle(rng);
        let k = ((cf_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..k] {
            in_cf[i] = true;
        }
        kept.insert(u, idx.len() - k);
    }

    // Move one rating of each uncovered item into the CF subset.
    let mut item_records: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        item_records.entry(r.item).or_default().push(i);
    }
    for (&item, idx) in &item_records {
        if idx.iter().any(|&i| in_cf[i]) {
            continue;
        }
        let mut options: Vec<usize> = idx.iter().copied().filter(|&i| kept[&records[i].user] > 1).collect();
        if options.is_empty() {
            return Err(HarnessError::Data(format!("item {item} cannot be covered without emptying a user")));
        }
        options.shuffle(rng);
        let i = options[0];
        in_cf[i] = true;
        *kept.get_mut(&records[i].user).expect("user present") -= 1;
    }

    let mut candidates: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
    let mut cf_records = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if in_cf[i] {
            cf_records.push(i);
        } else {
            candidates.entry(r.user).or_default().push((r.item, r.rating));
        }
    }

    let mut users: Vec<u32> = by_user.keys().copied().collect();
    users.shuffle(rng);
    let mut rest = users.into_iter();
    let mut take = |n: usize| -> Vec<u32> { rest.by_ref().take(n).collect() };
    let test = take(sizes.test);
    let main = take(sizes.main);
    let treatments = (0..sizes.treatments).map(|_| take(sizes.per_treatment)).collect();

    let plan = SplitPlan { cf_records, candidates, test, main, treatments };
    plan.check(ratings)?;
    Ok(plan)
}
