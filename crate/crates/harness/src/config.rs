use std::path::{Path, PathBuf};

use lvbreak_core::Constants;
use lvbreak_recsys::{MfConfig, DEFAULT_TEMPERATURE};
use lvbreak_sim::{EventCounting, SimConfig, DEFAULT_SAFETY_COOLDOWN, DEFAULT_SAFETY_LOOKBACK, DEFAULT_TAU};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::synthetic::SyntheticConfig;

/// Environment variable consulted for the ratings file when no path is given.
pub const DATA_ENV: &str = "LVBREAK_MOVIELENS";
pub const DEFAULT_DATA_PATH: &str = "data/ml-1m/ratings.dat";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorModel {
    Lv,
    Stateless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PredictorMode {
    /// Linear regressors trained on simulated treatment groups.
    Learned,
    /// Equilibrium rates from the latent parameters.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// Per-item β from the recommended item.
    Catalog,
    /// Every item carries the user's mean β under the recommender.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// `UserID::MovieID::Rating::Timestamp` file.
    Movielens { path: Option<PathBuf> },
    Synthetic(SyntheticConfig),
}

impl DataSource {
    /// Resolved ratings path: explicit, then the environment, then the default.
    pub fn movielens_path(path: Option<&Path>) -> PathBuf {
        path.map(Path::to_path_buf)
            .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_PATH))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Share of each user's ratings used only to train the factorization.
    pub cf_fraction: f64,
    pub test_users: usize,
    /// Cap on training users; all remaining users when absent.
    pub train_users: Option<usize>,
    pub main_fraction: f64,
    pub treatment_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub thresholds: Vec<f64>,
    pub lookback: usize,
    pub cooldown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub enabled: bool,
    /// Adaptation time of the headline adaptive policy.
    pub t0: f64,
    /// Rating density of the headline adaptive policy.
    pub rating_density: f64,
    /// Extra `(T0, density)` pairs reported in the adaptive table.
    pub grid: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replications: usize,
    pub kappa: f64,
    /// Probe break probabilities; `p = 0` from the main group is always added.
    pub probes: Vec<f64>,
    pub model: BehaviorModel,
    pub predictor: PredictorMode,
    pub beta_mode: BetaMode,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub tau: f64,
    pub sim: SimConfig,
    pub counting: EventCounting,
    pub splits: SplitConfig,
    pub mf: MfConfig,
    pub temperature: f64,
    pub p_max: f64,
    pub ridge: f64,
    pub safety: SafetyConfig,
    pub adaptive: AdaptiveConfig,
    pub data: DataSource,
    /// Worker threads; rayon's default when absent.
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// 500 training users, 200 test users, 3 replications.
    pub fn desk() -> Self {
        Self {
            seed: 0,
            replications: 3,
            kappa: 0.5,
            probes: vec![0.05, 0.1, 0.15],
            model: BehaviorModel::Lv,
            predictor: PredictorMode::Learned,
            beta_mode: BetaMode::Catalog,
            alpha: Constants::DEFAULT.alpha,
            gamma: Constants::DEFAULT.gamma,
            delta: Constants::DEFAULT.delta,
            tau: DEFAULT_TAU,
            sim: SimConfig::default(),
            counting: EventCounting::Batches,
            splits: SplitConfig {
                cf_fraction: 0.3,
                test_users: 200,
                train_users: Some(500),
                main_fraction: 0.7,
                treatment_fraction: 0.1,
            },
            mf: MfConfig::default(),
            temperature: DEFAULT_TEMPERATURE,
            p_max: lvbreak_core::DEFAULT_P_MAX,
            ridge: lvbreak_predict::DEFAULT_RIDGE,
            safety: SafetyConfig {
                thresholds: vec![14.0, 16.0],
                lookback: DEFAULT_SAFETY_LOOKBACK,
                cooldown: DEFAULT_SAFETY_COOLDOWN,
            },
            adaptive: AdaptiveConfig { enabled: true, t0: 5.0, rating_density: 0.5, grid: Vec::new() },
            data: DataSource::Movielens { path: None },
            threads: None,
            output: None,
        }
    }

    /// 1000 test users, all remaining users for training, 10 replications.
    pub fn full() -> Self {
        let mut c = Self::desk();
        c.replications = 10;
        c.splits.test_users = 1000;
        c.splits.train_users = None;
        c
    }

    pub fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self::desk(),
            Scale::Full => Self::full(),
        }
    }

    pub fn constants(&self) -> Constants {
        Constants { alpha: self.alpha, gamma: self.gamma, delta: self.delta }
    }

    /// Probe list with the default `p = 0` first.
    pub fn curve_probes(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.probes.iter().copied()).collect()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.replications == 0 {
            return bad("replications must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return bad(format!("kappa {} outside [0, 1]", self.kappa));
        }
        if self.probes.is_empty() {
            return bad("at least one probe is required".into());
        }
        if let Some(p) = self.probes.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return bad(format!("probe {p} outside [0, 1)"));
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma), ("delta", self.delta), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be > 0"));
            }
        }
        self.sim.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.mf.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let s = &self.splits;
        if !(s.cf_fraction > 0.0 && s.cf_fraction < 1.0) {
            return bad(format!("cf fraction {} outside (0, 1)", s.cf_fraction));
        }
        if s.test_users == 0 {
            return bad("test set must be nonempty".into());
        }
        let total = s.main_fraction + s.treatment_fraction * self.probes.len() as f64;
        if !(s.main_fraction > 0.0 && s.treatment_fraction > 0.0 && total <= 1.0 + 1e-9) {
            return bad(format!("main/treatment fractions use {total} of the training users"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad(format!("temperature {} must be > 0", self.temperature));
        }
        if !(self.p_max > 0.0 && self.p_max <= 1.0) {
            return bad(format!("p_max {} outside (0, 1]", self.p_max));
        }
        if !(self.ridge >= 0.0) {
            return bad(format!("ridge {} must be >= 0", self.ridge));
        }
        if self.safety.lookback == 0 || !(self.safety.cooldown > 0.0) || self.safety.thresholds.iter().any(|t| !(*t > 0.0)) {
            return bad("invalid safety parameters".into());
        }
        let a = &self.adaptive;
        for (t0, d) in std::iter::once((a.t0, a.rating_density)).chain(a.grid.iter().copied()) {
            if !(0.0..=self.sim.horizon).contains(&t0) || !(0.0..=1.0).contains(&d) {
                return bad(format!("adaptive point (T0 = {t0}, density = {d}) out of range"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}
