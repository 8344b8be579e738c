//! The end-to-end pipeline: split, factorize, simulate treatment groups,
//! fit predictors, learn per-user policies and evaluate them by simulation.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lvbreak_core::{optimal_policy, Point};
use lvbreak_predict::{
    fit_ols, learned_policy, oracle_predict, predict_points, predict_rate, Predictor, ProbePredictor, Regressor,
    TreatmentDataset,
};
use lvbreak_recsys::{load_ratings, train_mf, MfModel, RatingsTable, UserCatalog, UserFeatures};
use lvbreak_sim::{
    engagement_rate_counting, sample_lv_sequence, sample_stateless_sequence, AdaptiveParams, AdaptivePolicy,
    BreakingPolicy, CatalogSampler, FixedSampler, SafetyParams, UserLatent,
};

use crate::config::{BehaviorModel, BetaMode, DataSource, ExperimentConfig, PredictorMode};
use crate::error::{HarnessError, Result};
use crate::results::*;
use crate::seeds::{rng_for, sub_seed};
use crate::splits::{make_splits, SplitPlan, SplitSizes};
use crate::stats::{ci95_half_width, mean, relative_gain, std_error};
use crate::synthetic::generate_ratings;

/// Reads or generates the ratings named by the config.
pub fn load_dataset(config: &ExperimentConfig) -> Result<RatingsTable> {
    match &config.data {
        DataSource::Movielens { path } => {
            let path = DataSource::movielens_path(path.as_deref());
            let (table, _) = load_ratings(&path)
                .map_err(|e| HarnessError::Data(format!("cannot load ratings from {}: {e}", path.display())))?;
            Ok(table)
        }
        DataSource::Synthetic(s) => generate_ratings(s, &mut ChaCha8Rng::seed_from_u64(s.seed)),
    }
}

/// Everything the simulator needs about one user.
struct UserContext {
    user: u32,
    catalog: UserCatalog,
    features: Option<UserFeatures>,
    mean_beta: f64,
    mean_rating: f64,
}

impl UserContext {
    fn build(model: &MfModel, user: u32, rated: &[(u32, u8)], config: &ExperimentConfig) -> Result<Self> {
        let catalog = UserCatalog::build(model, user, rated, config.temperature)?;
        let mean_beta = catalog.expected_beta(config.kappa)?;
        let mean_rating = catalog.recommender().expectation(catalog.true_ratings());
        let features = Some(catalog.features(model)?);
        Ok(Self { user, catalog, features, mean_beta, mean_rating })
    }
}

fn latent(config: &ExperimentConfig) -> UserLatent {
    UserLatent { constants: config.constants(), tau: config.tau }
}

/// Engagement rate of one rollout.
fn simulate(ctx: &UserContext, config: &ExperimentConfig, policy: &mut BreakingPolicy, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let user = latent(config);
    let seq = match config.beta_mode {
        BetaMode::Catalog => {
            let sampler = CatalogSampler::new(&ctx.catalog, config.kappa)?;
            match config.model {
                BehaviorModel::Lv => sample_lv_sequence(&user, policy, &sampler, &config.sim, &mut rng)?,
                BehaviorModel::Stateless => sample_stateless_sequence(&user, policy, &sampler, &config.sim, &mut rng)?,
            }
        }
        BetaMode::Mean => {
            let sampler = FixedSampler { item: 0, beta: ctx.mean_beta, rating: ctx.mean_rating };
            match config.model {
                BehaviorModel::Lv => sample_lv_sequence(&user, policy, &sampler, &config.sim, &mut rng)?,
                BehaviorModel::Stateless => sample_stateless_sequence(&user, policy, &sampler, &config.sim, &mut rng)?,
            }
        }
    };
    Ok(engagement_rate_counting(&seq, config.counting))
}

/// Optimal breaking probability from the user's latent parameters.
fn oracle_policy(ctx: &UserContext, config: &ExperimentConfig) -> Result<f64> {
    match config.model {
        BehaviorModel::Lv => Ok(optimal_policy(&config.constants().with_beta(ctx.mean_beta)?)?.p_opt),
        // Breaks never help a stateless user.
        BehaviorModel::Stateless => Ok(0.0),
    }
}

fn oracle_points(ctx: &UserContext, config: &ExperimentConfig) -> Result<Vec<Point>> {
    config
        .curve_probes()
        .iter()
        .map(|&p| Ok(Point::new(p, oracle_predict(&config.constants(), ctx.mean_beta, p)?)?))
        .collect()
}

/// First probe with the largest predicted rate.
fn best_of(points: &[Point]) -> f64 {
    let mut best = points[0];
    for pt in &points[1..] {
        if pt.f > best.f {
            best = *pt;
        }
    }
    best.p
}

fn eval_seed(config: &ExperimentConfig, policy: &str, replication: usize, user: u32) -> u64 {
    sub_seed(config.seed, &format!("eval/{policy}"), replication as u64, u64::from(user))
}

struct Replication {
    record: ReplicationRecord,
    users: Vec<UserRecord>,
    /// Per adaptive grid point, mean LTE over test users.
    adaptive_means: Vec<f64>,
}

struct UserOutcome {
    record: UserRecord,
    adaptive: Vec<f64>,
}

fn policy_names(config: &ExperimentConfig) -> Vec<String> {
    let mut names = vec![POLICY_DEFAULT.to_string()];
    names.extend(config.safety.thresholds.iter().map(|&t| safety_name(t)));
    names.extend([POLICY_BEST_OF, POLICY_LV, POLICY_ORACLE].map(String::from));
    if adaptive_enabled(config) {
        names.push(POLICY_ADAPTIVE.to_string());
    }
    names
}

fn adaptive_enabled(config: &ExperimentConfig) -> bool {
    config.adaptive.enabled && config.predictor == PredictorMode::Learned
}

/// Headline `(T0, density)` first, then the extra grid.
fn adaptive_points(config: &ExperimentConfig) -> Vec<(f64, f64)> {
    if !adaptive_enabled(config) {
        return Vec::new();
    }
    std::iter::once((config.adaptive.t0, config.adaptive.rating_density)).chain(config.adaptive.grid.iter().copied()).collect()
}

fn contexts(model: &MfModel, plan: &SplitPlan, users: &[u32], config: &ExperimentConfig) -> Result<Vec<UserContext>> {
    users
        .par_iter()
        .map(|&u| {
            let rated = plan.candidates.get(&u).ok_or_else(|| HarnessError::Data(format!("user {u} has no candidates")))?;
            UserContext::build(model, u, rated, config)
        })
        .collect()
}

fn train_predictors(
    model: &MfModel,
    plan: &SplitPlan,
    config: &ExperimentConfig,
    replication: usize,
) -> Result<Vec<(ProbePredictor, Regressor)>> {
    let groups: Vec<(f64, &Vec<u32>)> =
        std::iter::once((0.0, &plan.main)).chain(config.probes.iter().copied().zip(plan.treatments.iter())).collect();
    let mut out = Vec::with_capacity(groups.len());
    for (j, (p, users)) in groups.into_iter().enumerate() {
        let ctxs = contexts(model, plan, users, config)?;
        let tag = format!("train/{j}");
        let rates: Vec<f64> = ctxs
            .par_iter()
            .map(|ctx| {
                let seed = sub_seed(config.seed, &tag, replication as u64, u64::from(ctx.user));
                simulate(ctx, config, &mut BreakingPolicy::stationary(p)?, seed)
                    .map_err(|e| e.for_user(replication, ctx.user))
            })
            .collect::<Result<_>>()?;
        let mut data = TreatmentDataset::new(p, config.sim.horizon)?;
        for (ctx, rate) in ctxs.iter().zip(rates) {
            data.push(ctx.features.clone().expect("features built"), rate)?;
        }
        let reg = fit_ols(&data, config.ridge)?;
        out.push((ProbePredictor { p, predictor: Arc::new(reg.clone()) }, reg));
    }
    Ok(out)
}

fn evaluate_user(
    ctx: &UserContext,
    config: &ExperimentConfig,
    predictors: &[ProbePredictor],
    replication: usize,
) -> Result<UserOutcome> {
    let points = match config.predictor {
        PredictorMode::Learned => predict_points(predictors, ctx.features.as_ref().expect("features built"))?,
        PredictorMode::Oracle => oracle_points(ctx, config)?,
    };
    let decision = learned_policy(&points, config.p_max);
    let best = best_of(&points);
    let oracle_p = oracle_policy(ctx, config)?;

    let mut lte = Vec::new();
    let run = |name: &str, policy: &mut BreakingPolicy| -> Result<f64> {
        simulate(ctx, config, policy, eval_seed(config, name, replication, ctx.user))
    };
    lte.push(run(POLICY_DEFAULT, &mut BreakingPolicy::default_policy())?);
    for &t in &config.safety.thresholds {
        let params = SafetyParams { threshold: t, lookback: config.safety.lookback, cooldown: config.safety.cooldown };
        lte.push(run(&safety_name(t), &mut BreakingPolicy::safety(params)?)?);
    }
    lte.push(run(POLICY_BEST_OF, &mut BreakingPolicy::stationary(best)?)?);
    lte.push(run(POLICY_LV, &mut BreakingPolicy::stationary(decision.p_hat)?)?);
    lte.push(run(POLICY_ORACLE, &mut BreakingPolicy::stationary(oracle_p)?)?);

    let mut adaptive = Vec::new();
    for (t0, density) in adaptive_points(config) {
        let params = AdaptiveParams { t0, rating_density: density, p_max: config.p_max };
        let rating_seed =
            sub_seed(config.seed, &format!("ratings/{t0}/{density}"), replication as u64, u64::from(ctx.user));
        let policy = AdaptivePolicy::new(
            params,
            decision.p_hat,
            ctx.features.clone().expect("features built"),
            predictors.to_vec(),
            rating_seed,
        )?;
        // Shares the learned policy's stream so that T0 = T replays it exactly.
        adaptive.push(simulate(
            ctx,
            config,
            &mut BreakingPolicy::Adaptive(Box::new(policy)),
            eval_seed(config, POLICY_LV, replication, ctx.user),
        )?);
    }
    if let Some(&headline) = adaptive.first() {
        lte.push(headline);
    }

    Ok(UserOutcome {
        record: UserRecord {
            replication,
            user: ctx.user,
            p_hat: decision.p_hat,
            best_of_p: best,
            oracle_p,
            degenerate: decision.degenerate.map(|d| format!("{d:?}")),
            lte,
        },
        adaptive,
    })
}

/// Split plus collaborative-filtering model of one replication.
pub struct CfStage {
    pub plan: SplitPlan,
    pub model: MfModel,
    /// RMSE on every rating held out of the factorization.
    pub heldout_rmse: f64,
}

/// Splits the users and factorizes the CF subset for replication `replication`.
pub fn cf_stage(ratings: &RatingsTable, config: &ExperimentConfig, replication: usize) -> Result<CfStage> {
    let r = replication as u64;
    let sizes = SplitSizes::resolve(ratings.users().len(), &config.splits, config.probes.len())?;
    let plan = make_splits(ratings, config.splits.cf_fraction, sizes, &mut rng_for(config.seed, "split", r, 0))?;
    let cf = ratings.subset(&plan.cf_records)?;
    let model = train_mf(&cf, &config.mf, &mut rng_for(config.seed, "mf", r, 0))?;
    let (mut sq, mut n) = (0.0, 0usize);
    for (&u, rated) in &plan.candidates {
        for &(x, rating) in rated {
            let e = model.predict_rating(u, x)? - f64::from(rating);
            sq += e * e;
            n += 1;
        }
    }
    Ok(CfStage { plan, model, heldout_rmse: (sq / n as f64).sqrt() })
}

fn run_replication(ratings: &RatingsTable, config: &ExperimentConfig, replication: usize) -> Result<Replication> {
    let CfStage { plan, model, heldout_rmse: cf_rmse } = cf_stage(ratings, config, replication)?;

    let trained = match config.predictor {
        PredictorMode::Learned => train_predictors(&model, &plan, config, replication)?,
        PredictorMode::Oracle => Vec::new(),
    };
    let predictors: Vec<ProbePredictor> = trained.iter().map(|(p, _)| p.clone()).collect();

    let test = contexts(&model, &plan, &plan.test, config)?;
    let outcomes: Vec<UserOutcome> = test
        .par_iter()
        .map(|ctx| evaluate_user(ctx, config, &predictors, replication).map_err(|e| e.for_user(replication, ctx.user)))
        .collect::<Result<_>>()?;

    let n_policies = outcomes.first().map_or(0, |o| o.record.lte.len());
    let mean_lte: Vec<f64> = (0..n_policies)
        .map(|k| mean(&outcomes.iter().map(|o| o.record.lte[k]).collect::<Vec<_>>()))
        .collect();
    let n_adaptive = outcomes.first().map_or(0, |o| o.adaptive.len());
    let adaptive_means =
        (0..n_adaptive).map(|k| mean(&outcomes.iter().map(|o| o.adaptive[k]).collect::<Vec<_>>())).collect();
    let n = outcomes.len() as f64;
    let zero_p_fraction = outcomes.iter().filter(|o| o.record.p_hat == 0.0).count() as f64 / n;
    let degenerate_fraction = outcomes.iter().filter(|o| o.record.degenerate.is_some()).count() as f64 / n;

    let mut predictor_records = Vec::new();
    for (pp, reg) in &trained {
        // The default rollouts of test users double as held-out data for p = 0.
        let heldout_rmse = if pp.p == 0.0 {
            let mut sq = 0.0;
            for (ctx, o) in test.iter().zip(&outcomes) {
                let e = predict_rate(reg, ctx.features.as_ref().expect("features built"))? - o.record.lte[0];
                sq += e * e;
            }
            Some((sq / n).sqrt())
        } else {
            None
        };
        predictor_records.push(PredictorRecord { p: pp.p, train_rmse: reg.train_rmse, heldout_rmse });
    }

    Ok(Replication {
        record: ReplicationRecord {
            replication,
            cf_rmse,
            predictors: predictor_records,
            mean_lte,
            zero_p_fraction,
            degenerate_fraction,
        },
        users: outcomes.into_iter().map(|o| o.record).collect(),
        adaptive_means,
    })
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

fn summarize(policies: &[String], reps: &[Replication]) -> Vec<PolicySummary> {
    let column = |k: usize| reps.iter().map(|r| r.record.mean_lte[k]).collect::<Vec<f64>>();
    let default = column(0);
    let lv_index = policies.iter().position(|p| p == POLICY_LV);
    let default_mean = mean(&default);
    let lv_mean = lv_index.map(|k| mean(&column(k)));
    policies
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let values = column(k);
            let m = mean(&values);
            let gains: Vec<f64> = values.iter().zip(&default).filter_map(|(&v, &d)| relative_gain(v, d)).collect();
            PolicySummary {
                policy: name.clone(),
                mean_lte: m,
                gain_pct: relative_gain(m, default_mean),
                stderr: std_error(&values),
                ci95: ci95_half_width(&values),
                gain_stderr: std_error(&gains),
                lv_gain_over_pct: lv_mean.and_then(|lv| relative_gain(lv, m)),
            }
        })
        .collect()
}

/// Runs every replication on an already loaded table.
pub fn run_experiment_on(ratings: &RatingsTable, config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    if config.model == BehaviorModel::Stateless && config.predictor == PredictorMode::Oracle {
        return Err(HarnessError::Config("the oracle predictor requires the LV behavior model".into()));
    }
    let policies = policy_names(config);
    let reps: Vec<Replication> = with_pool(config.threads, || {
        (0..config.replications)
            .map(|r| run_replication(ratings, config, r).map_err(|e| e.in_replication(r)))
            .collect()
    })?;

    let summary = summarize(&policies, &reps);
    let default: Vec<f64> = reps.iter().map(|r| r.record.mean_lte[0]).collect();
    let lv_k = policies.iter().position(|p| p == POLICY_LV).expect("lv policy present");
    let lv: Vec<f64> = reps.iter().map(|r| r.record.mean_lte[lv_k]).collect();
    let adaptive = adaptive_points(config)
        .into_iter()
        .enumerate()
        .map(|(k, (t0, density))| {
            let values: Vec<f64> = reps.iter().map(|r| r.adaptive_means[k]).collect();
            let diffs: Vec<f64> = values.iter().zip(&lv).map(|(a, b)| a - b).collect();
            AdaptiveRecord {
                t0,
                rating_density: density,
                mean_lte: mean(&values),
                gain_pct: relative_gain(mean(&values), mean(&default)),
                stderr: std_error(&values),
                gain_over_lv_pct: relative_gain(mean(&values), mean(&lv)),
                diff_stderr: std_error(&diffs),
            }
        })
        .collect();

    let mut per_user = Vec::new();
    let mut replications = Vec::new();
    for rep in reps {
        per_user.extend(rep.users);
        replications.push(rep.record);
    }
    Ok(ResultsTable { policies, summary, replications, per_user, sweep: Vec::new(), adaptive })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let ratings = load_dataset(config)?;
    run_experiment_on(&ratings, config)
}

/// Two-point designs `{0, p1}` for each `p1` in the grid; records the
/// default, best-of and learned policies.
pub fn sweep_p1_on(ratings: &RatingsTable, config: &ExperimentConfig, grid: &[f64]) -> Result<ResultsTable> {
    let mut sweep = Vec::new();
    for &p1 in grid {
        let mut cfg = config.clone();
        cfg.probes = vec![p1];
        cfg.safety.thresholds.clear();
        cfg.adaptive.enabled = false;
        let res = run_experiment_on(ratings, &cfg)?;
        for name in [POLICY_DEFAULT, POLICY_BEST_OF, POLICY_LV] {
            let s = res.summary_for(name).expect("policy evaluated");
            sweep.push(SweepRecord {
                policy: name.to_string(),
                p1,
                mean_lte: s.mean_lte,
                gain_pct: s.gain_pct,
                stderr: s.stderr,
            });
        }
    }
    Ok(ResultsTable { sweep, ..ResultsTable::default() })
}

pub fn sweep_p1(config: &ExperimentConfig, grid: &[f64]) -> Result<ResultsTable> {
    config.validate()?;
    let ratings = load_dataset(config)?;
    sweep_p1_on(&ratings, config, grid)
}

/// The treatment grid used for the two-point sensitivity study.
pub const DEFAULT_P1_GRID: [f64; 6] = [0.0, 0.08, 0.16, 0.24, 0.32, 0.4];

/// Mean LTE per policy name, for quick lookups.
pub fn mean_by_policy(results: &ResultsTable) -> BTreeMap<String, f64> {
    results.summary.iter().map(|s| (s.policy.clone(), s.mean_lte)).collect()
}

#[allow(dead_code)]
fn assert_predictor_object_safe(_: &dyn Predictor) {}
