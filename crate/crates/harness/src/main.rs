use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lvbreak_core::Point;
use lvbreak_harness::config::{BehaviorModel, DataSource, ExperimentConfig, PredictorMode, Scale};
use lvbreak_harness::{
    cf_stage, load_dataset, report, run_experiment, sweep_p1, CfStage, HarnessError, ReportFormat, ResultsTable,
    SyntheticConfig, DEFAULT_P1_GRID,
};
use lvbreak_predict::learned_policy;
use lvbreak_sim::{
    engagement_rate_counting, sample_lv_sequence, sample_stateless_sequence, BreakingPolicy, FixedSampler, SimConfig,
    UserLatent,
};

type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Parser)]
#[command(name = "lvbreak", version, about = "Learned breaking policies for recommender engagement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize the collaborative-filtering split and write the model as JSON.
    TrainCf(TrainCfArgs),
    /// Roll out one user with a fixed item quality and breaking probability.
    Simulate(SimulateArgs),
    /// Fit the equilibrium curve to measured `(p, rate)` points.
    Fit(FitArgs),
    /// Run the full experiment and write the report.
    Experiment(ExperimentArgs),
    /// Two-point design sensitivity over the treatment probability.
    Sweep(SweepArgs),
    /// Re-render a saved `results.json`.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Comma-separated treatment probabilities.
    #[arg(long, value_delimiter = ',')]
    probes: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    model: Option<BehaviorModel>,
    #[arg(long, value_enum)]
    predictor: Option<PredictorMode>,
    #[arg(long)]
    replications: Option<usize>,
    /// MovieLens `ratings.dat`.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Use generated ratings instead of MovieLens.
    #[arg(long)]
    synthetic: bool,
    /// Number of synthetic users.
    #[arg(long, requires = "synthetic")]
    synthetic_users: Option<usize>,
    #[arg(long)]
    test_users: Option<usize>,
    #[arg(long)]
    train_users: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::for_scale(self.scale),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.kappa {
            c.kappa = v;
        }
        if let Some(v) = &self.probes {
            c.probes = v.clone();
        }
        if let Some(v) = self.model {
            c.model = v;
        }
        if let Some(v) = self.predictor {
            c.predictor = v;
        }
        if let Some(v) = self.replications {
            c.replications = v;
        }
        if let Some(path) = &self.data {
            c.data = DataSource::Movielens { path: Some(path.clone()) };
        }
        if self.synthetic {
            let mut s = SyntheticConfig::default();
            if let Some(n) = self.synthetic_users {
                s.users = n;
            }
            c.data = DataSource::Synthetic(s);
        }
        if let Some(v) = self.test_users {
            c.splits.test_users = v;
        }
        if let Some(v) = self.train_users {
            c.splits.train_users = Some(v);
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct TrainCfArgs {
    #[command(flatten)]
    common: Common,
    /// Output model file.
    #[arg(long, default_value = "mf.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SequenceFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = BehaviorModel::Lv)]
    model: BehaviorModel,
    /// Breaking probability.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Item quality served at every slot.
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = lvbreak_sim::DEFAULT_HORIZON)]
    horizon: f64,
    /// Write the sequence here; prints only the rate when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SequenceFormat::Csv)]
    format: SequenceFormat,
}

#[derive(Args)]
struct FitArgs {
    /// `p:rate` pairs, e.g. `0:9.8,0.1:10.4,0.2:10.1`.
    #[arg(long, value_delimiter = ',', required = true)]
    points: Vec<String>,
    #[arg(long, default_value_t = lvbreak_core::DEFAULT_P_MAX)]
    p_max: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
    format: ReportFormat,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Treatment probabilities to sweep.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
    format: ReportFormat,
}

#[derive(Args)]
struct ReportArgs {
    /// A `results.json` written by `experiment` or `sweep`.
    input: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainCf(a) => train_cf(a),
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Experiment(a) => {
            let config = a.common.resolve()?;
            let results = run_experiment(&config)?;
            print_summary(&results);
            write_report(&results, a.format, &a.out)
        }
        Command::Sweep(a) => {
            let config = a.common.resolve()?;
            let grid = a.grid.unwrap_or_else(|| DEFAULT_P1_GRID.to_vec());
            let results = sweep_p1(&config, &grid)?;
            for s in &results.sweep {
                println!("p1={:<5} {:<8} lte={:.4} gain={}", s.p1, s.policy, s.mean_lte, fmt_gain(s.gain_pct));
            }
            write_report(&results, a.format, &a.out)
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.input)?;
            let results = ResultsTable::from_json(&text)?;
            write_report(&results, a.format, &a.out)
        }
    }
}

fn train_cf(a: TrainCfArgs) -> Result<()> {
    let config = a.common.resolve()?;
    let ratings = load_dataset(&config)?;
    let CfStage { plan, model, heldout_rmse } = cf_stage(&ratings, &config, 0)?;
    let cf = ratings.subset(&plan.cf_records)?;
    let train_rmse = model.rmse(&cf)?;
    std::fs::write(&a.out, model.to_json()?)?;
    println!(
        "ratings={} cf_ratings={} users={} items={} train_rmse={train_rmse:.4} heldout_rmse={heldout_rmse:.4} model={}",
        ratings.len(),
        cf.len(),
        model.user_ids().len(),
        model.item_ids().len(),
        a.out.display()
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = SimConfig { horizon: a.horizon, ..SimConfig::default() };
    let user = UserLatent::default();
    let sampler = FixedSampler::new(a.beta);
    let mut policy = BreakingPolicy::stationary(a.p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let seq = match a.model {
        BehaviorModel::Lv => sample_lv_sequence(&user, &mut policy, &sampler, &cfg, &mut rng)?,
        BehaviorModel::Stateless => sample_stateless_sequence(&user, &mut policy, &sampler, &cfg, &mut rng)?,
    };
    println!(
        "events={} churned={} rate={:.6}",
        seq.len(),
        seq.churned,
        engagement_rate_counting(&seq, Default::default())
    );
    if let Some(out) = a.out {
        let text = match a.format {
            SequenceFormat::Csv => seq.to_csv(),
            SequenceFormat::Json => seq.to_json()?,
        };
        std::fs::write(out, text)?;
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<Point> {
    let bad = || HarnessError::Config(format!("point `{s}` is not of the form p:rate"));
    let (p, f) = s.split_once(':').ok_or_else(bad)?;
    let p: f64 = p.trim().parse().map_err(|_| bad())?;
    let f: f64 = f.trim().parse().map_err(|_| bad())?;
    Ok(Point::new(p, f)?)
}

fn fit(a: FitArgs) -> Result<()> {
    let points = a.points.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
    let d = learned_policy(&points, a.p_max);
    let ab = d.ab_hat.map_or_else(|| "none".to_string(), |v| format!("{v:.6}"));
    let why = d.degenerate.map_or_else(|| "none".to_string(), |v| format!("{v:?}"));
    println!("p_hat={:.6} alpha_over_beta={ab} degenerate={why}", d.p_hat);
    Ok(())
}

fn fmt_gain(g: Option<f64>) -> String {
    g.map_or_else(|| "n/a".to_string(), |v| format!("{v:+.2}%"))
}

fn print_summary(results: &ResultsTable) {
    for s in &results.summary {
        println!(
            "{:<10} lte={:.4} ±{:.4} gain={} (se {:.2})",
            s.policy,
            s.mean_lte,
            s.ci95,
            fmt_gain(s.gain_pct),
            s.gain_stderr
        );
    }
    for a in &results.adaptive {
        println!(
            "adaptive T0={} density={} lte={:.4} gain={} over_lv={}",
            a.t0,
            a.rating_density,
            a.mean_lte,
            fmt_gain(a.gain_pct),
            fmt_gain(a.gain_over_lv_pct)
        );
    }
}

fn write_report(results: &ResultsTable, format: ReportFormat, out: &Path) -> Result<()> {
    for path in report(results, format, out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
