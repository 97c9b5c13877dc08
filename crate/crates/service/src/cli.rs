//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use bayesadapt::design::SampleBudget;
use bayesadapt::inference::ViConfig;
use bayesadapt::model::PriorSpec;
use bayesadapt::policy::StoppingConfig;
use bayesadapt::simulation::{
    generate_synthetic_oracle_with, information_gain, run_benchmark, run_testing_sim, run_treatment_replay,
    BanditPolicy, BenchmarkSpec, EigMethod, OracleDataset, PolicySummary, Setup, SyntheticOptions, Termination,
    TestingSimConfig, TreatmentReplayConfig, DEFAULT_EXPLORATION_SAMPLES,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::api::{router, AppState};
use crate::config::ServiceConfig;
use crate::store::Registry;

#[derive(Debug, Parser)]
#[command(name = "bayesadapt", version, about = "Bayesian adaptive experimentation")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Simulation runs per benchmark cell.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Worker threads for parallel simulation runs.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay adaptive testing against an oracle.
    SimulateTesting(TestingArgs),
    /// Replay adaptive treatment assignment against a grouped oracle.
    SimulateTreatment(TreatmentArgs),
    /// Bandit benchmark grid.
    BenchBandits(BenchArgs),
    /// Run the HTTP session service.
    Serve,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SimulateTesting(_) => "simulate-testing",
            Command::SimulateTreatment(_) => "simulate-treatment",
            Command::BenchBandits(_) => "bench-bandits",
            Command::Serve => "serve",
        }
    }
}

/// `NxM`: participants by items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub participants: usize,
    pub items: usize,
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (n, m) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|&x| x > 0);
        match (parse(n), parse(m)) {
            (Some(participants), Some(items)) => Ok(Shape { participants, items }),
            _ => Err(format!("expected positive NxM, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false, args = ["oracle", "synthetic"])]
pub struct OracleSource {
    /// Oracle JSONL file of response records.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Synthetic oracle drawn from the prior, e.g. 200x15.
    #[arg(long)]
    pub synthetic: Option<Shape>,
}

#[derive(Debug, Args)]
pub struct TestingArgs {
    #[command(flatten)]
    pub source: OracleSource,
    /// Stop once no item has EIG above this many nats.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Items every participant answers before the rule may stop.
    #[arg(long)]
    pub min_trials: Option<usize>,
    /// Give every participant this many items instead of using the stopping rule.
    #[arg(long)]
    pub fixed_budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TreatmentArgs {
    #[command(flatten)]
    pub source: OracleSource,
    /// Strength of the group-discrimination preference.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Treatments per participant.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated, e.g. A,B.
    #[arg(long, value_delimiter = ',')]
    pub setups: Option<Vec<Setup>>,
    /// Arm counts, e.g. 5,10,30.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Preference strengths for the active-inference policy.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Horizon for every setup; defaults to 500 for A and 1000 for B.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchGrid {
    pub setups: Vec<Setup>,
    pub k: Vec<usize>,
    pub gamma: Vec<f64>,
    pub horizon_a: usize,
    pub horizon_b: usize,
    pub runs: usize,
    pub exploration_samples: usize,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            setups: vec![Setup::A, Setup::B],
            k: vec![5, 10, 30],
            gamma: vec![0.1, 0.2, 0.3],
            horizon_a: 500,
            horizon_b: 1000,
            runs: 300,
            exploration_samples: DEFAULT_EXPLORATION_SAMPLES,
        }
    }
}

impl BenchGrid {
    pub fn horizon(&self, setup: Setup) -> usize {
        match setup {
            Setup::A => self.horizon_a,
            Setup::B => self.horizon_b,
        }
    }

    pub fn policies(&self) -> Vec<BanditPolicy> {
        let mut p = vec![
            BanditPolicy::Uniform,
            BanditPolicy::Thompson,
            BanditPolicy::ExplorationSampling {
                samples: self.exploration_samples,
            },
        ];
        p.extend(self.gamma.iter().map(|&gamma| BanditPolicy::ActiveInference {
            gamma,
            eig: EigMethod::Exact,
        }));
        p
    }
}

/// One configuration file shared by every subcommand; each reads its section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prior: PriorSpec,
    pub budget: SampleBudget,
    pub vi: ViConfig,
    pub stopping: StoppingConfig,
    pub fixed_budget: Option<usize>,
    pub treatment: TreatmentReplayConfig,
    pub bench: BenchGrid,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: RunConfig,
    pub oracle: Option<String>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub version: String,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Read the config file and fold the command-line overrides into it.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    cfg.vi.seed = cli.seed;
    cfg.treatment.seed = cli.seed;
    if let Some(runs) = cli.runs {
        cfg.bench.runs = runs;
    }
    match &cli.command {
        Command::SimulateTesting(a) => {
            if let Some(e) = a.epsilon {
                cfg.stopping.epsilon = e;
            }
            if let Some(m) = a.min_trials {
                cfg.stopping.min_trials = m;
            }
            if a.fixed_budget.is_some() {
                cfg.fixed_budget = a.fixed_budget;
            }
        }
        Command::SimulateTreatment(a) => {
            if let Some(g) = a.gamma {
                cfg.treatment.gamma = g;
            }
            if let Some(t) = a.trials {
                cfg.treatment.trials_per_participant = t;
            }
        }
        Command::BenchBandits(a) => {
            if let Some(s) = &a.setups {
                cfg.bench.setups = s.clone();
            }
            if let Some(k) = &a.k {
                cfg.bench.k = k.clone();
            }
            if let Some(g) = &a.gamma {
                cfg.bench.gamma = g.clone();
            }
            if let Some(h) = a.horizon {
                cfg.bench.horizon_a = h;
                cfg.bench.horizon_b = h;
            }
        }
        Command::Serve => {
            cfg.service.apply_env(|k| std::env::var(k).ok()).map_err(usage)?;
        }
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(runtime)?;
    }
    let cfg = resolve(&cli)?;
    match &cli.command {
        Command::SimulateTesting(a) => simulate_testing(&cli, &cfg, &a.source),
        Command::SimulateTreatment(a) => simulate_treatment(&cli, &cfg, &a.source),
        Command::BenchBandits(_) => bench_bandits(&cli, &cfg),
        Command::Serve => serve(cfg.service),
    }
}

fn write_manifest(cli: &Cli, cfg: &RunConfig, oracle: Option<String>) -> Result<(), CliError> {
    fs::create_dir_all(&cli.out).map_err(|e| runtime(format!("cannot create {}: {e}", cli.out.display())))?;
    let manifest = RunManifest {
        subcommand: cli.command.name().into(),
        config: cfg.clone(),
        oracle,
        seed: cli.seed,
        out_dir: cli.out.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    write_json(&cli.out.join("manifest.json"), &manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    fs::write(path, text + "\n").map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn load_oracle(source: &OracleSource, prior: &PriorSpec, seed: u64, groups: bool) -> Result<OracleDataset, CliError> {
    if let Some(path) = &source.oracle {
        if !path.is_file() {
            return Err(usage(format!("oracle file not found: {}", path.display())));
        }
        return OracleDataset::from_jsonl_path(path).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let shape = source.synthetic.expect("clap requires a source");
    let opts = SyntheticOptions {
        with_groups: groups,
        durations: None,
    };
    generate_synthetic_oracle_with(prior, shape.participants, shape.items, seed, &opts).map_err(runtime)
}

fn describe(source: &OracleSource) -> String {
    match (&source.oracle, source.synthetic) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(s)) => format!("synthetic:{}x{}", s.participants, s.items),
        (None, None) => String::new(),
    }
}

#[derive(Serialize)]
struct TrialCountRow {
    participant_id: usize,
    trials: usize,
    ability_mean: f64,
    ability_sd: f64,
    information_gain: f64,
}

#[derive(Serialize)]
struct ItemFrequencyRow {
    item_id: usize,
    frequency: usize,
    difficulty_mean: f64,
}

fn simulate_testing(cli: &Cli, cfg: &RunConfig, source: &OracleSource) -> Result<(), CliError> {
    cfg.stopping.validate().map_err(usage)?;
    write_manifest(cli, cfg, Some(describe(source)))?;
    let oracle = load_oracle(source, &cfg.prior, cli.seed, false)?;
    let sim = TestingSimConfig {
        prior: cfg.prior,
        termination: match cfg.fixed_budget {
            Some(trials) => Termination::FixedBudget { trials },
            None => Termination::Rule(cfg.stopping),
        },
        budget: cfg.budget,
        vi: cfg.vi,
    };
    let report = run_testing_sim(&oracle, &sim).map_err(runtime)?;
    write_json(&cli.out.join("report.json"), &report)?;
    write_csv(
        &cli.out.join("trial_counts.csv"),
        report.final_abilities.iter().enumerate().map(|(i, g)| TrialCountRow {
            participant_id: i,
            trials: report.trial_counts[i],
            ability_mean: g.mean,
            ability_sd: g.sd,
            information_gain: information_gain(cfg.prior.theta_sd, g.sd),
        }),
    )?;
    write_csv(
        &cli.out.join("item_frequency.csv"),
        report.item_frequencies.iter().enumerate().map(|(j, &f)| ItemFrequencyRow {
            item_id: j,
            frequency: f,
            difficulty_mean: report.difficulty_means[j],
        }),
    )?;
    let static_trials = oracle.n_participants() * oracle.n_items();
    println!(
        "participants {}  items {}  trials {} of {} ({:.1}%)  mean trials {:.2}  information gain {:.3}",
        oracle.n_participants(),
        oracle.n_items(),
        report.total_trials(),
        static_trials,
        100.0 * report.total_trials() as f64 / static_trials as f64,
        report.mean_trials(),
        report.total_information_gain,
    );
    Ok(())
}

#[derive(Serialize)]
struct TreatmentFrequencyRow {
    treatment: usize,
    frequency: usize,
    success_group0: f64,
    success_group1: f64,
}

fn simulate_treatment(cli: &Cli, cfg: &RunConfig, source: &OracleSource) -> Result<(), CliError> {
    write_manifest(cli, cfg, Some(describe(source)))?;
    let oracle = load_oracle(source, &cfg.prior, cli.seed, true)?;
    let report = run_treatment_replay(&oracle, &cfg.treatment).map_err(runtime)?;
    write_json(&cli.out.join("report.json"), &report)?;
    write_csv(&cli.out.join("efe_composition.csv"), report.composition.iter())?;
    let gp = &report.final_posterior;
    write_csv(
        &cli.out.join("treatment_frequency.csv"),
        report.frequencies.iter().enumerate().map(|(j, &f)| TreatmentFrequencyRow {
            treatment: j,
            frequency: f,
            success_group0: gp.get(j, 0).mean(),
            success_group1: gp.get(j, 1).mean(),
        }),
    )?;
    println!(
        "administered {} treatments; most frequent {:?}",
        report.composition.len(),
        top(&report.frequencies, 3)
    );
    Ok(())
}

fn top(freq: &[usize], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..freq.len()).collect();
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

#[derive(Serialize)]
struct MetricRow<'a> {
    setup: Setup,
    k: usize,
    horizon: usize,
    policy: &'a str,
    mean: f64,
    half_width: f64,
    runs: usize,
}

fn bench_bandits(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let grid = &cfg.bench;
    if grid.runs == 0 || grid.k.iter().any(|&k| k < 2) || grid.horizon_a == 0 || grid.horizon_b == 0 {
        return Err(usage("need runs >= 1, k >= 2 and positive horizons"));
    }
    let policies = grid.policies();
    write_manifest(cli, cfg, None)?;
    let mut summaries: Vec<PolicySummary> = Vec::new();
    for &setup in &grid.setups {
        for &k in &grid.k {
            let spec = BenchmarkSpec {
                setup,
                k,
                horizon: grid.horizon(setup),
                runs: grid.runs,
                seed: cli.seed,
            };
            for policy in &policies {
                let s = run_benchmark(&spec, policy, true).map_err(runtime)?;
                println!(
                    "{setup} k={k:<3} {:<24} identification {:.3} ± {:.3}  average regret {:.4} ± {:.4}",
                    s.policy,
                    s.identification.mean,
                    s.identification.half_width,
                    s.average_regret.mean,
                    s.average_regret.half_width
                );
                summaries.push(s);
            }
        }
    }
    type Metric = fn(&PolicySummary) -> &bayesadapt::simulation::MeanCi;
    let metrics: [(&str, Metric); 4] = [
        ("identification.csv", |s| &s.identification),
        ("policy_regret.csv", |s| &s.policy_regret),
        ("average_regret.csv", |s| &s.average_regret),
        ("exploitation.csv", |s| &s.exploitation),
    ];
    for (file, metric) in metrics {
        write_csv(
            &cli.out.join(file),
            summaries.iter().map(|s| {
                let m = metric(s);
                MetricRow {
                    setup: s.setup,
                    k: s.k,
                    horizon: s.horizon,
                    policy: &s.policy,
                    mean: m.mean,
                    half_width: m.half_width,
                    runs: m.n,
                }
            }),
        )?;
    }
    Ok(())
}

fn serve(cfg: ServiceConfig) -> Result<(), CliError> {
    let registry = Arc::new(Registry::open(&cfg).map_err(runtime)?);
    let state = AppState {
        registry: registry.clone(),
        admin_token: cfg.admin_token.clone(),
    };
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((cfg.host.as_str(), cfg.port))
            .await
            .map_err(|e| runtime(format!("cannot bind {}:{}: {e}", cfg.host, cfg.port)))?;
        eprintln!("listening on {}", listener.local_addr().map_err(runtime)?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(runtime)
    })?;
    registry.flush().map_err(runtime)?;
    eprintln!("snapshots flushed");
    Ok(())
}
