//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppd_core::dialogue::{ChatBackend, MockBackend};
use ppd_core::eval::{balanced_downsample, grid_search, replay, MetricsReport, ParamGrid, RunConfig, ScoreSource};
use ppd_core::explain::{counterfactual, eligible_for_explanation, render_explanation, render_not_found, PerturbationPolicy, RecordModel, SearchOutcome};
use ppd_core::features::SelectorConfig;
use ppd_core::learners::{LearnerConfig, LearnerKind};
use ppd_core::record::ScreeningRecord;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::checkpoint::Checkpoint;
use crate::clock::SystemClock;
use crate::dataset::{load_dataset, write_dataset, SchemaMapping};
use crate::remote::{RemoteBackend, RemoteConfig, ENV_API_KEY, ENV_BASE_URL};
use crate::report::{grid_summary, metrics_summary, write_grid_table, write_metrics_table, ChangeFrequencies};
use crate::service::{ScreeningService, ServiceConfig};
use crate::synthetic::{synthetic_stream, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "ppd", version, about = "Streaming postpartum-depression screening")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prequential run over a dataset.
    Replay(ReplayArgs),
    /// Hyperparameter grid search.
    Grid(GridArgs),
    /// Counterfactual explanations for confidently scored samples.
    Explain(ExplainArgs),
    /// HTTP session API.
    Serve(ServeArgs),
    /// Writes a synthetic dataset under the canonical mapping.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Gnb,
    Lr,
    Alma,
    Hatc,
    Arfc,
}

impl From<ModelArg> for LearnerKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gnb => LearnerKind::Gnb,
            ModelArg::Lr => LearnerKind::Lr,
            ModelArg::Alma => LearnerKind::Alma,
            ModelArg::Hatc => LearnerKind::Hatc,
            ModelArg::Arfc => LearnerKind::Arfc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    /// AUC from predicted labels.
    Label,
    /// AUC from predicted probabilities.
    Probability,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// TOML schema mapping; defaults to canonical slug headers.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[arg(long, default_value_t = 0.10)]
    pub cold_start_fraction: f64,
    #[arg(long, default_value_t = 5.0)]
    pub percentile: f64,
    #[arg(long, value_enum, default_value_t = ScoreArg::Label)]
    pub score: ScoreArg,
    /// Directory for the report files.
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Downsample the majority class first.
    #[arg(long)]
    pub balanced: bool,
    /// Number of runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    /// Override one hyperparameter: `name=value`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Save the trained model (last run) here.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub stream: StreamArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub balanced: bool,
    /// Replace one axis: `name=v1,v2,...`.
    #[arg(long = "param", value_name = "NAME=V1,V2")]
    pub params: Vec<String>,
    #[command(flatten)]
    pub stream: StreamArgs,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = ppd_core::explain::DEFAULT_ITERATIONS)]
    pub n_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// Remote when its environment variables are set, otherwise mock.
    Auto,
    Mock,
    Remote,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Without one, session creation answers 503.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub serve_port: u16,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub backend: BackendArg,
    #[arg(long, default_value_t = ppd_core::explain::DEFAULT_ITERATIONS)]
    pub n_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Accept labeled feedback and keep training the live model.
    #[arg(long)]
    pub learn_from_feedback: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 523)]
    pub absent: usize,
    #[arg(long, default_value_t = 968)]
    pub present: usize,
    #[arg(long, default_value_t = 0.6)]
    pub signal: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load_records(data: &DataArgs) -> Result<Vec<ScreeningRecord>, CliError> {
    let mapping = match &data.mapping {
        Some(p) => SchemaMapping::load(p).map_err(io)?,
        None => SchemaMapping::canonical(),
    };
    Ok(load_dataset(&data.dataset, &mapping).map_err(io)?.records)
}

fn run_config(s: &StreamArgs) -> Result<RunConfig, CliError> {
    let selector = SelectorConfig {
        percentile: s.percentile,
        cold_start_fraction: s.cold_start_fraction,
        threshold: None,
    };
    selector.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(RunConfig {
        selector,
        score_cold_start: false,
        score_source: match s.score {
            ScoreArg::Label => ScoreSource::HardLabel,
            ScoreArg::Probability => ScoreSource::Probability,
        },
    })
}

fn split_param(p: &str) -> Result<(&str, &str), CliError> {
    p.split_once('=')
        .map(|(n, v)| (n.trim(), v.trim()))
        .ok_or_else(|| CliError::Usage(format!("expected NAME=VALUE, got `{p}`")))
}

fn write_reports(dir: &Path, stem: &str, rows: &[(String, MetricsReport)], summary: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io)?;
    let table = std::fs::File::create(dir.join(format!("{stem}.csv"))).map_err(io)?;
    write_metrics_table(table, rows).map_err(io)?;
    std::fs::write(dir.join(format!("{stem}.txt")), summary).map_err(io)
}

fn mean_report(reports: &[MetricsReport]) -> MetricsReport {
    let n = reports.len() as f64;
    let mut m = MetricsReport::default();
    for r in reports {
        m.accuracy += r.accuracy / n;
        m.auc += r.auc / n;
        for (acc, x) in [(&mut m.absent, &r.absent), (&mut m.present, &r.present), (&mut m.macro_avg, &r.macro_avg)] {
            acc.precision += x.precision / n;
            acc.recall += x.recall / n;
            acc.f_measure += x.f_measure / n;
        }
        m.runtime_seconds += r.runtime_seconds / n;
        m.samples = r.samples;
    }
    m
}

fn cmd_replay(a: &ReplayArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let run = run_config(&a.stream)?;
    let kind: LearnerKind = a.model.into();
    let mut config = LearnerConfig::default_for(kind);
    for p in &a.params {
        let (name, value) = split_param(p)?;
        config = ppd_core::eval::apply_param(config, name, value).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let all = load_records(&a.data)?;
    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut last = None;
    for seed in a.seed..a.seed + a.runs {
        let records = if a.balanced {
            balanced_downsample(&all, seed).map_err(runtime)?
        } else {
            all.clone()
        };
        let (outcome, learner) = replay(&config, &records, &run, seed, &mut SystemClock::new()).map_err(runtime)?;
        let title = format!("{} seed {seed}: {} samples processed, threshold {:.4}", kind.name(), records.len(), outcome.threshold);
        summary.push_str(&metrics_summary(&title, &outcome.report));
        rows.push((format!("{}-seed{seed}", kind.name()), outcome.report));
        last = Some((outcome, learner, records.len()));
    }
    if a.runs > 1 {
        let reports: Vec<MetricsReport> = rows.iter().map(|r| r.1).collect();
        let mean = mean_report(&reports);
        summary.push_str(&metrics_summary(&format!("{} mean of {} runs", kind.name(), a.runs), &mean));
        rows.push((format!("{}-mean", kind.name()), mean));
    }
    write!(out, "{summary}").map_err(io)?;
    write_reports(&a.stream.out, &format!("replay_{}", kind.name()), &rows, &summary)?;
    if let (Some(path), Some((outcome, learner, n))) = (&a.checkpoint, last) {
        Checkpoint::new(config, a.seed + a.runs - 1, learner, &outcome, n)
            .save(path)
            .map_err(io)?;
        writeln!(out, "checkpoint written to {}", path.display()).map_err(io)?;
    }
    Ok(())
}

fn cmd_grid(a: &GridArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let run = run_config(&a.stream)?;
    let kind: LearnerKind = a.model.into();
    let mut grid = ParamGrid::default_for(kind).map_err(|e| CliError::Usage(e.to_string()))?;
    for p in &a.params {
        let (name, values) = split_param(p)?;
        grid.set_axis(name, values.split(',').map(|v| v.trim().to_string()).collect())
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut records = load_records(&a.data)?;
    if a.balanced {
        records = balanced_downsample(&records, a.seed).map_err(runtime)?;
    }
    let result = grid_search(&grid, &records, &run, a.seed, &mut SystemClock::new()).map_err(runtime)?;
    let summary = grid_summary(&result);
    let mut table = Vec::new();
    write_grid_table(&mut table, &result).map_err(io)?;
    out.write_all(&table).map_err(io)?;
    write!(out, "{summary}").map_err(io)?;
    std::fs::create_dir_all(&a.stream.out).map_err(io)?;
    std::fs::write(a.stream.out.join(format!("grid_{}.csv", kind.name())), &table).map_err(io)?;
    std::fs::write(a.stream.out.join(format!("grid_{}.txt", kind.name())), &summary).map_err(io)
}

/// Explanation report for every confidently scored record. Returns the
/// rendered text, which ends with the change-frequency summary.
pub fn explain_report<M: RecordModel + ?Sized>(model: &M, records: &[ScreeningRecord], n_iterations: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy = PerturbationPolicy::default();
    let mut freq = ChangeFrequencies::default();
    let mut text = String::new();
    for (i, r) in records.iter().enumerate() {
        let dist = model.predict_record(r);
        if !eligible_for_explanation(&dist) {
            continue;
        }
        let predicted = dist.predicted();
        let p = dist.probability(predicted);
        text.push_str(&format!("## sample {}\n", i + 1));
        match counterfactual(model, r, predicted, n_iterations, &policy, &mut rng) {
            SearchOutcome::Found(res) => {
                text.push_str(&render_explanation(r, Some(&res), predicted, p));
                freq.add(Some(&res.relevant));
            }
            SearchOutcome::NotFound => {
                text.push_str(&render_not_found(predicted, p));
                freq.add(None);
            }
        }
        text.push('\n');
    }
    text.push_str("## summary\n");
    text.push_str(&freq.summary());
    text
}

fn cmd_explain(a: &ExplainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.n_iterations == 0 {
        return Err(CliError::Usage("--n-iterations must be at least 1".into()));
    }
    let checkpoint = Checkpoint::load(&a.checkpoint).map_err(io)?;
    let records = load_records(&a.data)?;
    let text = explain_report(&checkpoint.pipeline(), &records, a.n_iterations, a.seed);
    write!(out, "{text}").map_err(io)?;
    std::fs::create_dir_all(&a.out).map_err(io)?;
    std::fs::write(a.out.join("explanations.txt"), &text).map_err(io)
}

fn backend(choice: BackendArg) -> Result<Box<dyn ChatBackend + Send + Sync>, CliError> {
    let configured = std::env::var_os(ENV_BASE_URL).is_some() || std::env::var_os(ENV_API_KEY).is_some();
    let remote = match choice {
        BackendArg::Mock => false,
        BackendArg::Remote => true,
        BackendArg::Auto => configured,
    };
    if remote {
        let b = RemoteBackend::new(RemoteConfig::from_env()).map_err(runtime)?;
        eprintln!("chat backend: {} ({})", b.config().base_url, b.config().model);
        Ok(Box::new(b))
    } else {
        eprintln!("chat backend: offline mock");
        Ok(Box::new(MockBackend::default()))
    }
}

fn cmd_serve(a: &ServeArgs) -> Result<(), CliError> {
    let model = a.checkpoint.as_deref().map(Checkpoint::load).transpose().map_err(io)?;
    if model.is_none() {
        eprintln!("no checkpoint given; session creation will answer 503");
    }
    let config = ServiceConfig {
        assess: ppd_core::dialogue::AssessOptions {
            n_iterations: a.n_iterations,
            policy: PerturbationPolicy::default(),
        },
        seed: a.seed,
        learn_from_feedback: a.learn_from_feedback,
    };
    let service = Arc::new(ScreeningService::new(model, backend(a.backend)?, config));
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    eprintln!("listening on port {}", a.serve_port);
    rt.block_on(crate::http::serve(service, a.serve_port)).map_err(io)
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.signal) {
        return Err(CliError::Usage("--signal must lie in [0, 1]".into()));
    }
    let spec = SyntheticSpec {
        absent: a.absent,
        present: a.present,
        signal: a.signal,
    };
    let file = std::fs::File::create(&a.out).map_err(io)?;
    write_dataset(file, &synthetic_stream(&spec, a.seed), &SchemaMapping::canonical()).map_err(io)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Replay(a) => cmd_replay(a, out),
        Command::Grid(a) => cmd_grid(a, out),
        Command::Explain(a) => cmd_explain(a, out),
        Command::Serve(a) => cmd_serve(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
