//! Command-line front end.

use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nowkit_core::evaluation::{backtest, naive_baselines, nowcast_trace, SplitSpec};
use nowkit_core::feasibility::{aggregate_counts, agreement, LabelSource};
use nowkit_core::pipeline::Experiment;
use nowkit_core::selection::select_model;
use nowkit_core::series::{observation_count, Frequency, TimeSeries};
use nowkit_core::vintage::{VintageDate, VintageSchedule};

use crate::config::{ConfigError, ModelSource, RunConfig};
use crate::executor;
use crate::ingest::{self, IngestError};
use crate::report::{self, ReportError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nowkit", version, about = "Mixed-frequency nowcasting of annual SDG indicators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run seed, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Evaluate as of this data vintage.
    #[arg(long, global = true, value_name = "YYYY-MM")]
    pub vintage: Option<VintageDate>,
    /// Target year for `trace`.
    #[arg(long, global = true, value_name = "YYYY")]
    pub target_year: Option<i32>,
    /// Indicator catalog CSV for `classify`, overriding the config.
    #[arg(long, global = true, value_name = "PATH")]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the configuration and data before any run.
    Validate,
    /// Train the configured model on the train and validation years; writes model.json.
    Train,
    /// Two-stage random search; writes search.csv and selected_model.json.
    Select,
    /// Full-data and vintage backtest of the configured model; writes metrics.csv.
    Backtest,
    /// Monthly nowcast trace for --target-year; writes trace_<year>.csv.
    Trace,
    /// Classify a catalog for nowcasting feasibility; writes catalog_labeled.csv.
    Classify,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Config(_) | CliError::Ingest(_) => EXIT_VALIDATION,
            CliError::Report(_) | CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }
}

/// Parses arguments, runs the command and returns the process exit code.
/// Messages go to stdout; failures are one `error:` line on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("error: {first}");
            return EXIT_VALIDATION;
        }
    };
    match run(cli.command, &cli.flags) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

/// Runs one command and returns its summary lines.
pub fn run(command: Command, flags: &Flags) -> Result<Vec<String>, CliError> {
    if command == Command::Classify {
        return cmd_classify(flags);
    }
    let path = flags.config.as_ref().ok_or_else(|| CliError::invalid("--config is required"))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    let ctx = Context::load(config, flags)?;
    match command {
        Command::Validate => Ok(vec![format!(
            "ok: {} series, target '{}', {} candidate variables",
            ctx.pool.len(),
            ctx.config.target_series_id,
            ctx.candidates.len()
        )]),
        Command::Train => ctx.train(flags),
        Command::Select => ctx.select(flags),
        Command::Backtest => ctx.backtest(flags),
        Command::Trace => ctx.trace(flags),
        Command::Classify => unreachable!("handled above"),
    }
}

fn output_dir(config: Option<&RunConfig>, flags: &Flags) -> Result<PathBuf, CliError> {
    let dir = match (&flags.out, config) {
        (Some(out), _) => out.clone(),
        (None, Some(c)) => c.resolve(&c.output_dir),
        (None, None) => PathBuf::from("out"),
    };
    fs::create_dir_all(&dir).map_err(|source| ReportError::Io { path: dir.clone(), source })?;
    Ok(dir)
}

/// Loads every configured data source into one pool.
pub fn load_pool(config: &RunConfig) -> Result<Vec<TimeSeries>, IngestError> {
    let mut pool = Vec::new();
    for p in &config.data.series {
        pool.extend(ingest::read_series_csv(&config.resolve(p))?);
    }
    for src in &config.data.sdg_json {
        pool.push(ingest::read_sdg_api_json(&config.resolve(&src.path), src.lag_months)?);
    }
    Ok(pool)
}

/// Every problem that would stop a run, in a stable order.
pub fn validate(config: &RunConfig, pool: &[TimeSeries]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for s in pool {
        if !seen.insert(s.id()) {
            problems.push(format!("series '{}' is defined more than once", s.id()));
        }
    }
    let find = |id: &str| pool.iter().find(|s| s.id() == id);
    let min_obs = config.min_obs as usize;
    let target_id = &config.target_series_id;
    match find(target_id) {
        None => problems.push(format!("target series '{target_id}' not found")),
        Some(t) => {
            if t.frequency() != Frequency::Annual {
                problems.push(format!("target series '{target_id}' must be annual"));
            }
            let n = observation_count(t);
            if n < min_obs {
                problems.push(format!(
                    "target series '{target_id}' has {n} observations; at least {min_obs} are required for nowcasting"
                ));
            }
        }
    }
    let mut referenced: Vec<&String> = config.candidate_variable_ids.iter().collect();
    if let Some(ModelSource::Inline(m)) = &config.model {
        referenced.extend(&m.variables);
    }
    let mut checked = HashSet::new();
    for id in referenced {
        if !checked.insert(id) {
            continue;
        }
        if id == target_id {
            problems.push(format!("variable '{id}' is the target series"));
            continue;
        }
        match find(id) {
            None => problems.push(format!("unknown variable '{id}'")),
            Some(s) if observation_count(s) < min_obs => problems.push(format!(
                "variable '{id}' has {} observations; at least {min_obs} are required",
                observation_count(s)
            )),
            Some(_) => {}
        }
    }
    let splits = config.splits();
    if SplitSpec::new(splits.train, splits.validation, splits.test).is_err() {
        problems.push("splits must be ordered train < validation < test".to_string());
    } else if let Some(t) = find(target_id).filter(|t| t.frequency() == Frequency::Annual) {
        let missing: Vec<String> = (splits.train.first..=splits.test.last)
            .filter(|&y| {
                let p = nowkit_core::series::Period::annual(y);
                t.get(&p).is_none() || t.get(&p.pred()).is_none()
            })
            .map(|y| y.to_string())
            .collect();
        if !missing.is_empty() {
            problems.push(format!("target growth is not available for split years {}", missing.join(",")));
        }
    }
    problems
}

struct Context {
    config: RunConfig,
    pool: Vec<TimeSeries>,
    candidates: Vec<String>,
    exp: Experiment,
    out: PathBuf,
}

impl Context {
    fn load(config: RunConfig, flags: &Flags) -> Result<Self, CliError> {
        let pool = load_pool(&config)?;
        let problems = validate(&config, &pool);
        if !problems.is_empty() {
            return Err(CliError::Validation(problems));
        }
        let exp = Experiment::new(pool.clone(), &config.target_series_id, config.transform_options())
            .map_err(CliError::runtime)?;
        let candidates = if config.candidate_variable_ids.is_empty() {
            exp.candidate_ids()
        } else {
            config.candidate_variable_ids.clone()
        };
        let out = output_dir(Some(&config), flags)?;
        Ok(Context { config, pool, candidates, exp, out })
    }

    fn experiment_at(&self, vintage: Option<VintageDate>) -> Result<Experiment, CliError> {
        match vintage {
            Some(v) => self.exp.as_of(v).map_err(CliError::runtime),
            None => Ok(self.exp.clone()),
        }
    }

    fn train(&self, flags: &Flags) -> Result<Vec<String>, CliError> {
        let spec = self.config.model_spec()?;
        let exp = self.experiment_at(flags.vintage)?;
        let years = self.config.splits().final_train();
        let model = exp.fit(&spec, years).map_err(CliError::runtime)?;
        let path = self.out.join("model.json");
        report::write_model_json(&model, &path)?;
        let loss = model.training_loss_curve.last().copied().unwrap_or(f64::NAN);
        Ok(vec![format!("model trained on {}-{} (final loss {loss}): {}", years.first, years.last, path.display())])
    }

    fn select(&self, flags: &Flags) -> Result<Vec<String>, CliError> {
        let exp = self.experiment_at(flags.vintage)?;
        let search = self.config.search_config(self.candidates.clone());
        let executor = executor::from_env();
        let outcome =
            select_model(&search, &self.config.splits(), &exp, executor.as_ref()).map_err(CliError::runtime)?;
        let csv_path = self.out.join("search.csv");
        report::write_search_csv(&[&outcome.coarse, &outcome.refined], Some(outcome.winner.trial_id), &csv_path)?;
        let model_path = self.out.join("selected_model.json");
        report::write_json(&report::selected_model(&outcome.winner), &model_path)?;
        let (mae, rmse) = outcome.winner.metrics().expect("winner succeeded");
        Ok(vec![
            format!(
                "{} coarse trials ({} failed), {} refined trials",
                outcome.coarse.len(),
                outcome.coarse.failed.len(),
                outcome.refined.len()
            ),
            format!(
                "winner: trial {} variables {} validation mae {mae} rmse {rmse}",
                outcome.winner.trial_id,
                outcome.winner.spec.variables.join(";")
            ),
            format!("wrote {} and {}", csv_path.display(), model_path.display()),
        ])
    }

    fn backtest(&self, flags: &Flags) -> Result<Vec<String>, CliError> {
        let spec = self.config.model_spec()?;
        let schedule = match flags.vintage {
            Some(v) => VintageSchedule::Absolute(vec![v]),
            None => VintageSchedule::checkpoint(),
        };
        let splits = self.config.splits();
        let report = backtest(&spec, &splits, &self.exp, &schedule).map_err(CliError::runtime)?;
        let path = self.out.join("metrics.csv");
        report::write_metrics_csv(&report, &path)?;
        let mut lines: Vec<String> = report
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{} {}: mae {} rmse {} n {}",
                    r.split.name(),
                    r.vintage,
                    r.metrics.mae,
                    r.metrics.rmse,
                    r.metrics.n
                )
            })
            .collect();
        let test_years: Vec<i32> = splits.test.years().collect();
        if let Ok(growth) = self.exp.target_growth() {
            if let Ok(base) = naive_baselines(growth, &test_years) {
                let actuals: Vec<f64> = test_years.iter().filter_map(|&y| self.exp.actual(y).ok()).collect();
                let hist: Vec<f64> = base.iter().map(|b| b.historical_mean).collect();
                let pers: Vec<f64> = base.iter().map(|b| b.persistence).collect();
                if let (Ok(h), Ok(p)) =
                    (nowkit_core::evaluation::mae(&hist, &actuals), nowkit_core::evaluation::mae(&pers, &actuals))
                {
                    lines.push(format!("test baselines: historical-mean mae {h} persistence mae {p}"));
                }
            }
        }
        lines.push(format!("wrote {}", path.display()));
        Ok(lines)
    }

    fn trace(&self, flags: &Flags) -> Result<Vec<String>, CliError> {
        let year = flags.target_year.ok_or_else(|| CliError::invalid("trace needs --target-year"))?;
        if flags.vintage.is_some() {
            return Err(CliError::invalid("trace covers its own vintages; --vintage is not accepted"));
        }
        let spec = self.config.model_spec()?;
        let model = self.exp.fit(&spec, self.config.splits().final_train()).map_err(CliError::runtime)?;
        let trace = nowcast_trace(&model, &self.exp, year).map_err(CliError::runtime)?;
        let path = self.out.join(format!("trace_{year}.csv"));
        ingest::write_trace_csv(&trace, &path).map_err(|e| match e {
            IngestError::Io { path, source } => CliError::Report(ReportError::Io { path, source }),
            other => CliError::runtime(other),
        })?;
        let last = trace.points.last().expect("trace schedule is non-empty");
        Ok(vec![
            format!(
                "{} vintages for {year}; final growth nowcast {} level {}",
                trace.points.len(),
                last.growth_nowcast,
                last.level_nowcast
            ),
            format!("wrote {}", path.display()),
        ])
    }
}

fn cmd_classify(flags: &Flags) -> Result<Vec<String>, CliError> {
    let config = flags.config.as_deref().map(RunConfig::load).transpose()?;
    let catalog: PathBuf = match (&flags.catalog, &config) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => {
            c.catalog.as_ref().map(|p| c.resolve(p)).ok_or_else(|| CliError::invalid("no catalog given"))?
        }
        (None, None) => return Err(CliError::invalid("classify needs --catalog or a config with \"catalog\"")),
    };
    let params = config.as_ref().map(RunConfig::feasibility_params).unwrap_or_default();
    let records = ingest::read_catalog_csv(&catalog)?;
    let out = output_dir(config.as_ref(), flags)?;
    let path = out.join("catalog_labeled.csv");
    report::write_labeled_catalog(&records, &params, &path)?;
    let listed = aggregate_counts(&records, LabelSource::Catalog, &params);
    let derived = aggregate_counts(&records, LabelSource::Derived, &params);
    let agree = match agreement(&records, &params) {
        Ok(a) => a.to_string(),
        Err(e) => e.to_string(),
    };
    Ok(vec![
        format!("catalog labels: {listed}"),
        format!("derived labels: {derived}"),
        format!("agreement: {agree}"),
        format!("wrote {}", path.display()),
    ])
}
