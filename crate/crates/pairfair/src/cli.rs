//! Command-line surface: simulate, train, evaluate, report.
//!
//! All run settings live in a flat key=value config file; the command line
//! only selects the action and overrides the seed and output location. Train
//! writes a self-contained run directory (model artifact, iteration log,
//! hyperparameters) that evaluate and report consume later.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dataset::{self, CsvSchema, Dataset, Protection, SplitTag, Task};
use crate::error::{Error, Result};
use crate::metrics::{
    evaluate_scores, evaluate_stochastic, violation, Criterion, EvalOptions, FairnessSpec,
    MetricBundle, StochasticModel,
};
use crate::model::{Model, ModelSpec};
use crate::report;
use crate::simgen;
use crate::solver::{self, Method, ObjectiveKind, SolverConfig, TrainOutput, TrainSpec};

#[derive(Parser)]
#[command(
    name = "pairfair",
    version,
    about = "Train and audit models for pairwise fairness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic ranking dataset and write it as CSV.
    Simulate {
        /// Generator name: two_group or three_group.
        generator: String,
        /// Number of queries to draw.
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination CSV path; a .meta sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model as described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed (splits, init, pair sampling).
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a trained artifact, or a score column of the dataset.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Writes the JSON report here in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
        /// Evaluate this CSV column as the score instead of a trained model.
        #[arg(long = "score-column")]
        score_column: Option<String>,
    },
    /// Summarize completed training runs under a directory.
    Report { dir: PathBuf },
}

/// Parses arguments, runs the selected command, and maps errors to exit
/// codes: 2 config, 3 data, 4 infeasible fallback, 5 internal.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate {
            generator,
            queries,
            seed,
            out,
        } => cmd_simulate(&generator, queries, seed, &out),
        Command::Train { config, seed, out } => cmd_train(&config, seed, out),
        Command::Evaluate {
            config,
            seed,
            out,
            split,
            score_column,
        } => cmd_evaluate(&config, seed, out, &split, score_column.as_deref()),
        Command::Report { dir } => cmd_report(&dir),
    }
}

// ---------------------------------------------------------------------------
// Config file

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    TwoGroup,
    ThreeGroup,
}

impl Generator {
    pub fn parse(name: &str) -> Result<Generator> {
        match name {
            "two_group" => Ok(Generator::TwoGroup),
            "three_group" => Ok(Generator::ThreeGroup),
            other => Err(Error::Config(format!(
                "unknown generator {:?}, expected two_group or three_group",
                other
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::TwoGroup => "two_group",
            Generator::ThreeGroup => "three_group",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        schema: CsvSchema,
        protection: Protection,
    },
    Simulate {
        generator: Generator,
        queries: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy)]
pub enum ModelKindCfg {
    Linear,
    Mlp { hidden: usize },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub method: Method,
    pub objective: ObjectiveKind,
    pub criterion: Option<Criterion>,
    pub epsilon: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub data: DataSource,
    pub model: ModelKindCfg,
    pub max_pairs: Option<usize>,
    pub solver: SolverConfig,
}

const KNOWN_KEYS: &[&str] = &[
    "task",
    "method",
    "objective",
    "criterion",
    "epsilon",
    "seed",
    "out",
    "data.path",
    "data.label",
    "data.query",
    "data.group",
    "data.attribute",
    "data.protection",
    "data.groups",
    "data.max_pairs",
    "simulate.generator",
    "simulate.queries",
    "simulate.seed",
    "model.kind",
    "model.hidden",
    "solver.iterations",
    "solver.snapshots",
    "solver.step_grid",
    "solver.eta_lambda_ratio",
    "solver.minibatch",
];

struct KeyMap {
    entries: BTreeMap<String, String>,
}

impl KeyMap {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => f(raw).map(Some).ok_or_else(|| {
                Error::Config(format!("config key {} has invalid value {:?}", key, raw))
            }),
        }
    }

    fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_with(key, |s| s.parse().ok())
    }

    fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, |s| s.parse().ok())
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, |s| s.parse().ok())
    }
}

fn parse_key_map(text: &str) -> Result<KeyMap> {
    let mut entries = BTreeMap::new();
    let mut unknown = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {} is not key=value: {:?}",
                lineno + 1,
                line
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            unknown.push(key);
            continue;
        }
        if entries.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("duplicate config key {}", key)));
        }
    }
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(Error::Config(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )));
    }
    Ok(KeyMap { entries })
}

/// Optional column binding: missing key keeps the default, an empty value
/// unbinds the column entirely.
fn column_override(map: &KeyMap, key: &str, default: Option<&str>) -> Option<String> {
    match map.get(key) {
        None => default.map(str::to_string),
        Some("") => None,
        Some(name) => Some(name.to_string()),
    }
}

fn parse_step_grid(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad step grid entry {:?}", tok)))
        })
        .collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let map = parse_key_map(text)?;

    let has_csv = map.get("data.path").is_some();
    let has_sim = map.get("simulate.generator").is_some();
    if has_csv && has_sim {
        return Err(Error::Config(
            "config sets both data.path and simulate.generator; pick one source".into(),
        ));
    }
    if !has_csv && !has_sim {
        return Err(Error::Config(
            "config needs a data source: data.path or simulate.generator".into(),
        ));
    }
    if has_sim {
        for key in KNOWN_KEYS.iter().filter(|k| k.starts_with("data.")) {
            if map.get(key).is_some() {
                return Err(Error::Config(format!(
                    "config key {} requires data.path, not a simulated source",
                    key
                )));
            }
        }
    }

    let task = match map.get("task") {
        None if has_sim => Task::Ranking,
        None => {
            return Err(Error::Config(
                "config key task is required for csv data (ranking or regression)".into(),
            ))
        }
        Some("ranking") => Task::Ranking,
        Some("regression") => Task::Regression,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown task {:?}, expected ranking or regression",
                other
            )))
        }
    };
    if has_sim && task != Task::Ranking {
        return Err(Error::Config(
            "simulated datasets are ranking tasks".into(),
        ));
    }

    let data = if has_sim {
        let generator = Generator::parse(map.get("simulate.generator").unwrap())?;
        let queries = map.get_usize("simulate.queries")?.unwrap_or(1000);
        if queries == 0 {
            return Err(Error::Config("simulate.queries must be positive".into()));
        }
        let seed = map.get_u64("simulate.seed")?.unwrap_or(0);
        DataSource::Simulate {
            generator,
            queries,
            seed,
        }
    } else {
        let path = PathBuf::from(map.get("data.path").unwrap());
        let protection = match map.get("data.protection").unwrap_or("discrete") {
            "discrete" => {
                let k = map.get_usize("data.groups")?.ok_or_else(|| {
                    Error::Config("discrete protection needs data.groups (group count)".into())
                })?;
                if k < 2 {
                    return Err(Error::Config("data.groups must be at least 2".into()));
                }
                Protection::Discrete { k }
            }
            "continuous" => Protection::Continuous,
            other => {
                return Err(Error::Config(format!(
                    "unknown protection {:?}, expected discrete or continuous",
                    other
                )))
            }
        };
        let label = match map.get("data.label") {
            None => "label".to_string(),
            Some("") => return Err(Error::Config("data.label cannot be empty".into())),
            Some(name) => name.to_string(),
        };
        let schema = CsvSchema {
            label,
            query: column_override(&map, "data.query", Some("query_id")),
            group: column_override(&map, "data.group", Some("group")),
            attribute: column_override(&map, "data.attribute", Some("attribute")),
        };
        DataSource::Csv {
            path,
            schema,
            protection,
        }
    };

    let protection = match &data {
        DataSource::Csv { protection, .. } => *protection,
        DataSource::Simulate { generator, .. } => Protection::Discrete {
            k: match generator {
                Generator::TwoGroup => 2,
                Generator::ThreeGroup => 3,
            },
        },
    };

    let method = match map.get("method") {
        None => Method::Unconstrained,
        Some(name) => Method::parse(name)?,
    };
    let objective = match map.get("objective") {
        None => match task {
            Task::Ranking => ObjectiveKind::Auc,
            Task::Regression => ObjectiveKind::Mse,
        },
        Some(name) => ObjectiveKind::parse(name)?,
    };
    if task == Task::Ranking && objective == ObjectiveKind::Mse {
        return Err(Error::Config(
            "mse objective needs a regression task".into(),
        ));
    }

    let criterion = match map.get("criterion") {
        None | Some("none") => None,
        Some(name) => Some(Criterion::parse(name)?),
    };
    if let Some(c) = criterion {
        let continuous = matches!(protection, Protection::Continuous);
        if c.needs_continuous() != continuous {
            return Err(Error::Config(format!(
                "criterion {} needs a {} protected attribute, data has a {} one",
                c.name(),
                if c.needs_continuous() {
                    "continuous"
                } else {
                    "discrete"
                },
                if continuous { "continuous" } else { "discrete" },
            )));
        }
    }
    if matches!(method, Method::Constrained | Method::Robust) && criterion.is_none() {
        return Err(Error::Config(format!(
            "method {} needs a criterion",
            method.name()
        )));
    }

    let epsilon = map.get_f64("epsilon")?.unwrap_or(0.01);
    if !(epsilon >= 0.0) {
        return Err(Error::Config("epsilon must be non-negative".into()));
    }
    let seed = map.get_u64("seed")?.unwrap_or(0);
    let out = map.get("out").map(PathBuf::from);
    let max_pairs = map.get_usize("data.max_pairs")?;

    let model = match map.get("model.kind").unwrap_or("linear") {
        "linear" => {
            if map.get("model.hidden").is_some() {
                return Err(Error::Config(
                    "model.hidden only applies to model.kind = mlp".into(),
                ));
            }
            ModelKindCfg::Linear
        }
        "mlp" => {
            let hidden = map.get_usize("model.hidden")?.ok_or_else(|| {
                Error::Config("model.kind = mlp needs model.hidden (unit count)".into())
            })?;
            if hidden == 0 {
                return Err(Error::Config("model.hidden must be positive".into()));
            }
            ModelKindCfg::Mlp { hidden }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown model kind {:?}, expected linear or mlp",
                other
            )))
        }
    };

    let mut solver_cfg = SolverConfig {
        seed,
        ..SolverConfig::default()
    };
    if let Some(v) = map.get_usize("solver.iterations")? {
        solver_cfg.iterations = v;
    }
    if let Some(v) = map.get_usize("solver.snapshots")? {
        solver_cfg.snapshots = v;
    }
    if let Some(raw) = map.get("solver.step_grid") {
        solver_cfg.step_grid = parse_step_grid(raw)?;
    }
    if let Some(v) = map.get_f64("solver.eta_lambda_ratio")? {
        solver_cfg.eta_lambda_ratio = v;
    }
    solver_cfg.minibatch = match map.get("solver.minibatch") {
        None | Some("none") => None,
        Some(raw) => Some(raw.parse::<usize>().map_err(|_| {
            Error::Config(format!("config key solver.minibatch has invalid value {:?}", raw))
        })?),
    };
    solver_cfg.validate()?;

    Ok(RunConfig {
        task,
        method,
        objective,
        criterion,
        epsilon,
        seed,
        out,
        data,
        model,
        max_pairs,
        solver: solver_cfg,
    })
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

// ---------------------------------------------------------------------------
// Data loading

fn load_data(cfg: &RunConfig, score_column: Option<&str>) -> Result<(Dataset, Option<Vec<f64>>)> {
    match &cfg.data {
        DataSource::Simulate {
            generator,
            queries,
            seed,
        } => {
            if score_column.is_some() {
                return Err(Error::Config(
                    "--score-column needs a csv data source".into(),
                ));
            }
            let ds = match generator {
                Generator::TwoGroup => simgen::two_group(*queries, *seed),
                Generator::ThreeGroup => simgen::three_group(*queries, *seed),
            };
            Ok((ds, None))
        }
        DataSource::Csv {
            path,
            schema,
            protection,
        } => match score_column {
            None => dataset::load_csv(path, schema, cfg.task, *protection).map(|d| (d, None)),
            Some(col) => dataset::load_csv_with_scores(path, schema, cfg.task, *protection, col)
                .map(|(d, s)| (d, Some(s))),
        },
    }
}

fn data_summary(data: &DataSource) -> String {
    match data {
        DataSource::Csv { path, .. } => path.display().to_string(),
        DataSource::Simulate {
            generator,
            queries,
            seed,
        } => format!("simulate:{}:{}:{}", generator.name(), queries, seed),
    }
}

fn model_spec_for(cfg: &RunConfig, dim: usize) -> ModelSpec {
    match cfg.model {
        ModelKindCfg::Linear => ModelSpec::linear(dim),
        ModelKindCfg::Mlp { hidden } => ModelSpec::mlp(dim, hidden),
    }
}

fn eval_options(cfg: &RunConfig) -> EvalOptions {
    // Parity couples are quadratic in the split for regression data, so they
    // are only enumerated when the parity criterion is actually in play.
    let discrete = !matches!(
        &cfg.data,
        DataSource::Csv {
            protection: Protection::Continuous,
            ..
        }
    );
    let with_parity = discrete
        && (cfg.task == Task::Ranking || cfg.criterion == Some(Criterion::StatisticalParity));
    EvalOptions {
        per_query: true,
        with_parity,
    }
}

// ---------------------------------------------------------------------------
// simulate

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_simulate(generator: &str, queries: usize, seed: u64, out: &Path) -> Result<i32> {
    let generator = Generator::parse(generator)?;
    if queries == 0 {
        return Err(Error::Config("--queries must be positive".into()));
    }
    let ds = match generator {
        Generator::TwoGroup => simgen::two_group(queries, seed),
        Generator::ThreeGroup => simgen::three_group(queries, seed),
    };
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
    }
    dataset::write_csv(&ds, out)?;
    let meta = format!(
        "generator={}\nqueries={}\nseed={}\nrows={}\ngroups={}\n",
        generator.name(),
        queries,
        seed,
        ds.len(),
        ds.groups().unwrap_or(0),
    );
    let meta_path = PathBuf::from(format!("{}.meta", out.display()));
    write_file(&meta_path, &meta)?;
    println!("wrote {} rows to {}", ds.len(), out.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// train

fn fmt_opt6(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.6}", x),
        None => "na".into(),
    }
}

fn join6(values: &[f64]) -> String {
    if values.is_empty() {
        return "-".into();
    }
    values
        .iter()
        .map(|v| format!("{:.6}", v))
        .collect::<Vec<_>>()
        .join(",")
}

fn run_log_text(cfg: &RunConfig, output: &TrainOutput, bundle: &MetricBundle) -> String {
    let mut out = String::new();
    out.push_str(&format!("# step\t{}\n", output.chosen_step));
    let labels = if output.log.constraint_labels.is_empty() {
        "-".to_string()
    } else {
        output.log.constraint_labels.join(",")
    };
    out.push_str(&format!("# constraints\t{}\n", labels));
    out.push_str(
        "# iteration\tlambda\tsurrogate_objective\tvalidation_objective\tvalidation_slacks\n",
    );
    for line in &output.log.lines {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\t{}\n",
            line.iteration,
            join6(&line.lambda),
            line.surrogate_objective,
            line.validation_objective,
            join6(&line.validation_slacks),
        ));
    }
    let value = match cfg.objective {
        ObjectiveKind::Auc => bundle.auc,
        ObjectiveKind::Mse => bundle.mse,
    };
    let viol = cfg.criterion.and_then(|c| violation(bundle, c));
    out.push_str(&format!(
        "result\tobjective={}\tvalue={}\tcriterion={}\tviolation={}\n",
        cfg.objective.name(),
        fmt_opt6(value),
        cfg.criterion.map_or("none", |c| c.name()),
        fmt_opt6(viol),
    ));
    out
}

fn hyperparams_text(cfg: &RunConfig, output: &TrainOutput) -> String {
    let model = match cfg.model {
        ModelKindCfg::Linear => "linear".to_string(),
        ModelKindCfg::Mlp { hidden } => format!("mlp:{}", hidden),
    };
    let grid = cfg
        .solver
        .step_grid
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let dropped = if output.dropped.is_empty() {
        "none".to_string()
    } else {
        output.dropped.join(",")
    };
    format!(
        "method={}\nobjective={}\ncriterion={}\nepsilon={}\nmodel={}\n\
         iterations={}\nsnapshots={}\nstep_grid={}\neta_lambda_ratio={}\nminibatch={}\n\
         seed={}\ndata={}\nchosen_step={}\nfallback={}\ndropped={}\n",
        cfg.method.name(),
        cfg.objective.name(),
        cfg.criterion.map_or("none", |c| c.name()),
        cfg.epsilon,
        model,
        cfg.solver.iterations,
        cfg.solver.snapshots,
        grid,
        cfg.solver.eta_lambda_ratio,
        cfg.solver
            .minibatch
            .map_or("none".to_string(), |b| b.to_string()),
        cfg.seed,
        data_summary(&cfg.data),
        output.chosen_step,
        u8::from(output.fallback),
        dropped,
    )
}

fn cmd_train(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<i32> {
    let mut cfg = read_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.solver.seed = s;
    }
    if let Some(o) = out {
        cfg.out = Some(o);
    }
    let out_dir = cfg.out.clone().ok_or_else(|| {
        Error::Config("training needs an output directory: config key out or --out".into())
    })?;

    let (ds, _) = load_data(&cfg, None)?;
    let ds = dataset::split(ds, cfg.seed)?;
    let spec = TrainSpec {
        dataset: &ds,
        model_spec: model_spec_for(&cfg, ds.dim),
        method: cfg.method,
        objective: cfg.objective,
        fairness: cfg
            .criterion
            .map(|c| FairnessSpec::new(c, cfg.epsilon))
            .transpose()?,
        max_pairs: cfg.max_pairs,
        config: cfg.solver.clone(),
    };
    let output = solver::train(&spec)?;

    let (bundle, _) = evaluate_stochastic(
        &output.model,
        &ds,
        SplitTag::Validation,
        eval_options(&cfg),
    )?;

    fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
        path: out_dir.clone(),
        source: e,
    })?;
    if output.model.atoms.len() == 1
        && matches!(cfg.method, Method::Unconstrained | Method::Debiased)
    {
        write_file(&out_dir.join("model.txt"), &output.model.atoms[0].1.to_text())?;
    } else {
        write_file(&out_dir.join("stochastic.txt"), &output.model.to_text())?;
    }
    write_file(&out_dir.join("run.log"), &run_log_text(&cfg, &output, &bundle))?;
    write_file(&out_dir.join("hyperparams.txt"), &hyperparams_text(&cfg, &output))?;

    let value = match cfg.objective {
        ObjectiveKind::Auc => bundle.auc,
        ObjectiveKind::Mse => bundle.mse,
    };
    let viol = cfg.criterion.and_then(|c| violation(&bundle, c));
    println!(
        "trained {} (step {}) validation {}={} violation={} -> {}",
        cfg.method.name(),
        output.chosen_step,
        cfg.objective.name(),
        fmt_opt6(value),
        fmt_opt6(viol),
        out_dir.display(),
    );
    for label in &output.dropped {
        eprintln!("note: constraint {} dropped (no pairs on train split)", label);
    }
    if output.fallback {
        eprintln!("warning: shrink step infeasible, fell back to the least-violating iterate");
        return Ok(4);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// evaluate

fn parse_split(name: &str) -> Result<SplitTag> {
    match name {
        "train" => Ok(SplitTag::Train),
        "validation" => Ok(SplitTag::Validation),
        "test" => Ok(SplitTag::Test),
        other => Err(Error::Config(format!(
            "unknown split {:?}, expected train, validation, or test",
            other
        ))),
    }
}

fn load_artifact(dir: &Path) -> Result<StochasticModel> {
    let stochastic = dir.join("stochastic.txt");
    let single = dir.join("model.txt");
    if stochastic.exists() {
        let text = fs::read_to_string(&stochastic).map_err(|e| Error::Io {
            path: stochastic.clone(),
            source: e,
        })?;
        StochasticModel::from_text(&text, &stochastic)
    } else if single.exists() {
        let text = fs::read_to_string(&single).map_err(|e| Error::Io {
            path: single.clone(),
            source: e,
        })?;
        Ok(StochasticModel::degenerate(Model::from_text(
            &text, &single,
        )?))
    } else {
        Err(Error::Data(format!(
            "no model artifact (stochastic.txt or model.txt) under {}",
            dir.display()
        )))
    }
}

fn cmd_evaluate(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    split: &str,
    score_column: Option<&str>,
) -> Result<i32> {
    let mut cfg = read_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let tag = parse_split(split)?;
    let (ds, scores) = load_data(&cfg, score_column)?;
    let ds = dataset::split(ds, cfg.seed)?;
    let opts = eval_options(&cfg);

    let (bundle, atoms) = match scores {
        Some(scores) => (evaluate_scores(&ds, tag, &scores, opts)?, Vec::new()),
        None => {
            let dir = cfg.out.clone().ok_or_else(|| {
                Error::Config("evaluating a trained model needs config key out".into())
            })?;
            let smodel = load_artifact(&dir)?;
            evaluate_stochastic(&smodel, &ds, tag, opts)?
        }
    };
    let atoms = if atoms.len() > 1 { Some(&atoms[..]) } else { None };
    let json = report::bundle_json(&bundle, split, atoms);
    print!("{}", json);
    eprint!("{}", report::render_bundle(&bundle, split));
    if let Some(path) = out {
        write_file(&path, &json)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// report

struct RunRow {
    method: String,
    value: f64,
    violation: Option<f64>,
    dir_name: String,
}

fn parse_run_dir(dir: &Path) -> Option<RunRow> {
    let hp = fs::read_to_string(dir.join("hyperparams.txt")).ok()?;
    let method = hp
        .lines()
        .find_map(|l| l.strip_prefix("method="))?
        .to_string();
    let log = fs::read_to_string(dir.join("run.log")).ok()?;
    let result = log
        .lines()
        .rev()
        .find(|l| l.starts_with("result\t"))?;
    let mut value = None;
    let mut violation = None;
    for field in result.split('\t').skip(1) {
        if let Some(v) = field.strip_prefix("value=") {
            value = Some(v.parse::<f64>().ok()?);
        } else if let Some(v) = field.strip_prefix("violation=") {
            violation = match v {
                "na" => Some(None),
                _ => Some(Some(v.parse::<f64>().ok()?)),
            };
        }
    }
    Some(RunRow {
        method,
        value: value?,
        violation: violation?,
        dir_name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
    })
}

fn cmd_report(dir: &Path) -> Result<i32> {
    let mut candidates = Vec::new();
    if dir.join("run.log").exists() {
        candidates.push(dir.to_path_buf());
    } else {
        let entries = fs::read_dir(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let mut subdirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.join("run.log").exists())
            .collect();
        subdirs.sort();
        candidates.extend(subdirs);
    }
    if candidates.is_empty() {
        return Err(Error::Data(format!(
            "no run logs under {}",
            dir.display()
        )));
    }
    let mut rows = Vec::new();
    let mut malformed = Vec::new();
    for run_dir in &candidates {
        match parse_run_dir(run_dir) {
            Some(row) => rows.push(row),
            None => malformed.push(
                run_dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| run_dir.display().to_string()),
            ),
        }
    }
    rows.sort_by(|a, b| (&a.method, &a.dir_name).cmp(&(&b.method, &b.dir_name)));
    for row in &rows {
        println!("{}", report::summary_row(&row.method, row.value, row.violation));
    }
    for name in &malformed {
        eprintln!("warning: {} has a malformed or incomplete run log", name);
    }
    if malformed.is_empty() {
        Ok(0)
    } else {
        Ok(3)
    }
}
