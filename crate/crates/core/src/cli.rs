//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::Serialize;

use crate::dataset::{load_csv, load_libsvm, Dataset, PcaModel, Standardizer};
use crate::error::Error;
use crate::eval::{
    fmt17, fmt4, rank_reports, run_cv_seeded, run_holdout, to_json_17, train_metric_with,
    DumpRequest, EvalReport, Method, MethodConfig, Preprocessor, TieRule, TrainSummary,
};
use crate::klr::KlrConfig;
use crate::metric::{psd_project, symmetric_eigendecomposition, MetricMatrix};
use crate::solver::TraceWriter;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Parser, Debug)]
#[command(
    name = "metric-svm",
    version,
    about = "Learn Mahalanobis metrics with doublet/triplet SVMs and evaluate them with k-NN"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn a metric on a whole dataset and write it out.
    Train(RunArgs),
    /// Cross-validated (or hold-out) k-NN error of one method.
    Evaluate(RunArgs),
    /// Every method on every dataset, plus an average-rank table.
    Benchmark(RunArgs),
    /// Cross-validated error over grids of m1, m2 and C.
    Sweep(RunArgs),
    /// Convert a stored metric to another representation.
    ExportMetric(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Libsvm,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// key=value file; command-line flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file(s); repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    data: Vec<String>,
    /// Fixed test set; switches evaluate to a hold-out run.
    #[arg(long)]
    test_data: Option<String>,
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
    /// CSV label column (0-based); defaults to the last.
    #[arg(long)]
    label_column: Option<usize>,
    /// Stratified subsample size applied after loading.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// PCA output dimension; 0 disables.
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// KKT tolerance of the SVM solvers.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_standardize: bool,
    /// Use the unprojected M in k-NN.
    #[arg(long)]
    raw_metric: bool,
    /// Ridge weight for doublet-klr.
    #[arg(long)]
    ridge: Option<f64>,
    /// Iteration cap for doublet-klr.
    #[arg(long)]
    klr_max_iter: Option<usize>,
    /// SVM update budget in multiples of the constraint count.
    #[arg(long)]
    max_passes: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    m1_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    m2_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    c_grid: Vec<f64>,
    /// Per-sweep solver trace (train only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the Gram matrix next to the metric (train only).
    #[arg(long)]
    dump_gram: bool,
    /// Write the constraint list next to the metric (train only).
    #[arg(long)]
    dump_constraints: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Text,
    Json,
    /// L with M = LᵀL (after PSD projection).
    Factor,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Metric file written by `train`.
    #[arg(long)]
    metric: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    to: ExportFormat,
    /// Project onto the PSD cone first.
    #[arg(long)]
    project: bool,
}

/// Fully resolved settings, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub data: Vec<String>,
    pub test_data: Option<String>,
    pub format: Option<DataFormat>,
    pub label_column: Option<usize>,
    pub subsample: Option<usize>,
    pub methods: Vec<Method>,
    pub m1: usize,
    pub m2: usize,
    pub c: f64,
    pub k: usize,
    pub pca_dim: usize,
    pub folds: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub out: String,
    pub standardize: bool,
    pub raw_metric: bool,
    pub ridge: f64,
    pub klr_max_iter: usize,
    pub max_passes: usize,
    pub m1_grid: Vec<usize>,
    pub m2_grid: Vec<usize>,
    pub c_grid: Vec<f64>,
    pub trace: Option<String>,
    pub dump_gram: bool,
    pub dump_constraints: bool,
}

impl RunConfig {
    pub fn method_config(&self, method: Method) -> MethodConfig {
        MethodConfig {
            method,
            m1: self.m1,
            m2: self.m2,
            c: self.c,
            k: self.k,
            pca_dim: self.pca_dim,
            standardize: self.standardize,
            raw_metric: self.raw_metric,
            tolerance: self.tolerance,
            seed: self.seed,
            max_passes: self.max_passes,
            klr: KlrConfig {
                ridge: self.ridge,
                max_iter: self.klr_max_iter,
                ..KlrConfig::default()
            },
        }
    }

    /// The same settings as a config file.
    pub fn to_text(&self) -> String {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut lines = vec![
            format!("command = {}", self.command),
            format!("data = {}", self.data.join(",")),
        ];
        if let Some(t) = &self.test_data {
            lines.push(format!("test-data = {t}"));
        }
        if let Some(f) = self.format {
            lines.push(format!(
                "format = {}",
                if f == DataFormat::Csv {
                    "csv"
                } else {
                    "libsvm"
                }
            ));
        }
        if let Some(l) = self.label_column {
            lines.push(format!("label-column = {l}"));
        }
        if let Some(s) = self.subsample {
            lines.push(format!("subsample = {s}"));
        }
        lines.extend([
            format!("method = {}", list(&self.methods)),
            format!("m1 = {}", self.m1),
            format!("m2 = {}", self.m2),
            format!("c = {}", fmt17(self.c)),
            format!("k = {}", self.k),
            format!("pca = {}", self.pca_dim),
            format!("folds = {}", self.folds),
            format!("seed = {}", self.seed),
            format!("tol = {}", fmt17(self.tolerance)),
            format!("out = {}", self.out),
            format!("standardize = {}", self.standardize),
            format!("raw-metric = {}", self.raw_metric),
            format!("ridge = {}", fmt17(self.ridge)),
            format!("klr-max-iter = {}", self.klr_max_iter),
            format!("max-passes = {}", self.max_passes),
        ]);
        if !self.m1_grid.is_empty() {
            lines.push(format!("m1-grid = {}", list(&self.m1_grid)));
        }
        if !self.m2_grid.is_empty() {
            lines.push(format!("m2-grid = {}", list(&self.m2_grid)));
        }
        if !self.c_grid.is_empty() {
            lines.push(format!(
                "c-grid = {}",
                self.c_grid
                    .iter()
                    .map(|c| fmt17(*c))
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

const CONFIG_KEYS: &[&str] = &[
    "data",
    "test-data",
    "format",
    "label-column",
    "subsample",
    "method",
    "m1",
    "m2",
    "c",
    "k",
    "pca",
    "folds",
    "seed",
    "tol",
    "out",
    "standardize",
    "raw-metric",
    "ridge",
    "klr-max-iter",
    "max-passes",
    "m1-grid",
    "m2-grid",
    "c-grid",
    "trace",
    "dump-gram",
    "dump-constraints",
];

/// Parses `key = value` lines; `#` starts a comment. Underscores in keys
/// are read as dashes.
pub fn parse_config_text(text: &str) -> std::result::Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let key = k.trim().replace('_', "-");
        if key == "command" {
            continue;
        }
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(format!("config line {}: unknown key {key:?}", i + 1));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

struct ConfigFile(BTreeMap<String, String>);

impl ConfigFile {
    fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> CliResult<Vec<T>> {
        match self.0.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| {
                        CliError::Usage(format!("config key {key}: cannot parse {s:?}"))
                    })
                })
                .collect(),
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_list<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

fn resolve(command: &str, a: RunArgs) -> CliResult<RunConfig> {
    let file = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Runtime(Error::io(p, e)))?;
            ConfigFile(parse_config_text(&text).map_err(CliError::Usage)?)
        }
        None => ConfigFile(BTreeMap::new()),
    };
    let format = match a.format {
        Some(f) => Some(f),
        None => match file.0.get("format").map(String::as_str) {
            None => None,
            Some("csv") => Some(DataFormat::Csv),
            Some("libsvm") => Some(DataFormat::Libsvm),
            Some(other) => return usage(format!("unknown format {other:?}")),
        },
    };
    let method_names = pick_list(a.method, file.list::<String>("method")?);
    let mut methods = Vec::new();
    for m in &method_names {
        let parsed: Method = m
            .parse()
            .map_err(|e: Error| CliError::Usage(e.to_string()))?;
        if !methods.contains(&parsed) {
            methods.push(parsed);
        }
    }
    if methods.is_empty() {
        methods = if command == "benchmark" {
            Method::ALL.to_vec()
        } else {
            vec![Method::DoubletSvm]
        };
    }
    let defaults = MethodConfig::default();
    let cfg = RunConfig {
        command: command.to_string(),
        data: pick_list(a.data, file.list("data")?),
        test_data: a.test_data.or(file.get("test-data")?),
        format,
        label_column: a.label_column.or(file.get("label-column")?),
        subsample: a.subsample.or(file.get("subsample")?),
        methods,
        m1: pick(a.m1, file.get("m1")?, defaults.m1),
        m2: pick(a.m2, file.get("m2")?, defaults.m2),
        c: pick(a.c, file.get("c")?, defaults.c),
        k: pick(a.k, file.get("k")?, defaults.k),
        pca_dim: pick(a.pca, file.get("pca")?, defaults.pca_dim),
        folds: pick(a.folds, file.get("folds")?, 10),
        seed: pick(a.seed, file.get("seed")?, defaults.seed),
        tolerance: pick(a.tol, file.get("tol")?, defaults.tolerance),
        out: a
            .out
            .map(|p| p.to_string_lossy().into_owned())
            .or(file.get("out")?)
            .unwrap_or_else(|| "out".into()),
        standardize: if a.no_standardize {
            false
        } else {
            file.get("standardize")?.unwrap_or(defaults.standardize)
        },
        raw_metric: a.raw_metric || file.get("raw-metric")?.unwrap_or(false),
        ridge: pick(a.ridge, file.get("ridge")?, defaults.klr.ridge),
        klr_max_iter: pick(
            a.klr_max_iter,
            file.get("klr-max-iter")?,
            defaults.klr.max_iter,
        ),
        max_passes: pick(a.max_passes, file.get("max-passes")?, defaults.max_passes),
        m1_grid: pick_list(a.m1_grid, file.list("m1-grid")?),
        m2_grid: pick_list(a.m2_grid, file.list("m2-grid")?),
        c_grid: pick_list(a.c_grid, file.list("c-grid")?),
        trace: a
            .trace
            .map(|p| p.to_string_lossy().into_owned())
            .or(file.get("trace")?),
        dump_gram: a.dump_gram || file.get("dump-gram")?.unwrap_or(false),
        dump_constraints: a.dump_constraints || file.get("dump-constraints")?.unwrap_or(false),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> CliResult<()> {
    if cfg.data.is_empty() {
        return usage("--data is required");
    }
    let single = matches!(cfg.command.as_str(), "train" | "evaluate");
    if single && cfg.data.len() != 1 {
        return usage(format!("{} takes exactly one dataset", cfg.command));
    }
    if single && cfg.methods.len() != 1 {
        return usage(format!("{} takes exactly one method", cfg.command));
    }
    if cfg.command == "sweep" && cfg.methods.len() != 1 {
        return usage("sweep takes exactly one method");
    }
    if cfg.test_data.is_some() && cfg.command != "evaluate" {
        return usage("--test-data only applies to evaluate");
    }
    if cfg.command != "train" && cfg.test_data.is_none() && cfg.folds < 2 {
        return usage("--folds must be at least 2");
    }
    if cfg.command != "train" && (cfg.trace.is_some() || cfg.dump_gram || cfg.dump_constraints) {
        return usage("--trace, --dump-gram and --dump-constraints only apply to train");
    }
    let grid_check = |m1: usize, m2: usize, c: f64| -> CliResult<()> {
        for &method in &cfg.methods {
            let mc = MethodConfig {
                m1,
                m2,
                c,
                ..cfg.method_config(method)
            };
            mc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(())
    };
    grid_check(cfg.m1, cfg.m2, cfg.c)?;
    for &m1 in &cfg.m1_grid {
        grid_check(m1, cfg.m2.max(1), cfg.c)?;
    }
    for &m2 in &cfg.m2_grid {
        grid_check(cfg.m1.max(1), m2, cfg.c)?;
    }
    for &c in &cfg.c_grid {
        grid_check(cfg.m1, cfg.m2, c)?;
    }
    if cfg.command != "sweep"
        && !(cfg.m1_grid.is_empty() && cfg.m2_grid.is_empty() && cfg.c_grid.is_empty())
    {
        return usage("grids only apply to sweep");
    }
    Ok(())
}

fn infer_format(path: &str, explicit: Option<DataFormat>) -> CliResult<DataFormat> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    match Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("csv") => Ok(DataFormat::Csv),
        Some("libsvm") => Ok(DataFormat::Libsvm),
        _ => usage(format!("cannot infer the format of {path}; pass --format")),
    }
}

fn load(path: &str, cfg: &RunConfig) -> CliResult<Dataset> {
    let data = match infer_format(path, cfg.format)? {
        DataFormat::Csv => load_csv(path, cfg.label_column)?,
        DataFormat::Libsvm => load_libsvm(path)?,
    };
    Ok(match cfg.subsample {
        Some(n) if n < data.len() => data.stratified_subsample(n, cfg.seed),
        _ => data,
    })
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> crate::error::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    Path::new(&cfg.out).join(name)
}

fn put(cfg: &RunConfig, name: &str, contents: &str) -> CliResult<()> {
    write_atomic(&out_path(cfg, name), contents.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a, T: Serialize> {
    config: &'a RunConfig,
    report: &'a T,
}

fn report_json<T: Serialize>(cfg: &RunConfig, report: &T) -> CliResult<String> {
    Ok(to_json_17(&ReportFile {
        config: cfg,
        report,
    })?)
}

fn eval_report_text(cfg: &RunConfig, r: &EvalReport) -> String {
    let mut s = cfg
        .to_text()
        .lines()
        .map(|l| format!("config.{l}\n"))
        .collect::<String>();
    s.push_str(&r.to_text());
    s
}

fn report_stem(r: &EvalReport) -> String {
    format!("{}_{}", r.dataset, r.method)
}

fn write_eval_report(cfg: &RunConfig, r: &EvalReport) -> CliResult<()> {
    let stem = report_stem(r);
    put(cfg, &format!("{stem}.json"), &report_json(cfg, r)?)?;
    put(cfg, &format!("{stem}.txt"), &eval_report_text(cfg, r))?;
    put(cfg, &format!("{stem}.timings.txt"), &r.timings_text())?;
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    dataset: &'a str,
    samples: usize,
    input_dim: usize,
    metric_dim: usize,
    method: Method,
    summary: &'a TrainSummary,
    standardizer: Option<StandardizerOut>,
}

#[derive(Serialize)]
struct StandardizerOut {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl From<&Standardizer> for StandardizerOut {
    fn from(s: &Standardizer) -> Self {
        StandardizerOut {
            mean: s.mean.to_vec(),
            std: s.std.to_vec(),
        }
    }
}

fn cmd_train(cfg: &RunConfig) -> CliResult<()> {
    let data = load(&cfg.data[0], cfg)?;
    let mc = cfg.method_config(cfg.methods[0]);
    let pre = Preprocessor::fit(&data, &mc)?;
    let prepared = pre.apply(&data)?;
    let dumps = DumpRequest {
        constraints: cfg.dump_constraints,
        gram: cfg.dump_gram,
    };
    let (trained, dumped) = match &cfg.trace {
        Some(p) => {
            let mut w = TraceWriter::new(Vec::new());
            let r = train_metric_with(&prepared, &mc, &mut w, dumps)?;
            write_atomic(Path::new(p), &w.into_inner())?;
            r
        }
        None => train_metric_with(&prepared, &mc, &mut (), dumps)?,
    };
    put(cfg, "metric.txt", &trained.projected.to_text())?;
    put(cfg, "metric_raw.txt", &trained.raw.to_text())?;
    if let Some(p) = &pre.pca {
        put(cfg, "pca.txt", &p.to_text())?;
    }
    if let Some(c) = &dumped.constraints {
        put(cfg, "constraints.txt", c)?;
    }
    if let Some(g) = &dumped.gram {
        put(cfg, "gram.txt", g)?;
    }
    let report = TrainReport {
        dataset: &data.name,
        samples: data.len(),
        input_dim: data.dim(),
        metric_dim: trained.raw.dim(),
        method: mc.method,
        summary: &trained.summary,
        standardizer: pre.standardizer.as_ref().map(StandardizerOut::from),
    };
    put(cfg, "train_report.json", &report_json(cfg, &report)?)?;
    put(
        cfg,
        "timings.txt",
        &format!("train_seconds = {}\n", fmt17(trained.train_seconds)),
    )?;
    let s = &trained.summary;
    println!(
        "{} on {}: {} constraints, objective {}, support {}, converged {}",
        mc.method,
        data.name,
        s.constraint_count,
        fmt4(s.objective),
        s.support_count,
        s.converged
    );
    Ok(())
}

fn evaluate_one(cfg: &RunConfig, data: &Dataset, mc: &MethodConfig) -> CliResult<EvalReport> {
    let r = match &cfg.test_data {
        Some(t) => {
            let test = load(t, cfg)?;
            run_holdout(data, &test, mc)?
        }
        None => run_cv_seeded(data, mc, cfg.folds, cfg.seed)?,
    };
    write_eval_report(cfg, &r)?;
    Ok(r)
}

fn cmd_evaluate(cfg: &RunConfig) -> CliResult<()> {
    let data = load(&cfg.data[0], cfg)?;
    let r = evaluate_one(cfg, &data, &cfg.method_config(cfg.methods[0]))?;
    println!(
        "{} on {}: mean error {}% over {} fold(s)",
        r.method,
        r.dataset,
        fmt4(r.mean_error),
        r.fold_count
    );
    Ok(())
}

fn cmd_benchmark(cfg: &RunConfig) -> CliResult<()> {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for path in &cfg.data {
        let data = match load(path, cfg) {
            Ok(d) => d,
            Err(CliError::Usage(m)) => return usage(m),
            Err(CliError::Runtime(e)) => {
                eprintln!("error: {path}: {e}");
                failures.push(format!("{path}: {e}"));
                continue;
            }
        };
        for &m in &cfg.methods {
            match evaluate_one(cfg, &data, &cfg.method_config(m)) {
                Ok(r) => {
                    println!(
                        "{} on {}: mean error {}%",
                        r.method,
                        r.dataset,
                        fmt4(r.mean_error)
                    );
                    reports.push(r);
                }
                Err(e) => {
                    eprintln!("{}: {m}: {e}", data.name);
                    failures.push(format!("{} {m}: {e}", data.name));
                }
            }
        }
    }
    if !reports.is_empty() {
        let table = rank_reports(&reports, TieRule::Min)?;
        put(cfg, "ranks.txt", &table.to_aligned_text())?;
        put(cfg, "ranks.csv", &table.to_csv())?;
        print!("{}", table.to_aligned_text());
    }
    if failures.is_empty() {
        Ok(())
    } else {
        put(cfg, "failures.txt", &(failures.join("\n") + "\n"))?;
        Err(CliError::Runtime(Error::invalid(format!(
            "{} run(s) failed",
            failures.len()
        ))))
    }
}

#[derive(Serialize)]
struct SweepRow {
    dataset: String,
    m1: usize,
    m2: usize,
    c: f64,
    mean_error: Option<f64>,
    error: Option<String>,
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let method = cfg.methods[0];
    let m1s = if cfg.m1_grid.is_empty() {
        vec![cfg.m1]
    } else {
        cfg.m1_grid.clone()
    };
    let m2s = if cfg.m2_grid.is_empty() {
        vec![cfg.m2]
    } else {
        cfg.m2_grid.clone()
    };
    let cs = if cfg.c_grid.is_empty() {
        vec![cfg.c]
    } else {
        cfg.c_grid.clone()
    };
    let mut rows = Vec::new();
    let mut failed = 0;
    for path in &cfg.data {
        let data = match load(path, cfg) {
            Ok(d) => d,
            Err(CliError::Usage(m)) => return usage(m),
            Err(CliError::Runtime(e)) => {
                eprintln!("error: {path}: {e}");
                failed += 1;
                continue;
            }
        };
        for &m1 in &m1s {
            for &m2 in &m2s {
                for &c in &cs {
                    let mc = MethodConfig {
                        m1,
                        m2,
                        c,
                        ..cfg.method_config(method)
                    };
                    let (mean_error, error) = match run_cv_seeded(&data, &mc, cfg.folds, cfg.seed) {
                        Ok(r) => (Some(r.mean_error), None),
                        Err(e) => {
                            failed += 1;
                            eprintln!("{} m1={m1} m2={m2} c={c}: {e}", data.name);
                            (None, Some(e.to_string()))
                        }
                    };
                    println!(
                        "{} m1={m1} m2={m2} C={}: {}",
                        data.name,
                        fmt4(c),
                        mean_error
                            .map(|e| format!("{}%", fmt4(e)))
                            .unwrap_or_else(|| "failed".into())
                    );
                    rows.push(SweepRow {
                        dataset: data.name.clone(),
                        m1,
                        m2,
                        c,
                        mean_error,
                        error,
                    });
                }
            }
        }
    }
    let mut csv = String::from("dataset,method,m1,m2,c,mean_error\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{method},{},{},{},{}\n",
            r.dataset,
            r.m1,
            r.m2,
            fmt17(r.c),
            r.mean_error.map(fmt17).unwrap_or_default()
        ));
    }
    put(cfg, "sweep.csv", &csv)?;
    put(cfg, "sweep.json", &report_json(cfg, &rows)?)?;
    if failed > 0 {
        return Err(CliError::Runtime(Error::invalid(format!(
            "{failed} sweep point(s) failed"
        ))));
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricJson {
    dim: usize,
    psd_projected: bool,
    matrix: Vec<Vec<f64>>,
}

fn rows_of(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn cmd_export(a: &ExportArgs) -> CliResult<()> {
    let mut metric = MetricMatrix::load(&a.metric)?;
    if a.project || a.to == ExportFormat::Factor {
        metric = psd_project(&metric)?;
    }
    let text = match a.to {
        ExportFormat::Text => metric.to_text(),
        ExportFormat::Json => to_json_17(&MetricJson {
            dim: metric.dim(),
            psd_projected: metric.psd_projected,
            matrix: rows_of(&metric.m),
        })?,
        ExportFormat::Factor => {
            let e = symmetric_eigendecomposition(&metric.m)?;
            let d = metric.dim();
            let mut l = Array2::zeros((d, d));
            for (r, &lam) in e.eigenvalues.iter().enumerate() {
                let s = lam.max(0.0).sqrt();
                for c in 0..d {
                    l[[r, c]] = s * e.eigenvectors[[c, r]];
                }
            }
            let mut s = format!("{d} {d}\n");
            for row in l.rows() {
                s.push_str(&row.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(" "));
                s.push('\n');
            }
            s
        }
    };
    match &a.out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&resolve("train", a)?),
        Command::Evaluate(a) => cmd_evaluate(&resolve("evaluate", a)?),
        Command::Benchmark(a) => cmd_benchmark(&resolve("benchmark", a)?),
        Command::Sweep(a) => cmd_sweep(&resolve("sweep", a)?),
        Command::ExportMetric(a) => cmd_export(&a),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e @ CliError::Usage(_)) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_RUNTIME
        }
    }
}

/// Re-reads a PCA model written by `train`.
pub fn load_pca(path: &Path) -> crate::error::Result<PcaModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PcaModel::from_text(&text)
}
