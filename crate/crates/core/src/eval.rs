//! k-NN evaluation, cross-validation and rank tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{build_doublets, build_triplets};
use crate::dataset::{kfold_split, pca_fit, CvSplit, Dataset, Label, PcaModel, Standardizer};
use crate::error::{Error, Result};
use crate::kernels::{GramOptions, GramView};
use crate::klr::{
    fit_doublet_klr_observed, labels01_from_doublets, reconstruct_klr_metric, KlrConfig,
};
use crate::metric::{
    mahalanobis, psd_project, reconstruct_doublet_metric, reconstruct_triplet_metric, MetricMatrix,
};
use crate::solver::{
    solve_doublet_svm_observed, solve_triplet_svm_observed, DualSolution, SolverConfig,
    SolverObserver, TraceRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DoubletSvm,
    TripletSvm,
    DoubletKlr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::DoubletSvm, Method::TripletSvm, Method::DoubletKlr];

    pub fn name(self) -> &'static str {
        match self {
            Method::DoubletSvm => "doublet-svm",
            Method::TripletSvm => "triplet-svm",
            Method::DoubletKlr => "doublet-klr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method {s:?} (expected doublet-svm, triplet-svm or doublet-klr)"
                ))
            })
    }
}

/// Everything needed to turn a training split into a metric and score it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub m1: usize,
    pub m2: usize,
    pub c: f64,
    pub k: usize,
    /// 0 disables PCA.
    pub pca_dim: usize,
    pub standardize: bool,
    /// Use the unprojected M in k-NN.
    pub raw_metric: bool,
    pub tolerance: f64,
    pub seed: u64,
    pub max_passes: usize,
    pub klr: KlrConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            method: Method::DoubletSvm,
            m1: 2,
            m2: 2,
            c: 1.0,
            k: 1,
            pca_dim: 0,
            standardize: true,
            raw_metric: false,
            tolerance: 1e-3,
            seed: 0,
            max_passes: 1000,
            klr: KlrConfig::default(),
        }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m1 + self.m2 == 0 {
            return Err(Error::invalid("m1 + m2 must be at least 1"));
        }
        if self.method == Method::TripletSvm && (self.m1 == 0 || self.m2 == 0) {
            return Err(Error::invalid("triplets need m1 >= 1 and m2 >= 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.klr.ridge < 0.0 {
            return Err(Error::invalid("ridge must be non-negative"));
        }
        self.solver_config().validate()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            c: self.c,
            tolerance: self.tolerance,
            max_passes: self.max_passes,
            seed: self.seed,
            shrinking: true,
        }
    }
}

/// Standardization and PCA fitted on a training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessor {
    pub standardizer: Option<Standardizer>,
    pub pca: Option<PcaModel>,
}

impl Preprocessor {
    pub fn fit(train: &Dataset, config: &MethodConfig) -> Result<Self> {
        let standardizer = if config.standardize {
            Some(Standardizer::fit(train)?)
        } else {
            None
        };
        let pca = if config.pca_dim > 0 {
            let scaled = match &standardizer {
                Some(s) => s.apply(train)?,
                None => train.clone(),
            };
            Some(pca_fit(&scaled, config.pca_dim)?)
        } else {
            None
        };
        Ok(Preprocessor { standardizer, pca })
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let mut out = match &self.standardizer {
            Some(s) => s.apply(data)?,
            None => data.clone(),
        };
        if let Some(p) = &self.pca {
            out = p.transform(&out)?;
        }
        Ok(out)
    }
}

/// Solver-side facts about one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub constraint_count: usize,
    /// Dual objective for the SVMs, log-likelihood for KLR.
    pub objective: f64,
    /// Absent for KLR.
    pub kkt_violation: Option<f64>,
    pub support_count: usize,
    pub iterations: usize,
    pub converged: bool,
    pub dropped_eigenvalue_mass: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedMetric {
    pub raw: MetricMatrix,
    pub projected: MetricMatrix,
    pub summary: TrainSummary,
    /// Wall clock around the solver call only.
    pub train_seconds: f64,
}

impl TrainedMetric {
    pub fn for_knn(&self, raw: bool) -> &MetricMatrix {
        if raw {
            &self.raw
        } else {
            &self.projected
        }
    }
}

/// Optional text dumps produced while training.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainDumps {
    pub constraints: Option<String>,
    pub gram: Option<String>,
}

/// Which dumps [`train_metric_with`] should produce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DumpRequest {
    pub constraints: bool,
    pub gram: bool,
}

/// Builds constraints on an already preprocessed training set, solves, and
/// rebuilds (and projects) M.
pub fn train_metric(train: &Dataset, config: &MethodConfig) -> Result<TrainedMetric> {
    train_metric_with(train, config, &mut (), DumpRequest::default()).map(|(t, _)| t)
}

/// [`train_metric`] with a progress observer and optional dumps. KLR
/// reports one record per accepted step with the log-likelihood as the
/// objective and a zero violation.
pub fn train_metric_with(
    train: &Dataset,
    config: &MethodConfig,
    observer: &mut dyn SolverObserver,
    dumps: DumpRequest,
) -> Result<(TrainedMetric, TrainDumps)> {
    config.validate()?;
    let solver = config.solver_config();
    let mut out = TrainDumps::default();
    let summarize = |n: usize, sol: &DualSolution| TrainSummary {
        constraint_count: n,
        objective: sol.dual_objective,
        kkt_violation: Some(sol.kkt_violation),
        support_count: sol.support_count,
        iterations: sol.iterations,
        converged: sol.converged,
        dropped_eigenvalue_mass: 0.0,
    };
    let (raw, summary, seconds) = match config.method {
        Method::DoubletSvm | Method::DoubletKlr => {
            let set = build_doublets(train, config.m1, config.m2)?;
            let g = GramView::new(&set, GramOptions::default())?;
            if dumps.constraints {
                out.constraints = Some(set.to_text());
            }
            if dumps.gram {
                out.gram = Some(g.to_text());
            }
            if config.method == Method::DoubletSvm {
                let labels = set.labels();
                let t = Instant::now();
                let sol = solve_doublet_svm_observed(&g, &labels, &solver, observer)?;
                let secs = t.elapsed().as_secs_f64();
                (
                    reconstruct_doublet_metric(&sol, &set)?,
                    summarize(set.len(), &sol),
                    secs,
                )
            } else {
                let labels = labels01_from_doublets(&set);
                let t = Instant::now();
                let sol = fit_doublet_klr_observed(&g, &labels, &config.klr, &mut |it, ll| {
                    observer.on_sweep(&TraceRecord {
                        sweep: it,
                        iterations: it,
                        objective: ll,
                        violation: 0.0,
                    })
                })?;
                let secs = t.elapsed().as_secs_f64();
                let s = TrainSummary {
                    constraint_count: set.len(),
                    objective: sol.log_likelihood,
                    kkt_violation: None,
                    support_count: sol.alphas.iter().filter(|&&a| a != 0.0).count(),
                    iterations: sol.iterations,
                    converged: sol.converged,
                    dropped_eigenvalue_mass: 0.0,
                };
                (reconstruct_klr_metric(&sol, &set)?, s, secs)
            }
        }
        Method::TripletSvm => {
            let set = build_triplets(train, config.m1, config.m2)?;
            let g = GramView::new(&set, GramOptions::default())?;
            if dumps.constraints {
                out.constraints = Some(set.to_text());
            }
            if dumps.gram {
                out.gram = Some(g.to_text());
            }
            let t = Instant::now();
            let sol = solve_triplet_svm_observed(&g, &solver, observer)?;
            let secs = t.elapsed().as_secs_f64();
            (
                reconstruct_triplet_metric(&sol, &set)?,
                summarize(set.len(), &sol),
                secs,
            )
        }
    };
    let projected = psd_project(&raw)?;
    let summary = TrainSummary {
        dropped_eigenvalue_mass: projected.dropped_eigenvalue_mass,
        ..summary
    };
    Ok((
        TrainedMetric {
            raw,
            projected,
            summary,
            train_seconds: seconds,
        },
        out,
    ))
}

/// The `k` nearest training points ordered by (distance, label, index).
fn neighbours(
    metric: &MetricMatrix,
    train: &Dataset,
    query: ArrayView1<f64>,
    k: usize,
) -> Result<Vec<(f64, Label, usize)>> {
    if train.is_empty() {
        return Err(Error::invalid("k-NN needs a non-empty training set"));
    }
    if k == 0 || k > train.len() {
        return Err(Error::invalid(format!(
            "k = {k} outside 1..={}",
            train.len()
        )));
    }
    let mut d = Vec::with_capacity(train.len());
    for (i, row) in train.features.rows().into_iter().enumerate() {
        d.push((mahalanobis(metric, query, row)?, train.labels[i], i));
    }
    let cmp = |a: &(f64, Label, usize), b: &(f64, Label, usize)| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    };
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(cmp);
    Ok(d)
}

/// Majority vote among the `k` nearest under `metric`. Distance ties go to
/// the smaller label, then the smaller index; vote ties go to the label met
/// first in nearest-first order.
pub fn knn_classify(
    metric: &MetricMatrix,
    train: &Dataset,
    query: ArrayView1<f64>,
    k: usize,
) -> Result<Label> {
    let nn = neighbours(metric, train, query, k)?;
    let mut votes: Vec<(Label, usize)> = Vec::new();
    for &(_, label, _) in &nn {
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some(v) => v.1 += 1,
            None => votes.push((label, 1)),
        }
    }
    let best = votes.iter().map(|v| v.1).max().unwrap_or(0);
    Ok(votes
        .iter()
        .find(|v| v.1 == best)
        .map(|v| v.0)
        .expect("k >= 1"))
}

/// Classifies every row of `queries`, in parallel.
pub fn knn_predict(
    metric: &MetricMatrix,
    train: &Dataset,
    queries: &Dataset,
    k: usize,
) -> Result<Vec<Label>> {
    if metric.dim() != train.dim() || queries.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: if metric.dim() != train.dim() {
                metric.dim()
            } else {
                queries.dim()
            },
        });
    }
    (0..queries.len())
        .into_par_iter()
        .map(|i| knn_classify(metric, train, queries.features.row(i), k))
        .collect()
}

/// Percentage of mismatches.
pub fn error_rate(predictions: &[Label], truths: &[Label]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::invalid("error rate of an empty prediction set"));
    }
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            found: predictions.len(),
        });
    }
    let wrong = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p != t)
        .count();
    Ok(100.0 * wrong as f64 / predictions.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub error: f64,
    pub summary: TrainSummary,
    #[serde(skip)]
    pub train_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub method: Method,
    pub params: MethodConfig,
    /// "cv" or "holdout".
    pub protocol: String,
    pub fold_count: usize,
    pub split_seed: u64,
    pub folds: Vec<FoldResult>,
    pub mean_error: f64,
}

impl EvalReport {
    pub fn fold_errors(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.error).collect()
    }

    pub fn train_seconds(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.train_seconds).collect()
    }

    pub fn total_train_seconds(&self) -> f64 {
        self.folds.iter().map(|f| f.train_seconds).sum()
    }

    /// Structured form. Timings are left out so reruns compare equal
    /// byte for byte; see [`EvalReport::timings_text`].
    pub fn to_json(&self) -> Result<String> {
        to_json_17(self)
    }

    /// `key = value` lines, deterministic like the JSON form.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut kv: Vec<(String, String)> = vec![
            ("dataset".into(), self.dataset.clone()),
            ("method".into(), self.method.to_string()),
            ("protocol".into(), self.protocol.clone()),
            ("folds".into(), self.fold_count.to_string()),
            ("split_seed".into(), self.split_seed.to_string()),
            ("m1".into(), p.m1.to_string()),
            ("m2".into(), p.m2.to_string()),
            ("c".into(), fmt17(p.c)),
            ("k".into(), p.k.to_string()),
            ("pca_dim".into(), p.pca_dim.to_string()),
            ("standardize".into(), p.standardize.to_string()),
            ("raw_metric".into(), p.raw_metric.to_string()),
            ("tolerance".into(), fmt17(p.tolerance)),
            ("seed".into(), p.seed.to_string()),
            ("max_passes".into(), p.max_passes.to_string()),
            ("klr_ridge".into(), fmt17(p.klr.ridge)),
            ("klr_max_iter".into(), p.klr.max_iter.to_string()),
            ("mean_error".into(), fmt17(self.mean_error)),
        ];
        for f in &self.folds {
            let s = &f.summary;
            let prefix = format!("fold.{}", f.fold);
            kv.push((format!("{prefix}.error"), fmt17(f.error)));
            kv.push((format!("{prefix}.train_size"), f.train_size.to_string()));
            kv.push((format!("{prefix}.test_size"), f.test_size.to_string()));
            kv.push((
                format!("{prefix}.constraints"),
                s.constraint_count.to_string(),
            ));
            kv.push((format!("{prefix}.objective"), fmt17(s.objective)));
            if let Some(v) = s.kkt_violation {
                kv.push((format!("{prefix}.kkt_violation"), fmt17(v)));
            }
            kv.push((
                format!("{prefix}.support_count"),
                s.support_count.to_string(),
            ));
            kv.push((format!("{prefix}.iterations"), s.iterations.to_string()));
            kv.push((format!("{prefix}.converged"), s.converged.to_string()));
        }
        let mut out = String::new();
        for (k, v) in kv {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Per-fold and total solver wall-clock seconds.
    pub fn timings_text(&self) -> String {
        let mut out = String::new();
        for f in &self.folds {
            out.push_str(&format!(
                "fold.{}.train_seconds = {}\n",
                f.fold,
                fmt17(f.train_seconds)
            ));
        }
        out.push_str(&format!(
            "total_train_seconds = {}\n",
            fmt17(self.total_train_seconds())
        ));
        out
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Four significant digits, plain notation where sensible.
pub fn fmt4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::invalid(format!("serializing report: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

fn run_fold(
    data: &Dataset,
    config: &MethodConfig,
    split: &CvSplit,
    fold: usize,
) -> Result<FoldResult> {
    let (tr, te) = split.fold_indices(fold);
    if tr.is_empty() || te.is_empty() {
        return Err(Error::invalid("fold has an empty side"));
    }
    evaluate_split(&data.subset(&tr), &data.subset(&te), config, fold)
}

fn evaluate_split(
    train: &Dataset,
    test: &Dataset,
    config: &MethodConfig,
    fold: usize,
) -> Result<FoldResult> {
    let pre = Preprocessor::fit(train, config)?;
    let (train_p, test_p) = (pre.apply(train)?, pre.apply(test)?);
    let trained = train_metric(&train_p, config)?;
    let pred = knn_predict(
        trained.for_knn(config.raw_metric),
        &train_p,
        &test_p,
        config.k,
    )?;
    Ok(FoldResult {
        fold,
        train_size: train.len(),
        test_size: test.len(),
        error: error_rate(&pred, &test.labels)?,
        summary: trained.summary,
        train_seconds: trained.train_seconds,
    })
}

/// Rough peak bytes of one dense fold Gram.
fn fold_gram_bytes(data: &Dataset, config: &MethodConfig, folds: usize) -> usize {
    let train = data.len() - data.len() / folds.max(1);
    let per = match config.method {
        Method::TripletSvm => config.m1 * config.m2,
        _ => config.m1 + config.m2,
    };
    let n = train * per;
    n.saturating_mul(n).saturating_mul(8)
}

/// Folds run concurrently while their dense Grams fit in this budget.
pub const PARALLEL_GRAM_BUDGET: usize = 1 << 30;

/// Cross-validated error of `config` on `data`.
pub fn run_cv(data: &Dataset, config: &MethodConfig, split: &CvSplit) -> Result<EvalReport> {
    config.validate()?;
    if split.assignments.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: split.assignments.len(),
        });
    }
    let k = split.fold_count;
    let per_fold = fold_gram_bytes(data, config, k);
    let lanes = (PARALLEL_GRAM_BUDGET / per_fold.max(1)).clamp(1, k);
    let mut folds = Vec::with_capacity(k);
    for chunk in (0..k).collect::<Vec<_>>().chunks(lanes) {
        let part: Vec<Result<FoldResult>> = chunk
            .par_iter()
            .map(|&f| {
                run_fold(data, config, split, f).map_err(|e| Error::Fold {
                    fold: f,
                    source: Box::new(e),
                })
            })
            .collect();
        for r in part {
            folds.push(r?);
        }
    }
    let mean_error = folds.iter().map(|f| f.error).sum::<f64>() / k as f64;
    Ok(EvalReport {
        dataset: data.name.clone(),
        method: config.method,
        params: config.clone(),
        protocol: "cv".into(),
        fold_count: k,
        split_seed: split.seed,
        folds,
        mean_error,
    })
}

/// Seeded k-fold split followed by [`run_cv`].
pub fn run_cv_seeded(
    data: &Dataset,
    config: &MethodConfig,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    run_cv(data, config, &kfold_split(data, folds, seed)?)
}

/// A fixed train/test split evaluated as a single fold.
pub fn run_holdout(train: &Dataset, test: &Dataset, config: &MethodConfig) -> Result<EvalReport> {
    config.validate()?;
    let fold = evaluate_split(train, test, config, 0).map_err(|e| Error::Fold {
        fold: 0,
        source: Box::new(e),
    })?;
    Ok(EvalReport {
        dataset: train.name.clone(),
        method: config.method,
        params: config.clone(),
        protocol: "holdout".into(),
        fold_count: 1,
        split_seed: 0,
        mean_error: fold.error,
        folds: vec![fold],
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Tied entries all take the lowest rank of their group (1, 2, 2, 4).
    #[default]
    Min,
    /// Tied entries share the mean of their positions (1, 2.5, 2.5, 4).
    Average,
}

/// Error matrix with per-dataset ranks (1 = lowest error).
#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// datasets × methods
    pub errors: Array2<f64>,
    pub ranks: Array2<f64>,
    pub average: Vec<f64>,
    pub tie_rule: TieRule,
}

fn rank_row(errors: &[f64], rule: TieRule) -> Vec<f64> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; errors.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && errors[order[end]] == errors[order[start]] {
            end += 1;
        }
        let r = match rule {
            TieRule::Min => (start + 1) as f64,
            TieRule::Average => (start + 1 + end) as f64 / 2.0,
        };
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Ranks each dataset row of `errors` (datasets × methods) and averages per
/// method.
pub fn average_rank(
    methods: Vec<String>,
    datasets: Vec<String>,
    errors: Array2<f64>,
    rule: TieRule,
) -> Result<RankTable> {
    let (nd, nm) = errors.dim();
    if nd == 0 || nm == 0 {
        return Err(Error::invalid(
            "rank table needs at least one dataset and one method",
        ));
    }
    if methods.len() != nm || datasets.len() != nd {
        return Err(Error::invalid(format!(
            "rank table labels ({} methods, {} datasets) do not match a {nd}x{nm} matrix",
            methods.len(),
            datasets.len()
        )));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("error matrix".into()));
    }
    let mut ranks = Array2::zeros((nd, nm));
    for (d, row) in errors.rows().into_iter().enumerate() {
        let r = rank_row(&row.to_vec(), rule);
        for (m, v) in r.into_iter().enumerate() {
            ranks[[d, m]] = v;
        }
    }
    let average = ranks.mean_axis(ndarray::Axis(0)).expect("nd > 0").to_vec();
    Ok(RankTable {
        methods,
        datasets,
        errors,
        ranks,
        average,
        tie_rule: rule,
    })
}

/// Builds a rank table from reports, keyed by dataset then method. Methods
/// missing on some dataset are excluded.
pub fn rank_reports(reports: &[EvalReport], rule: TieRule) -> Result<RankTable> {
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut datasets: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for r in reports {
        let m = r.method.to_string();
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
        if !methods.contains(&m) {
            methods.push(m.clone());
        }
        cells.insert((r.dataset.clone(), m), r.mean_error);
    }
    methods.retain(|m| {
        datasets
            .iter()
            .all(|d| cells.contains_key(&(d.clone(), m.clone())))
    });
    let mut errors = Array2::zeros((datasets.len(), methods.len()));
    for (i, d) in datasets.iter().enumerate() {
        for (j, m) in methods.iter().enumerate() {
            errors[[i, j]] = cells[&(d.clone(), m.clone())];
        }
    }
    average_rank(methods, datasets, errors, rule)
}

impl RankTable {
    /// Method columns by ascending average rank, ties by name.
    pub fn column_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.methods.len()).collect();
        order.sort_by(|&a, &b| {
            self.average[a]
                .total_cmp(&self.average[b])
                .then_with(|| self.methods[a].cmp(&self.methods[b]))
        });
        order
    }

    /// Aligned table at 4 significant digits, with an average-rank row.
    pub fn to_aligned_text(&self) -> String {
        let order = self.column_order();
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut head = vec!["dataset".to_string()];
        head.extend(order.iter().map(|&j| self.methods[j].clone()));
        rows.push(head);
        for (i, d) in self.datasets.iter().enumerate() {
            let mut r = vec![d.clone()];
            r.extend(order.iter().map(|&j| {
                format!(
                    "{} ({})",
                    fmt4(self.errors[[i, j]]),
                    fmt4(self.ranks[[i, j]])
                )
            }));
            rows.push(r);
        }
        let mut last = vec!["average rank".to_string()];
        last.extend(order.iter().map(|&j| format!("{:.2}", self.average[j])));
        rows.push(last);
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in rows {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if c == 0 {
                        format!("{s:<w$}", w = widths[c])
                    } else {
                        format!("{s:>w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// `dataset,method,error,rank` rows followed by `average,method,,rank`.
    pub fn to_csv(&self) -> String {
        let order = self.column_order();
        let mut out = String::from("dataset,method,error,rank\n");
        for (i, d) in self.datasets.iter().enumerate() {
            for &j in &order {
                out.push_str(&format!(
                    "{d},{},{},{}\n",
                    self.methods[j],
                    fmt17(self.errors[[i, j]]),
                    fmt17(self.ranks[[i, j]])
                ));
            }
        }
        for &j in &order {
            out.push_str(&format!(
                "average,{},,{}\n",
                self.methods[j],
                fmt17(self.average[j])
            ));
        }
        out
    }
}
