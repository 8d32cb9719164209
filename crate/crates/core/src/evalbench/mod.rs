//! Link sign prediction benchmark: metrics, the downstream classifier,
//! multi-seed experiments over the augmentation/curriculum pipelines,
//! random-perturbation baselines, parameter sweeps and the
//! generalization-gap diagnostic.

mod dataset;
mod gap;
mod logistic;
mod metrics;
mod perturb;
pub mod synthetic;

pub use dataset::{default_data_dir, resolve_dataset, Dataset, DATA_DIR_ENV, KNOWN_DATASETS};
pub use gap::{generalization_diagnostic, theorem_bound, GapConstants, GapDiagnostic};
pub use logistic::{mean_log_loss, LogisticRegression};
pub use metrics::{auc, compute_metrics, MetricSummary, MetricsReport, SignMetrics};
pub use perturb::{random_perturbation, PerturbationKind};

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_with_encoder, AugmentConfig, AugmentationLog};
use crate::balance::{enumerate_triangles, BalanceSummary};
use crate::curriculum::{score_and_sort, train_with_curriculum, CurriculumSchedule, PacingConfig};
use crate::encoder::{train_encoder, EncoderConfig, EncoderState};
use crate::error::{Error, Result};
use crate::graph::{split_train_test, EdgeSample, Sign, SignedGraph};
use crate::rng::derive_seed;

/// Inverse regularisation strength of the downstream classifier.
pub const CLASSIFIER_C: f64 = 1.0;

/// Pair features `[z_u, z_v]`, one row per edge.
pub fn pair_matrix(state: &EncoderState, edges: &[EdgeSample]) -> Array2<f64> {
    let w = state.embeddings.ncols();
    let mut x = Array2::zeros((edges.len(), 2 * w));
    for (mut row, e) in x.outer_iter_mut().zip(edges) {
        row.slice_mut(ndarray::s![..w]).assign(&state.embeddings.row(e.u));
        row.slice_mut(ndarray::s![w..]).assign(&state.embeddings.row(e.v));
    }
    x
}

/// Logistic regression on pair embeddings predicting `+` against `-`.
pub fn fit_sign_classifier(state: &EncoderState, train: &[EdgeSample]) -> Result<LogisticRegression> {
    let y: Vec<bool> = train.iter().map(|e| e.sign.is_positive()).collect();
    LogisticRegression::fit(&pair_matrix(state, train), &y, CLASSIFIER_C)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPredictions {
    /// `P(+)` per test edge.
    pub scores: Vec<f64>,
    pub labels: Vec<Sign>,
    pub predicted: Vec<Sign>,
}

pub fn predict_test_signs(state: &EncoderState, train: &[EdgeSample], test: &[EdgeSample]) -> Result<SignPredictions> {
    if !state.is_trained() {
        return Err(Error::Untrained);
    }
    let clf = fit_sign_classifier(state, train)?;
    let scores = clf.predict_proba(&pair_matrix(state, test));
    let predicted = scores
        .iter()
        .map(|&p| if p >= 0.5 { Sign::Positive } else { Sign::Negative })
        .collect();
    Ok(SignPredictions {
        scores,
        labels: test.iter().map(|e| e.sign).collect(),
        predicted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pipeline {
    Baseline,
    /// Structure augmentation followed by curriculum training.
    Sga,
    SaOnly,
    TpOnly,
    Random { kind: PerturbationKind, ratio: f64 },
}

impl Pipeline {
    fn augments(self) -> bool {
        matches!(self, Pipeline::Sga | Pipeline::SaOnly)
    }

    fn paces(self) -> bool {
        matches!(self, Pipeline::Sga | Pipeline::TpOnly)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::Baseline => f.write_str("baseline"),
            Pipeline::Sga => f.write_str("sga"),
            Pipeline::SaOnly => f.write_str("sa-only"),
            Pipeline::TpOnly => f.write_str("tp-only"),
            Pipeline::Random { kind, ratio } => write!(f, "random:{kind},{ratio}"),
        }
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Pipeline::Baseline),
            "sga" => Ok(Pipeline::Sga),
            "sa-only" => Ok(Pipeline::SaOnly),
            "tp-only" => Ok(Pipeline::TpOnly),
            other => {
                let spec = other
                    .strip_prefix("random:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown pipeline `{other}`")))?;
                let (kind, ratio) = spec
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidArgument(format!("expected random:<kind>,<ratio>, got `{other}`")))?;
                let ratio: f64 = ratio
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad perturbation ratio `{ratio}`")))?;
                if !(0.0..=1.0).contains(&ratio) {
                    return Err(Error::InvalidArgument(format!("perturbation ratio must be in [0, 1], got {ratio}")));
                }
                Ok(Pipeline::Random { kind: kind.trim().parse()?, ratio })
            }
        }
    }
}

impl Serialize for Pipeline {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pipeline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pacing settings as configured; `big_t` defaults to half the epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumSettings {
    pub lambda0: f64,
    pub big_t: Option<usize>,
}

impl Default for CurriculumSettings {
    fn default() -> Self {
        CurriculumSettings { lambda0: PacingConfig::DEFAULT_LAMBDA0, big_t: None }
    }
}

impl CurriculumSettings {
    pub fn pacing(&self, total_epochs: usize) -> PacingConfig {
        PacingConfig {
            lambda0: self.lambda0,
            big_t: self.big_t.unwrap_or((total_epochs / 2).max(1)),
            total_epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub split_ratio: f64,
    /// One train/test split and model per seed. The encoder seed in
    /// `encoder` is ignored; each run derives its own from these.
    pub seeds: Vec<u64>,
    pub encoder: EncoderConfig,
    pub augment: AugmentConfig,
    pub curriculum: CurriculumSettings,
    pub gap: GapConstants,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: Pipeline::Sga,
            split_ratio: 0.8,
            seeds: (0..5).collect(),
            encoder: EncoderConfig::default(),
            augment: AugmentConfig::default(),
            curriculum: CurriculumSettings::default(),
            gap: GapConstants::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!("split_ratio must be in (0, 1), got {}", self.split_ratio)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.encoder.validate()?;
        self.augment.validate()?;
        self.curriculum.pacing(self.encoder.epochs).validate()?;
        self.gap.validate()
    }

    fn pretrain_config(&self, seed: u64) -> EncoderConfig {
        EncoderConfig { seed: derive_seed(seed, "pretrain"), ..self.encoder.clone() }
    }

    fn final_config(&self, seed: u64) -> EncoderConfig {
        EncoderConfig { seed: derive_seed(seed, "final"), ..self.encoder.clone() }
    }
}

/// Pre-trained encoders keyed by dataset, split and encoder settings, so
/// sweeps over augmentation or pacing parameters reuse them.
#[derive(Debug, Default)]
pub struct PretrainCache {
    entries: Mutex<HashMap<String, Arc<EncoderState>>>,
    hits: AtomicUsize,
}

impl PretrainCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_train(
        &self,
        key: String,
        train: impl FnOnce() -> Result<EncoderState>,
    ) -> Result<Arc<EncoderState>> {
        if let Some(hit) = self.entries.lock().expect("cache lock poisoned").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(hit));
        }
        let state = Arc::new(train()?);
        self.entries
            .lock()
            .expect("cache lock poisoned")
            .insert(key, Arc::clone(&state));
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: SignMetrics,
    pub train_edges: usize,
    pub test_edges: usize,
    /// Edges the final encoder was trained on.
    pub final_train_edges: usize,
    pub augmentation: Option<AugmentationLog>,
    pub balance_before: BalanceSummary,
    pub balance_after: BalanceSummary,
    pub density_before: f64,
    pub density_after: f64,
    pub pretrain_loss: Option<Vec<f64>>,
    pub final_loss: Vec<f64>,
    pub gap: GapDiagnostic,
}

/// Per-seed intermediate products, for writing artifacts.
#[derive(Debug, Clone)]
pub struct SeedArtifacts {
    pub seed: u64,
    pub final_train: Vec<EdgeSample>,
    pub schedule: Option<CurriculumSchedule>,
    pub encoder: EncoderState,
    pub pretrain: Option<Arc<EncoderState>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub pipeline: Pipeline,
    pub config: ExperimentConfig,
    pub nodes: usize,
    pub edges: usize,
    pub full_graph_balance: BalanceSummary,
    pub seeds: Vec<SeedResult>,
    pub summary: MetricsReport,
}

impl ExperimentReport {
    /// One summary line in percent: `pipeline AUC F1-binary F1-micro F1-macro`.
    pub fn summary_row(&self) -> String {
        let cell = |m: &MetricSummary| format!("{:.2} ± {:.2}", 100.0 * m.mean, 100.0 * m.std);
        format!(
            "{:<24} AUC {}  F1-binary {}  F1-micro {}  F1-macro {}",
            self.pipeline.to_string(),
            cell(&self.summary.auc),
            cell(&self.summary.f1_binary),
            cell(&self.summary.f1_micro),
            cell(&self.summary.f1_macro),
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub artifacts: Vec<SeedArtifacts>,
}

fn run_seed(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    seed: u64,
    cache: &PretrainCache,
) -> Result<(SeedResult, SeedArtifacts)> {
    let n = ds.graph.num_nodes();
    let split = split_train_test(&ds.graph.edges(), cfg.split_ratio, seed)?;
    let train_graph = SignedGraph::from_edges(n, &split.train)?;

    let mut pretrain = None;
    let mut augmentation = None;
    let (final_train, final_graph) = match cfg.pipeline {
        p if p.augments() => {
            let pre_cfg = cfg.pretrain_config(seed);
            let key = format!(
                "{}|{}|{}|{}",
                ds.name,
                seed,
                cfg.split_ratio,
                serde_json::to_string(&pre_cfg)?
            );
            let encoder = cache
                .get_or_train(key, || train_encoder(&train_graph, &split.train, &pre_cfg))
                .map_err(|e| e.in_stage("pre-train"))?;
            let out = augment_with_encoder(&train_graph, &split.train, &encoder, &cfg.augment)
                .map_err(|e| e.in_stage("augment"))?;
            pretrain = Some(encoder);
            augmentation = Some(out.log);
            (out.train, out.graph)
        }
        Pipeline::Random { kind, ratio } => {
            let perturbed = random_perturbation(n, &split.train, kind, ratio, derive_seed(seed, "perturb"))
                .map_err(|e| e.in_stage("perturb"))?;
            let g = SignedGraph::from_edges(n, &perturbed)?;
            (perturbed, g)
        }
        _ => (split.train.clone(), train_graph.clone()),
    };
    if final_train.is_empty() {
        return Err(Error::InvalidArgument("no training edges left after perturbation".into()).in_stage("train"));
    }

    let final_cfg = cfg.final_config(seed);
    let (encoder, schedule) = if cfg.pipeline.paces() {
        let schedule = score_and_sort(&final_graph, &final_train);
        let pace = cfg.curriculum.pacing(final_cfg.epochs);
        let enc = train_with_curriculum(&final_graph, &schedule, &final_cfg, &pace).map_err(|e| e.in_stage("train"))?;
        (enc, Some(schedule))
    } else {
        let enc = train_encoder(&final_graph, &final_train, &final_cfg).map_err(|e| e.in_stage("train"))?;
        (enc, None)
    };

    // the downstream classifier always sees the original training labels
    let clf = fit_sign_classifier(&encoder, &split.train).map_err(|e| e.in_stage("evaluate"))?;
    let scores = clf.predict_proba(&pair_matrix(&encoder, &split.test));
    let labels: Vec<Sign> = split.test.iter().map(|e| e.sign).collect();
    let metrics = compute_metrics(&scores, &labels).map_err(|e| e.in_stage("evaluate"))?;
    let gap = generalization_diagnostic(&encoder, &split.train, &split.test, &cfg.gap).map_err(|e| e.in_stage("evaluate"))?;

    let result = SeedResult {
        seed,
        metrics,
        train_edges: split.train.len(),
        test_edges: split.test.len(),
        final_train_edges: final_train.len(),
        augmentation,
        balance_before: BalanceSummary::from(&enumerate_triangles(&train_graph)),
        balance_after: BalanceSummary::from(&enumerate_triangles(&final_graph)),
        density_before: train_graph.density()?,
        density_after: final_graph.density()?,
        pretrain_loss: pretrain.as_ref().map(|p| p.loss_history.clone()),
        final_loss: encoder.loss_history.clone(),
        gap,
    };
    let artifacts = SeedArtifacts { seed, final_train, schedule, encoder, pretrain };
    Ok((result, artifacts))
}

/// Runs the configured pipeline once per seed (in parallel) and aggregates.
pub fn run_experiment(ds: &Dataset, cfg: &ExperimentConfig, cache: Option<&PretrainCache>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let local = PretrainCache::new();
    let cache = cache.unwrap_or(&local);
    let runs: Vec<(SeedResult, SeedArtifacts)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(ds, cfg, seed, cache).map_err(|e| e.in_stage(&format!("seed {seed}"))))
        .collect::<Result<_>>()?;
    let (seeds, artifacts): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let summary = MetricsReport::aggregate(&seeds.iter().map(|s| s.metrics).collect::<Vec<_>>());
    let report = ExperimentReport {
        dataset: ds.name.clone(),
        pipeline: cfg.pipeline,
        config: cfg.clone(),
        nodes: ds.graph.num_nodes(),
        edges: ds.graph.edge_count(),
        full_graph_balance: BalanceSummary::from(&enumerate_triangles(&ds.graph)),
        seeds,
        summary,
    };
    Ok(ExperimentOutcome { report, artifacts })
}

/// Per-seed metrics as CSV.
pub fn write_seed_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "pipeline",
        "seed",
        "auc",
        "f1_binary",
        "f1_micro",
        "f1_macro",
        "bd_before",
        "bd_after",
        "density_before",
        "density_after",
        "train_edges",
        "final_train_edges",
        "empirical_gap",
        "bound_value",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &report.seeds {
        w.write_record([
            report.dataset.clone(),
            report.pipeline.to_string(),
            s.seed.to_string(),
            opt(s.metrics.auc),
            s.metrics.f1_binary.to_string(),
            s.metrics.f1_micro.to_string(),
            s.metrics.f1_macro.to_string(),
            opt(s.balance_before.bd),
            opt(s.balance_after.bd),
            s.density_before.to_string(),
            s.density_after.to_string(),
            s.train_edges.to_string(),
            s.final_train_edges.to_string(),
            s.gap.empirical_gap.to_string(),
            s.gap.bound_value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    EpsAddPos,
    EpsAddNeg,
    EpsDelPos,
    EpsDelNeg,
    BigT,
    Lambda0,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::EpsAddPos,
        SweepParam::EpsAddNeg,
        SweepParam::EpsDelPos,
        SweepParam::EpsDelNeg,
        SweepParam::BigT,
        SweepParam::Lambda0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::EpsAddPos => "eps_add_pos",
            SweepParam::EpsAddNeg => "eps_add_neg",
            SweepParam::EpsDelPos => "eps_del_pos",
            SweepParam::EpsDelNeg => "eps_del_neg",
            SweepParam::BigT => "big_t",
            SweepParam::Lambda0 => "lambda0",
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        match self {
            SweepParam::EpsAddPos => cfg.augment.eps_add_pos = value,
            SweepParam::EpsAddNeg => cfg.augment.eps_add_neg = value,
            SweepParam::EpsDelPos => cfg.augment.eps_del_pos = value,
            SweepParam::EpsDelNeg => cfg.augment.eps_del_neg = value,
            SweepParam::Lambda0 => cfg.curriculum.lambda0 = value,
            SweepParam::BigT => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::InvalidArgument(format!("big_t must be a positive integer, got {value}")));
                }
                cfg.curriculum.big_t = Some(value as usize);
            }
        }
        Ok(())
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Auc,
    F1Binary,
    F1Micro,
    F1Macro,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Auc, Metric::F1Binary, Metric::F1Micro, Metric::F1Macro];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::F1Binary => "f1_binary",
            Metric::F1Micro => "f1_micro",
            Metric::F1Macro => "f1_macro",
        }
    }

    pub fn of(self, r: &MetricsReport) -> &MetricSummary {
        match self {
            Metric::Auc => &r.auc,
            Metric::F1Binary => &r.f1_binary,
            Metric::F1Micro => &r.f1_micro,
            Metric::F1Macro => &r.f1_macro,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

/// One experiment per value of `param`, sharing pre-trained encoders
/// through `cache`.
pub fn sensitivity_sweep(
    ds: &Dataset,
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    cache: &PretrainCache,
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base.clone();
        param.apply(&mut cfg, value)?;
        let outcome = run_experiment(ds, &cfg, Some(cache)).map_err(|e| e.in_stage(&format!("{param}={value}")))?;
        log::info!("{param}={value}: {}", outcome.report.summary_row());
        rows.push(SweepRow { value, report: outcome.report });
    }
    Ok(SweepReport { param, rows })
}

pub fn write_sweep_csv<W: Write>(sweep: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "param", "value", "auc_mean", "auc_std", "f1b_mean", "f1b_std", "f1mi_mean", "f1mi_std", "f1ma_mean", "f1ma_std",
    ])?;
    for row in &sweep.rows {
        let mut rec = vec![sweep.param.to_string(), row.value.to_string()];
        for m in Metric::ALL {
            let s = m.of(&row.report.summary);
            rec.push(s.mean.to_string());
            rec.push(s.std.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

/// Whitespace-separated `value mean std` lines for plotting one metric.
pub fn write_plot_data<W: Write>(sweep: &SweepReport, metric: Metric, mut out: W) -> Result<()> {
    let io = |e| Error::io(format!("<{} plot data>", metric.name()), e);
    writeln!(out, "# {} {}_mean {}_std", sweep.param, metric.name(), metric.name()).map_err(io)?;
    for row in &sweep.rows {
        let s = metric.of(&row.report.summary);
        writeln!(out, "{} {} {}", row.value, s.mean, s.std).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::PacingConfig;

    fn small_dataset() -> Dataset {
        Dataset::from_edges("factions", 40, &synthetic::two_factions(40, 0.25, 0.08, 11))
    }

    fn quick_config(pipeline: Pipeline) -> ExperimentConfig {
        ExperimentConfig {
            pipeline,
            seeds: vec![1, 2],
            encoder: EncoderConfig { embed_dim: 8, epochs: 30, ..Default::default() },
            augment: AugmentConfig { eps_add_pos: 0.6, eps_add_neg: 0.6, eps_del_pos: 0.2, eps_del_neg: 0.2, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn pipeline_names_round_trip() {
        for s in ["baseline", "sga", "sa-only", "tp-only", "random:drop-edge,0.1", "random:flip-sign,0"] {
            let p: Pipeline = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<Pipeline>().unwrap(), p);
        }
        assert!("random:drop-edge".parse::<Pipeline>().is_err());
        assert!("random:drop-edge,2".parse::<Pipeline>().is_err());
        assert!("magic".parse::<Pipeline>().is_err());
    }

    #[test]
    fn noop_sga_equals_baseline() {
        let ds = small_dataset();
        let base = run_experiment(&ds, &quick_config(Pipeline::Baseline), None).unwrap();
        let mut cfg = quick_config(Pipeline::Sga);
        cfg.augment = AugmentConfig::noop();
        cfg.curriculum.lambda0 = 1.0;
        let sga = run_experiment(&ds, &cfg, None).unwrap();
        assert_eq!(base.report.summary, sga.report.summary);
        for (a, b) in base.artifacts.iter().zip(&sga.artifacts) {
            assert_eq!(a.encoder.params, b.encoder.params);
        }
    }

    #[test]
    fn zero_ratio_random_equals_baseline() {
        let ds = small_dataset();
        let base = run_experiment(&ds, &quick_config(Pipeline::Baseline), None).unwrap();
        let rnd = run_experiment(
            &ds,
            &quick_config(Pipeline::Random { kind: PerturbationKind::DropEdge, ratio: 0.0 }),
            None,
        )
        .unwrap();
        assert_eq!(base.report.summary, rnd.report.summary);
    }

    #[test]
    fn experiment_report_contents() {
        let ds = small_dataset();
        let out = run_experiment(&ds, &quick_config(Pipeline::Sga), None).unwrap();
        let r = &out.report;
        assert_eq!(r.seeds.len(), 2);
        for s in &r.seeds {
            assert!(s.augmentation.is_some());
            assert_eq!(s.pretrain_loss.as_ref().unwrap().len(), 30);
            assert_eq!(s.final_loss.len(), 30);
            let m = &s.metrics;
            for v in [m.auc.unwrap(), m.f1_binary, m.f1_micro, m.f1_macro] {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!(s.gap.bound_value >= 2.0);
        }
        assert!(out.artifacts.iter().all(|a| a.schedule.is_some()));
        let again = run_experiment(&ds, &quick_config(Pipeline::Sga), None).unwrap();
        assert_eq!(r.summary, again.report.summary);
        let mut csv = Vec::new();
        write_seed_csv(r, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
        assert!(r.summary_row().starts_with("sga"));
    }

    #[test]
    fn sweep_reuses_pretrained_encoders() {
        let ds = small_dataset();
        let cache = PretrainCache::new();
        let values = [0.55, 0.7, 0.9];
        let sweep = sensitivity_sweep(&ds, &quick_config(Pipeline::Sga), SweepParam::EpsAddPos, &values, &cache).unwrap();
        assert_eq!(sweep.rows.len(), 3);
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.hits(), 4);
        let curves: Vec<_> = sweep.rows.iter().map(|r| r.report.seeds[0].pretrain_loss.clone()).collect();
        assert!(curves.windows(2).all(|w| w[0] == w[1]));

        let mut csv = Vec::new();
        write_sweep_csv(&sweep, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("param,value,auc_mean,auc_std,f1b_mean"));
        let mut dat = Vec::new();
        write_plot_data(&sweep, Metric::Auc, &mut dat).unwrap();
        assert_eq!(String::from_utf8(dat).unwrap().lines().count(), 4);
    }

    #[test]
    fn single_value_sweep_matches_experiment() {
        let ds = small_dataset();
        let mut cfg = quick_config(Pipeline::TpOnly);
        let sweep = sensitivity_sweep(&ds, &cfg, SweepParam::Lambda0, &[0.5], &PretrainCache::new()).unwrap();
        cfg.curriculum.lambda0 = 0.5;
        let direct = run_experiment(&ds, &cfg, None).unwrap();
        assert_eq!(sweep.rows[0].report, direct.report);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let ds = small_dataset();
        let cfg = quick_config(Pipeline::Sga);
        assert!(sensitivity_sweep(&ds, &cfg, SweepParam::Lambda0, &[], &PretrainCache::new()).is_err());
        assert!("epsilon".parse::<SweepParam>().is_err());
        assert_eq!("eps-del-pos".parse::<SweepParam>().unwrap(), SweepParam::EpsDelPos);
        let mut c = cfg.clone();
        assert!(SweepParam::BigT.apply(&mut c, 2.5).is_err());
    }

    #[test]
    fn separable_embeddings_predict_all_signs() {
        let ds = small_dataset();
        let mut state = crate::encoder::init_state(&ds.graph, &EncoderConfig { embed_dim: 2, ..Default::default() }).unwrap();
        state.epochs_trained = 1;
        for (i, mut row) in state.embeddings.outer_iter_mut().enumerate() {
            row.fill(0.0);
            row[0] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        // the sign is a linear function of the first endpoint's embedding
        let edges: Vec<_> = ds
            .graph
            .edges()
            .into_iter()
            .map(|e| EdgeSample { sign: if e.u % 2 == 0 { Sign::Positive } else { Sign::Negative }, ..e })
            .collect();
        let (train, test) = edges.split_at(edges.len() / 2);
        let p = predict_test_signs(&state, train, test).unwrap();
        assert_eq!(p.predicted, p.labels);
        assert_eq!(p, predict_test_signs(&state, train, test).unwrap());
    }

    #[test]
    fn curriculum_settings_defaults() {
        let p = CurriculumSettings::default().pacing(300);
        assert_eq!(p, PacingConfig { lambda0: 0.25, big_t: 150, total_epochs: 300 });
    }
}
