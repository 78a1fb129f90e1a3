//! Explanation dispatch over loaded models and the batch-evaluation driver.
//! One explainer wraps a model with its query backend (quantized for
//! Bayesian models) and picks per-family universes and deletion orders; the
//! driver fans instances across workers and assembles order-stable records.

use crate::ddnnf;
use crate::engine::{self, OrderPolicy};
use crate::io::{InstanceRow, LoadedModel};
use crate::nbc::{self, QuantizedXlc};
use crate::oracle::ExecMode;
use crate::types::{
    Backend, ClassifierMeta, CountPair, Error, FeatureSet, Instance, Rational, Result, Threshold,
};
use num::ToPrimitive;
use num::Zero;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationKind {
    Axp,
    LmPaxp,
    MinPaxp,
}

impl ExplanationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExplanationKind::Axp => "axp",
            ExplanationKind::LmPaxp => "lmpaxp",
            ExplanationKind::MinPaxp => "minpaxp",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "axp" => Ok(ExplanationKind::Axp),
            "lmpaxp" => Ok(ExplanationKind::LmPaxp),
            "minpaxp" => Ok(ExplanationKind::MinPaxp),
            other => Err(Error::input(format!(
                "unknown explanation kind {other:?} (expected axp, lmpaxp, or minpaxp)"
            ))),
        }
    }
}

impl std::fmt::Display for ExplanationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deletion-order selection for the single-pass explanations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderChoice {
    /// Per-family default: slack-ascending for Bayesian models (the order
    /// that reproduces the greedy explanation), precision-loss ascending
    /// for everything else.
    #[default]
    FamilyDefault,
    Lexicographic,
    PrecisionLoss,
}

impl OrderChoice {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "default" => Ok(OrderChoice::FamilyDefault),
            "lex" => Ok(OrderChoice::Lexicographic),
            "loss" => Ok(OrderChoice::PrecisionLoss),
            other => Err(Error::input(format!(
                "unknown order policy {other:?} (expected default, lex, or loss)"
            ))),
        }
    }
}

pub struct ExplainOutcome {
    pub set: FeatureSet,
    pub counts: CountPair,
}

/// A loaded model plus everything queries need: the counting backend (the
/// quantized linear form for Bayesian models) and family-specific universe
/// and ordering rules.
pub struct Explainer {
    loaded: LoadedModel,
    quantized: Option<QuantizedXlc>,
    decimals: u32,
}

impl Explainer {
    pub fn new(loaded: LoadedModel, decimals: u32) -> Explainer {
        let quantized = match &loaded {
            LoadedModel::Nbc(model) => Some(model.to_xlc().quantize(decimals)),
            _ => None,
        };
        Explainer {
            loaded,
            quantized,
            decimals,
        }
    }

    pub fn family(&self) -> &'static str {
        self.loaded.family()
    }

    pub fn meta(&self) -> &ClassifierMeta {
        self.loaded.meta()
    }

    pub fn decimals(&self) -> u32 {
        self.decimals
    }

    pub fn backend(&self) -> &(dyn Backend + Sync) {
        match &self.loaded {
            LoadedModel::Tree(t) => t,
            LoadedModel::Nbc(_) => self.quantized.as_ref().expect("quantized at construction"),
            LoadedModel::Omdd(g) => g,
            LoadedModel::Obdd(b) => b,
            LoadedModel::Circuit(c) => c,
        }
    }

    pub fn instance(&self, row: &InstanceRow) -> Result<Instance> {
        match row.declared_class {
            Some(declared) => {
                Instance::with_declared_class(&self.backend(), row.values.clone(), declared)
            }
            None => Instance::new(&self.backend(), row.values.clone()),
        }
    }

    /// Features worth fixing: the consistent path's tests for a tree (other
    /// features never influence its prediction), every feature otherwise.
    pub fn universe(&self, v: &Instance) -> FeatureSet {
        match &self.loaded {
            LoadedModel::Tree(t) => t.path_universe(v.values()),
            _ => FeatureSet::full(self.meta().feature_count()),
        }
    }

    pub fn explain(
        &self,
        v: &Instance,
        kind: ExplanationKind,
        delta: &Threshold,
        order: OrderChoice,
    ) -> Result<ExplainOutcome> {
        // An abductive explanation is the delta = 1 case.
        let one = Threshold::one();
        let delta = match kind {
            ExplanationKind::Axp => &one,
            _ => delta,
        };
        let backend = self.backend();
        let universe = self.universe(v);
        let set = match kind {
            ExplanationKind::MinPaxp => match &self.loaded {
                LoadedModel::Circuit(_) => ddnnf::min_paxp_binary_search(&backend, v, delta)?,
                _ => engine::min_paxp(&backend, v, &universe, delta)?,
            },
            ExplanationKind::Axp | ExplanationKind::LmPaxp => {
                if let (LoadedModel::Nbc(model), OrderChoice::FamilyDefault) =
                    (&self.loaded, order)
                {
                    let (set, counts) =
                        nbc::lm_paxp(model, v.values(), delta, self.decimals)?;
                    return Ok(ExplainOutcome { set, counts });
                }
                let policy = match order {
                    OrderChoice::Lexicographic => OrderPolicy::Lexicographic,
                    _ => OrderPolicy::PrecisionLossAscending,
                };
                let order = engine::removal_order(&backend, v, &universe, policy)?;
                engine::lm_paxp(&backend, v, &universe, &order, delta)?
            }
        };
        let counts = backend.count(v.values(), &set, v.class());
        Ok(ExplainOutcome { set, counts })
    }

    pub fn check_subset_minimal(
        &self,
        v: &Instance,
        set: &FeatureSet,
        delta: &Threshold,
    ) -> Result<bool> {
        engine::is_subset_minimal(&self.backend(), v, set, delta)
    }
}

/// Feature sets print by name: `{x1,x3}`.
pub fn render_set(meta: &ClassifierMeta, set: &FeatureSet) -> String {
    let names: Vec<&str> = set.iter().map(|i| meta.feature_name(i)).collect();
    format!("{{{}}}", names.join(","))
}

/// A fraction with a fixed-precision decimal rendering for the console.
pub fn render_rational(r: &Rational) -> (String, String) {
    let decimal = r.to_f64().map_or_else(
        || "~".to_string(),
        |x| format!("{x:.6}"),
    );
    (format!("{}/{}", r.numer(), r.denom()), decimal)
}

/// One explanation attempt. Wall time stays out of the serialized form so
/// reruns with a fixed seed and order produce byte-identical report files.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    /// 1-based row number in the instance table.
    pub instance: usize,
    pub delta: String,
    pub kind: ExplanationKind,
    pub set: Option<String>,
    pub length: Option<usize>,
    pub precision: Option<String>,
    pub precision_decimal: Option<String>,
    pub subset_minimal: Option<bool>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall: Duration,
    #[serde(skip)]
    precision_exact: Option<Rational>,
}

pub struct EvalSpec {
    pub deltas: Vec<Threshold>,
    pub kinds: Vec<ExplanationKind>,
    pub order: OrderChoice,
    pub check_minimality: bool,
    pub mode: ExecMode,
}

pub struct EvalReport {
    pub records: Vec<EvalRecord>,
}

/// Aggregates over one (delta, kind) group, recomputable from the records.
pub struct AggregateRow {
    pub delta: String,
    pub kind: ExplanationKind,
    pub explained: usize,
    pub failed: usize,
    pub max_length: usize,
    pub min_length: usize,
    pub avg_length: f64,
    pub avg_precision: Option<Rational>,
    pub subset_minimal_pct: Option<f64>,
    pub avg_wall: Duration,
}

pub fn evaluate(explainer: &Explainer, rows: &[InstanceRow], spec: &EvalSpec) -> EvalReport {
    let mut tasks = Vec::new();
    for delta in &spec.deltas {
        for &kind in &spec.kinds {
            for (index, row) in rows.iter().enumerate() {
                tasks.push((delta, kind, index, row));
            }
        }
    }
    let run = |&(delta, kind, index, row): &(&Threshold, ExplanationKind, usize, &InstanceRow)| {
        evaluate_one(explainer, row, index + 1, delta, kind, spec)
    };
    let records = match spec.mode {
        ExecMode::Sequential => tasks.iter().map(run).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => tasks.par_iter().map(run).collect(),
    };
    EvalReport { records }
}

fn evaluate_one(
    explainer: &Explainer,
    row: &InstanceRow,
    instance: usize,
    delta: &Threshold,
    kind: ExplanationKind,
    spec: &EvalSpec,
) -> EvalRecord {
    let mut record = EvalRecord {
        instance,
        delta: delta.to_string(),
        kind,
        set: None,
        length: None,
        precision: None,
        precision_decimal: None,
        subset_minimal: None,
        error: None,
        wall: Duration::ZERO,
        precision_exact: None,
    };
    let started = Instant::now();
    let outcome = explainer
        .instance(row)
        .and_then(|v| Ok((explainer.explain(&v, kind, delta, spec.order)?, v)));
    record.wall = started.elapsed();
    match outcome {
        Ok((outcome, v)) => {
            record.set = Some(render_set(explainer.meta(), &outcome.set));
            record.length = Some(outcome.set.len());
            let precision = outcome.counts.precision();
            let (fraction, decimal) = render_rational(&precision);
            record.precision = Some(fraction);
            record.precision_decimal = Some(decimal);
            record.precision_exact = Some(precision);
            if spec.check_minimality && kind == ExplanationKind::LmPaxp {
                match explainer.check_subset_minimal(&v, &outcome.set, delta) {
                    Ok(minimal) => record.subset_minimal = Some(minimal),
                    Err(e) => record.error = Some(e.to_string()),
                }
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

impl EvalReport {
    pub fn aggregates(&self) -> Vec<AggregateRow> {
        let mut groups: Vec<(String, ExplanationKind, Vec<&EvalRecord>)> = Vec::new();
        for record in &self.records {
            match groups
                .iter_mut()
                .find(|(d, k, _)| *d == record.delta && *k == record.kind)
            {
                Some((_, _, members)) => members.push(record),
                None => groups.push((record.delta.clone(), record.kind, vec![record])),
            }
        }
        groups
            .into_iter()
            .map(|(delta, kind, members)| {
                let explained: Vec<&&EvalRecord> =
                    members.iter().filter(|r| r.length.is_some()).collect();
                let lengths: Vec<usize> = explained.iter().filter_map(|r| r.length).collect();
                let avg_precision = if explained.is_empty() {
                    None
                } else {
                    let sum = explained
                        .iter()
                        .filter_map(|r| r.precision_exact.clone())
                        .fold(Rational::zero(), |a, b| a + b);
                    Some(sum / Rational::from_integer(explained.len().into()))
                };
                let minimal: Vec<bool> = explained
                    .iter()
                    .filter_map(|r| r.subset_minimal)
                    .collect();
                let subset_minimal_pct = if minimal.is_empty() {
                    None
                } else {
                    Some(
                        100.0 * minimal.iter().filter(|&&b| b).count() as f64
                            / minimal.len() as f64,
                    )
                };
                let total_wall: Duration = explained.iter().map(|r| r.wall).sum();
                AggregateRow {
                    delta,
                    kind,
                    explained: explained.len(),
                    failed: members.len() - explained.len(),
                    max_length: lengths.iter().copied().max().unwrap_or(0),
                    min_length: lengths.iter().copied().min().unwrap_or(0),
                    avg_length: if lengths.is_empty() {
                        0.0
                    } else {
                        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
                    },
                    avg_precision,
                    subset_minimal_pct,
                    avg_wall: total_wall
                        .checked_div(explained.len().max(1) as u32)
                        .unwrap_or(Duration::ZERO),
                }
            })
            .collect()
    }

    /// Line-delimited records for machines; no timing fields.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for record in &self.records {
            let line = serde_json::to_string(record)
                .map_err(|e| Error::input(format!("cannot serialize report: {e}")))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    /// The console table: one row per (delta, kind) group.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<8} {:>4} {:>4} {:>5} {:>7}  {:<22} {:>6}  {:>10}\n",
            "delta", "kind", "n", "Lmax", "Lmin", "Lavg", "Prec avg", "m%", "Time avg"
        ));
        for row in self.aggregates() {
            let precision = row.avg_precision.as_ref().map_or_else(
                || "-".to_string(),
                |p| {
                    let (fraction, decimal) = render_rational(p);
                    format!("{fraction} ({decimal})")
                },
            );
            let minimal = row
                .subset_minimal_pct
                .map_or_else(|| "-".to_string(), |p| format!("{p:.0}"));
            out.push_str(&format!(
                "{:<10} {:<8} {:>4} {:>4} {:>5} {:>7.2}  {:<22} {:>6}  {:>8.2?}\n",
                row.delta,
                row.kind.as_str(),
                row.explained,
                row.max_length,
                row.min_length,
                row.avg_length,
                precision,
                minimal,
                row.avg_wall,
            ));
        }
        let failures = self.records.iter().filter(|r| r.error.is_some()).count();
        if failures > 0 {
            out.push_str(&format!("{failures} explanation(s) failed:\n"));
            for record in self.records.iter().filter(|r| r.error.is_some()) {
                out.push_str(&format!(
                    "  instance {} delta {} kind {}: {}\n",
                    record.instance,
                    record.delta,
                    record.kind,
                    record.error.as_deref().unwrap_or(""),
                ));
            }
        }
        out
    }
}
