//! Cross-validated experiments: DRES per method, the ablation rows, the
//! stacked baselines, oracle bounds, the k sweep and selection frequencies.
//!
//! Folds run in parallel but every result is collected in fold order and
//! every query in test order, so reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{build_group, fit_stacked, oracle_full, oracle_representation, out_of_fold_posteriors, Group, INNER_FOLDS};
use crate::classifiers::fit_grid;
use crate::config::ExperimentConfig;
use crate::data::{make_splits, FoldSplit, Label, MultiViewDataset};
use crate::des::{dres_predict, DesMethod, DresParams, DresState};
use crate::error::{Error, Result};
use crate::hardness::{build_hardness_matrix, hardness_statistics, HardnessMatrix, HardnessStats};
use crate::metrics::{score, MetricSet, Scores};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One test query's trail through the two selection stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub id: String,
    pub chosen_view: String,
    pub method: DesMethod,
    /// Pool indices of the selected classifiers in the chosen view.
    pub ensemble: Vec<usize>,
    pub fallback: bool,
    pub predicted: Label,
    #[serde(rename = "true")]
    pub truth: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFrequency {
    pub method: DesMethod,
    pub view_names: Vec<String>,
    pub view_counts: Vec<usize>,
    pub view_frequencies: Vec<f64>,
    pub classifier_names: Vec<String>,
    /// `classifier_counts[view][spec]`: how often that classifier was in
    /// the selected ensemble.
    pub classifier_counts: Vec<Vec<usize>>,
    pub total_selected: usize,
}

/// Counts chosen views and selected classifiers over one method's records.
pub fn selection_frequencies(
    method: DesMethod,
    records: &[ProvenanceRecord],
    view_names: &[String],
    classifier_names: &[String],
) -> Result<SelectionFrequency> {
    let mut view_counts = vec![0usize; view_names.len()];
    let mut classifier_counts = vec![vec![0usize; classifier_names.len()]; view_names.len()];
    let mut total_selected = 0;
    let mut queries = 0usize;
    for r in records.iter().filter(|r| r.method == method) {
        let v = view_names
            .iter()
            .position(|n| *n == r.chosen_view)
            .ok_or_else(|| Error::data(format!("record {} names unknown view {:?}", r.id, r.chosen_view)))?;
        view_counts[v] += 1;
        queries += 1;
        for &c in &r.ensemble {
            let slot = classifier_counts[v]
                .get_mut(c)
                .ok_or_else(|| Error::data(format!("record {} selects classifier {c} outside the pool", r.id)))?;
            *slot += 1;
            total_selected += 1;
        }
    }
    let view_frequencies = view_counts
        .iter()
        .map(|&c| if queries == 0 { 0.0 } else { c as f64 / queries as f64 })
        .collect();
    Ok(SelectionFrequency {
        method,
        view_names: view_names.to_vec(),
        view_counts,
        view_frequencies,
        classifier_names: classifier_names.to_vec(),
        classifier_counts,
        total_selected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: DesMethod,
    pub metrics: MetricSet,
    pub oracle_representation: Option<MetricSet>,
    pub oracle_full: Option<MetricSet>,
    pub fallback_rate: f64,
    pub view_tie_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMetrics {
    pub name: String,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub instances: usize,
    pub classes: usize,
    pub view_names: Vec<String>,
    pub view_dims: Vec<usize>,
}

impl DatasetSummary {
    pub fn of(dataset: &MultiViewDataset) -> Self {
        Self {
            instances: dataset.len(),
            classes: dataset.num_classes(),
            view_names: dataset.view_names(),
            view_dims: dataset.views().iter().map(|v| v.dim()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessSummary {
    pub k: usize,
    pub view_means: Vec<f64>,
    /// Share of instances whose cross-view range exceeds 0.5; absent with
    /// a single view.
    pub fraction_range_above_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub engine_version: String,
    pub dataset: DatasetSummary,
    pub config: ExperimentConfig,
    /// Standard deviations are population values across folds.
    pub std_over: String,
    pub methods: Vec<MethodResult>,
    pub ablation: Vec<NamedMetrics>,
    pub baselines: Vec<NamedMetrics>,
    pub selection: Vec<SelectionFrequency>,
    pub hardness: HardnessSummary,
}

/// A report plus the per-query and per-instance tables written next to it.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub provenance: Vec<ProvenanceRecord>,
    pub hardness: HardnessMatrix,
    pub hardness_stats: Option<HardnessStats>,
    pub instance_ids: Vec<String>,
}

struct MethodFold {
    predictions: Vec<Label>,
    oracle_rep: Vec<Label>,
    oracle_full: Vec<Label>,
    records: Vec<ProvenanceRecord>,
    fallbacks: usize,
    ties: usize,
}

struct FoldRun {
    truths: Vec<Label>,
    methods: Vec<MethodFold>,
    representation_only: Vec<Label>,
    des_only: Vec<Label>,
    baselines: Vec<(String, Vec<Label>)>,
}

fn stage<T>(fold: usize, name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_fold(fold, name))
}

/// View with the lowest DSEL mean hardness, ties to the lowest index.
pub fn easiest_view(state: &DresState) -> usize {
    let means = &state.view_means;
    (0..means.len())
        .min_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)))
        .unwrap_or(0)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

fn run_fold(dataset: &MultiViewDataset, config: &ExperimentConfig, fold: usize, split: &FoldSplit) -> Result<FoldRun> {
    let grid = stage(fold, "fit_grid", fit_grid(dataset, &split.train, &config.seeded_classifiers()))?;
    let state = stage(
        fold,
        "selection_state",
        DresState::from_grid(dataset, grid, &split.dsel, config.dres_params()),
    )?;
    let names = dataset.view_names();
    let ids = dataset.ids();
    let truths: Vec<Label> = split.test.iter().map(|&i| dataset.labels().get(i)).collect();

    let methods = config
        .methods
        .iter()
        .map(|&method| {
            let rows = split
                .test
                .par_iter()
                .map(|&i| {
                    let q = dataset.instance(i);
                    let truth = dataset.labels().get(i);
                    let p = dres_predict(&q, &state, method)?;
                    let (rep, full) = if config.oracles {
                        (
                            oracle_representation(&q, truth, &state, method)?.predicted,
                            oracle_full(&q, truth, &state, method)?.predicted,
                        )
                    } else {
                        (p.label, p.label)
                    };
                    Ok((p, rep, full, i))
                })
                .collect::<Result<Vec<_>>>();
            let rows = stage(fold, "predict", rows)?;
            let mut mf = MethodFold {
                predictions: Vec::with_capacity(rows.len()),
                oracle_rep: Vec::with_capacity(rows.len()),
                oracle_full: Vec::with_capacity(rows.len()),
                records: Vec::with_capacity(rows.len()),
                fallbacks: 0,
                ties: 0,
            };
            for (p, rep, full, i) in rows {
                mf.fallbacks += usize::from(p.ensemble.fallback_used);
                mf.ties += usize::from(p.choice.tie_broken);
                mf.records.push(ProvenanceRecord {
                    id: ids[i].clone(),
                    chosen_view: names[p.choice.chosen_view].clone(),
                    method,
                    ensemble: p.ensemble.classifier_indices.clone(),
                    fallback: p.ensemble.fallback_used,
                    predicted: p.label,
                    truth: dataset.labels().get(i),
                });
                mf.predictions.push(p.label);
                mf.oracle_rep.push(rep);
                mf.oracle_full.push(full);
            }
            Ok(mf)
        })
        .collect::<Result<Vec<_>>>()?;

    let fixed = easiest_view(&state);
    let pairs = split
        .test
        .par_iter()
        .map(|&i| {
            let q = dataset.instance(i);
            let rep = state.representation_only(&q)?.0;
            let des = state.des_on_view(fixed, &q[fixed], config.ablation_method)?.0;
            Ok((rep, des))
        })
        .collect::<Result<Vec<_>>>();
    let (representation_only, des_only): (Vec<Label>, Vec<Label>) = stage(fold, "ablation", pairs)?.into_iter().unzip();

    let mut baselines = Vec::new();
    if config.baselines {
        let oof = stage(
            fold,
            "stacking",
            out_of_fold_posteriors(
                dataset,
                &split.train,
                &config.seeded_classifiers(),
                INNER_FOLDS,
                fold_seed(config.seed, fold),
            ),
        )?;
        let n = dataset.num_views();
        let m = config.classifiers.len();
        let mut groups: Vec<Group> = (0..m).map(Group::A).collect();
        groups.extend((0..n).map(Group::B));
        groups.push(Group::C);
        for group in groups {
            let stacked = stage(fold, "stacking", fit_stacked(&oof, n, group))?;
            let preds = split
                .test
                .par_iter()
                .map(|&i| stacked.predict(&state.grid, &dataset.instance(i)))
                .collect::<Result<Vec<_>>>();
            baselines.push((group_label(group, config, dataset), stage(fold, "stacking", preds)?));
        }
    }

    Ok(FoldRun {
        truths,
        methods,
        representation_only,
        des_only,
        baselines,
    })
}

fn group_label(group: Group, config: &ExperimentConfig, dataset: &MultiViewDataset) -> String {
    match group {
        Group::A(s) => format!("group_a:{}", config.classifiers[s].display_name()),
        Group::B(v) => format!("group_b:{}", dataset.view(v).name()),
        Group::C => "group_c".to_string(),
    }
}

/// The config as echoed in reports: the output location is dropped so
/// that runs differing only in where they write produce identical bytes.
fn echoed_config(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        output_dir: Default::default(),
        ..config.clone()
    }
}

fn accuracy(p: &[Label], t: &[Label]) -> f64 {
    p.iter().zip(t).filter(|(a, b)| a == b).count() as f64 / t.len() as f64
}

fn summarize(runs: &[FoldRun], classes: usize, pick: impl Fn(&FoldRun) -> &[Label]) -> Result<MetricSet> {
    let folds = runs
        .iter()
        .map(|r| score(pick(r), &r.truths, classes))
        .collect::<Result<Vec<Scores>>>()?;
    Ok(MetricSet::from_folds(&folds))
}

/// Cross-validated DRES evaluation with baselines, oracles and ablation.
pub fn run_experiment(dataset: &MultiViewDataset, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let plan = make_splits(dataset.labels(), config.folds, config.dsel_fraction, config.seed)?;
    let runs = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, split)| run_fold(dataset, config, f, split))
        .collect::<Result<Vec<_>>>()?;
    let classes = dataset.num_classes();

    // The oracle bounds dominate DRES by construction; a violation means a
    // bookkeeping bug.
    if config.oracles {
        for (f, run) in runs.iter().enumerate() {
            for (k, mf) in run.methods.iter().enumerate() {
                let dres = accuracy(&mf.predictions, &run.truths);
                let rep = accuracy(&mf.oracle_rep, &run.truths);
                let full = accuracy(&mf.oracle_full, &run.truths);
                if !(full >= rep && rep >= dres) {
                    return Err(Error::Invariant(format!(
                        "fold {f}, {}: oracle chain broken (full {full}, representation {rep}, dres {dres})",
                        config.methods[k]
                    )));
                }
            }
        }
    }

    let mut methods = Vec::new();
    let mut provenance = Vec::new();
    for (k, &method) in config.methods.iter().enumerate() {
        let total: usize = runs.iter().map(|r| r.truths.len()).sum();
        let fallbacks: usize = runs.iter().map(|r| r.methods[k].fallbacks).sum();
        let ties: usize = runs.iter().map(|r| r.methods[k].ties).sum();
        let (oracle_rep, oracle_f) = if config.oracles {
            (
                Some(summarize(&runs, classes, |r| &r.methods[k].oracle_rep)?),
                Some(summarize(&runs, classes, |r| &r.methods[k].oracle_full)?),
            )
        } else {
            (None, None)
        };
        methods.push(MethodResult {
            method,
            metrics: summarize(&runs, classes, |r| &r.methods[k].predictions)?,
            oracle_representation: oracle_rep,
            oracle_full: oracle_f,
            fallback_rate: fallbacks as f64 / total as f64,
            view_tie_rate: ties as f64 / total as f64,
        });
        for r in &runs {
            provenance.extend(r.methods[k].records.iter().cloned());
        }
    }

    let mut baselines = Vec::new();
    if config.baselines {
        for (b, (name, _)) in runs[0].baselines.iter().enumerate() {
            baselines.push(NamedMetrics {
                name: name.clone(),
                metrics: summarize(&runs, classes, |r| &r.baselines[b].1)?,
            });
        }
    }

    let ablation = {
        let k = config.methods.iter().position(|&m| m == config.ablation_method);
        let mut rows = Vec::new();
        if let Some(b) = baselines.iter().find(|b| b.name == "group_c") {
            rows.push(NamedMetrics {
                name: "no_selection".into(),
                metrics: b.metrics.clone(),
            });
        }
        rows.push(NamedMetrics {
            name: "des_only".into(),
            metrics: summarize(&runs, classes, |r| &r.des_only)?,
        });
        rows.push(NamedMetrics {
            name: "representation_only".into(),
            metrics: summarize(&runs, classes, |r| &r.representation_only)?,
        });
        if let Some(k) = k {
            let m = &methods[k];
            rows.push(NamedMetrics {
                name: "dres".into(),
                metrics: m.metrics.clone(),
            });
            if let (Some(rep), Some(full)) = (&m.oracle_representation, &m.oracle_full) {
                rows.push(NamedMetrics {
                    name: "oracle_representation".into(),
                    metrics: rep.clone(),
                });
                rows.push(NamedMetrics {
                    name: "oracle_full".into(),
                    metrics: full.clone(),
                });
            }
        }
        rows
    };

    let names = dataset.view_names();
    let classifier_names: Vec<String> = config.classifiers.iter().map(|s| s.display_name()).collect();
    let selection = config
        .methods
        .iter()
        .map(|&m| selection_frequencies(m, &provenance, &names, &classifier_names))
        .collect::<Result<Vec<_>>>()?;

    let all: Vec<usize> = (0..dataset.len()).collect();
    let hardness = build_hardness_matrix(dataset, &all, config.k_hardness, config.standardize)?;
    let hardness_stats = if dataset.num_views() >= 2 {
        Some(hardness_statistics(&hardness)?)
    } else {
        None
    };

    let report = ExperimentReport {
        engine_version: ENGINE_VERSION.to_string(),
        dataset: DatasetSummary::of(dataset),
        config: echoed_config(config),
        std_over: "folds".into(),
        methods,
        ablation,
        baselines,
        selection,
        hardness: HardnessSummary {
            k: config.k_hardness,
            view_means: hardness.view_means(),
            fraction_range_above_half: hardness_stats.as_ref().map(|s| s.fraction_range_above(0.5)),
        },
    };
    Ok(ExperimentOutput {
        report,
        provenance,
        hardness,
        hardness_stats,
        instance_ids: dataset.ids().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub method: DesMethod,
    pub k: usize,
    pub metrics: MetricSet,
}

/// Re-runs the DRES methods for every hardness neighbor count. The
/// classifier grid does not depend on k and is fitted once per fold.
pub fn sweep_k(dataset: &MultiViewDataset, config: &ExperimentConfig, k_values: &[usize]) -> Result<Vec<KSweepRow>> {
    config.validate()?;
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::config("k values must be non-empty and >= 1"));
    }
    let plan = make_splits(dataset.labels(), config.folds, config.dsel_fraction, config.seed)?;
    let classes = dataset.num_classes();
    // per_fold[f][k][method] = scores
    let per_fold = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, split)| {
            let grid = stage(f, "fit_grid", fit_grid(dataset, &split.train, &config.seeded_classifiers()))?;
            let truths: Vec<Label> = split.test.iter().map(|&i| dataset.labels().get(i)).collect();
            k_values
                .iter()
                .map(|&k| {
                    let params = DresParams {
                        k_hardness: k,
                        ..config.dres_params()
                    };
                    let state = stage(
                        f,
                        "selection_state",
                        DresState::from_grid(dataset, grid.clone(), &split.dsel, params),
                    )?;
                    config
                        .methods
                        .iter()
                        .map(|&method| {
                            let preds = split
                                .test
                                .par_iter()
                                .map(|&i| dres_predict(&dataset.instance(i), &state, method).map(|p| p.label))
                                .collect::<Result<Vec<_>>>();
                            score(&stage(f, "predict", preds)?, &truths, classes)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (mi, &method) in config.methods.iter().enumerate() {
        for (ki, &k) in k_values.iter().enumerate() {
            let folds: Vec<Scores> = per_fold.iter().map(|f| f[ki][mi]).collect();
            rows.push(KSweepRow {
                method,
                k,
                metrics: MetricSet::from_folds(&folds),
            });
        }
    }
    Ok(rows)
}

/// Max minus min mean macro-F1 across k, per method.
pub fn k_spread(rows: &[KSweepRow]) -> BTreeMap<DesMethod, f64> {
    let mut spread: BTreeMap<DesMethod, (f64, f64)> = BTreeMap::new();
    for r in rows {
        let e = spread.entry(r.method).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(r.metrics.macro_f1.mean);
        e.1 = e.1.max(r.metrics.macro_f1.mean);
    }
    spread.into_iter().map(|(m, (lo, hi))| (m, hi - lo)).collect()
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn metric_columns(m: &MetricSet) -> Vec<String> {
    [&m.accuracy, &m.macro_f1, &m.macro_precision, &m.macro_recall]
        .iter()
        .flat_map(|s| [fmt_f(s.mean), fmt_f(s.std)])
        .collect()
}

const METRIC_HEADER: &str =
    "accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,macro_precision_mean,macro_precision_std,macro_recall_mean,macro_recall_std";

pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("method,fold,accuracy,macro_f1,macro_precision,macro_recall\n");
    let mut rows: Vec<(String, &MetricSet)> = Vec::new();
    for m in &report.methods {
        rows.push((format!("dres_{}", m.method), &m.metrics));
        if let Some(o) = &m.oracle_representation {
            rows.push((format!("oracle_representation_{}", m.method), o));
        }
        if let Some(o) = &m.oracle_full {
            rows.push((format!("oracle_full_{}", m.method), o));
        }
    }
    for b in &report.baselines {
        rows.push((b.name.clone(), &b.metrics));
    }
    for (name, m) in rows {
        let cols = [&m.accuracy, &m.macro_f1, &m.macro_precision, &m.macro_recall];
        for f in 0..m.accuracy.per_fold.len() {
            let vals: Vec<String> = cols.iter().map(|s| fmt_f(s.per_fold[f])).collect();
            out.push_str(&format!("{name},{f},{}\n", vals.join(",")));
        }
        let means: Vec<String> = cols.iter().map(|s| fmt_f(s.mean)).collect();
        out.push_str(&format!("{name},mean,{}\n", means.join(",")));
        let stds: Vec<String> = cols.iter().map(|s| fmt_f(s.std)).collect();
        out.push_str(&format!("{name},std,{}\n", stds.join(",")));
    }
    out
}

pub fn ablation_csv(rows: &[NamedMetrics]) -> String {
    let mut out = format!("variant,{METRIC_HEADER},macro_f1_display\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.name,
            metric_columns(&r.metrics).join(","),
            r.metrics.macro_f1.display()
        ));
    }
    out
}

pub fn ksweep_csv(rows: &[KSweepRow]) -> String {
    let mut out = format!("method,k,{METRIC_HEADER},macro_f1_display\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.method,
            r.k,
            metric_columns(&r.metrics).join(","),
            r.metrics.macro_f1.display()
        ));
    }
    out
}

/// One row per (method, view): the view's selection frequency followed by
/// per-classifier selection counts in that view.
pub fn frequencies_csv(freqs: &[SelectionFrequency]) -> String {
    let Some(first) = freqs.first() else {
        return String::from("method,view,view_count,view_frequency\n");
    };
    let mut out = String::from("method,view,view_count,view_frequency");
    for c in &first.classifier_names {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for f in freqs {
        for (v, name) in f.view_names.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}",
                f.method,
                name,
                f.view_counts[v],
                fmt_f(f.view_frequencies[v])
            ));
            for c in &f.classifier_counts[v] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}

pub fn provenance_jsonl(records: &[ProvenanceRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Invariant(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn report_json(report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Invariant(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes report.json, metrics.csv, ablation.csv, frequencies.csv,
/// provenance.jsonl, hardness.csv and (with >= 2 views) hardness_stats.csv.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, "report.json", &report_json(&output.report)?)?;
    write_file(dir, "metrics.csv", &metrics_csv(&output.report))?;
    write_file(dir, "ablation.csv", &ablation_csv(&output.report.ablation))?;
    write_file(dir, "frequencies.csv", &frequencies_csv(&output.report.selection))?;
    write_file(dir, "provenance.jsonl", &provenance_jsonl(&output.provenance)?)?;
    write_file(dir, "hardness.csv", &output.hardness.to_csv(&output.instance_ids))?;
    if let Some(stats) = &output.hardness_stats {
        write_file(dir, "hardness_stats.csv", &stats.to_csv(&output.instance_ids))?;
    }
    Ok(())
}

pub fn write_ksweep(rows: &[KSweepRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, "ksweep.csv", &ksweep_csv(rows))
}

/// Hardness columns, cross-view statistics and the cumulative range
/// profile for every instance of a dataset.
pub fn write_hardness_analysis(dataset: &MultiViewDataset, k: usize, standardize: bool, dir: &Path) -> Result<Option<HardnessStats>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let all: Vec<usize> = (0..dataset.len()).collect();
    let h = build_hardness_matrix(dataset, &all, k, standardize)?;
    write_file(dir, "hardness.csv", &h.to_csv(dataset.ids()))?;
    write_file(dir, "hardness_heatmap.csv", &h.to_heatmap_csv(dataset.ids()))?;
    if dataset.num_views() < 2 {
        return Ok(None);
    }
    let stats = hardness_statistics(&h)?;
    write_file(dir, "hardness_stats.csv", &stats.to_csv(dataset.ids()))?;
    write_file(dir, "hardness_profile.csv", &stats.profile_csv())?;
    Ok(Some(stats))
}

/// Group sizes of the stacked baselines, for reporting.
pub fn baseline_sizes(num_views: usize, pool_size: usize) -> Result<Vec<(Group, usize)>> {
    let mut groups: Vec<Group> = (0..pool_size).map(Group::A).collect();
    groups.extend((0..num_views).map(Group::B));
    groups.push(Group::C);
    groups
        .into_iter()
        .map(|g| Ok((g, build_group(num_views, pool_size, g)?.len())))
        .collect()
}
