//! The individual studies. Each returns a typed report and writes its CSV
//! (and SVG where a figure applies) under `<output>/<study>/`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{plot, Pipeline, Tuned};
use crate::corpus::{FacetKind, RelevanceCriterion};
use crate::eval::{
    self, coverage_stats, cronbach_alpha, kendall_tau, kendall_tau_a, pearson, precision_at_10k, recall_at_k,
    scs, write_eval_csv, write_summary_csv, Coverage, EvalRow, RelevanceTable, ScoreMatrix,
};
use crate::index::{build_index, IndexMode};
use crate::sampler::{subsample, SamplingKind};
use crate::select::{oracle_rank, write_run, CollectionFilter, Method, RankedList};
use crate::sizeest::{estimate_sizes_lenient, usable_sizes, Estimator, SizeEstimate};
use crate::{seed, Error, Result};

pub const EXPERIMENTS: [&str; 7] = [
    "oracle",
    "benchmark",
    "size-correlation",
    "sampling-sweep",
    "robustness",
    "size-distribution",
    "coverage",
];

fn out_dir(p: &Pipeline, name: &str) -> PathBuf {
    p.cfg.output.join(name)
}

fn write(path: &Path, body: String) -> Result<()> {
    eval::write(path, body)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Run experiment `name` (or `all`) and write its outputs.
pub fn run_experiment(name: &str, p: &Pipeline) -> Result<()> {
    let needs_bench = matches!(name, "benchmark" | "size-correlation" | "robustness" | "all");
    let bench = if needs_bench { Some(run_benchmark(p)?) } else { None };
    let run = |n: &str| -> Result<()> {
        info!("running {n}");
        match n {
            "oracle" => run_oracle_study(p).map(|_| ()),
            "benchmark" => Ok(()),
            "size-correlation" => run_size_correlation(p, bench.as_ref().expect("computed")).map(|_| ()),
            "sampling-sweep" => run_sampling_sweep(p).map(|_| ()),
            "robustness" => run_robustness(p, bench.as_ref().expect("computed")).map(|_| ()),
            "size-distribution" => run_size_distribution(p).map(|_| ()),
            "coverage" => run_coverage(p).map(|_| ()),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}`; expected one of {} or all",
                EXPERIMENTS.join(", ")
            ))),
        }
    };
    if name == "all" {
        EXPERIMENTS.iter().try_for_each(|n| run(n))
    } else {
        run(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub criterion: RelevanceCriterion,
    pub k: usize,
    pub filter: CollectionFilter,
    /// "all", "ambiguous" or "faceted".
    pub facet: &'static str,
    pub recall: f64,
    pub precision: f64,
    pub topics: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDiff {
    pub topic_id: String,
    pub criterion: RelevanceCriterion,
    pub k: usize,
    pub precision_wse: f64,
    pub precision_non_wse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub diffs: Vec<OracleDiff>,
}

/// Oracle rankings restricted to WSEs and to the other engines. Recall is
/// relative to the oracle over all engines.
pub fn run_oracle_study(p: &Pipeline) -> Result<OracleReport> {
    let d = &p.dataset;
    let all = CollectionFilter::All.ids(d);
    let mut rows = Vec::new();
    let mut diffs = Vec::new();
    for criterion in RelevanceCriterion::ALL {
        let table = RelevanceTable::new(d, criterion);
        for k in [5usize, 10] {
            let mut per_topic: BTreeMap<(CollectionFilter, String), (f64, Option<f64>)> = BTreeMap::new();
            for t in &d.topics {
                let counts = table.relevant_counts(&t.id);
                let full = oracle_rank(&t.id, &counts, &all);
                for filter in [CollectionFilter::WseOnly, CollectionFilter::NonWse] {
                    let sub = oracle_rank(&t.id, &counts, &filter.ids(d));
                    let r = recall_at_k(&sub, &full, &table, k);
                    let prec = precision_at_10k(&sub, &table, k);
                    per_topic.insert((filter, t.id.clone()), (prec, (!r.degenerate).then_some(r.value)));
                }
                diffs.push(OracleDiff {
                    topic_id: t.id.clone(),
                    criterion,
                    k,
                    precision_wse: per_topic[&(CollectionFilter::WseOnly, t.id.clone())].0,
                    precision_non_wse: per_topic[&(CollectionFilter::NonWse, t.id.clone())].0,
                });
            }
            for filter in [CollectionFilter::WseOnly, CollectionFilter::NonWse] {
                for facet in ["all", "ambiguous", "faceted"] {
                    let topics: Vec<&str> = d
                        .topics
                        .iter()
                        .filter(|t| match facet {
                            "ambiguous" => t.facet_kind == FacetKind::Ambiguous,
                            "faceted" => t.facet_kind == FacetKind::Faceted,
                            _ => true,
                        })
                        .map(|t| t.id.as_str())
                        .collect();
                    let vals: Vec<&(f64, Option<f64>)> =
                        topics.iter().map(|t| &per_topic[&(filter, t.to_string())]).collect();
                    let recalls: Vec<f64> = vals.iter().filter_map(|v| v.1).collect();
                    let precs: Vec<f64> = vals.iter().map(|v| v.0).collect();
                    rows.push(OracleRow {
                        criterion,
                        k,
                        filter,
                        facet,
                        recall: mean(&recalls),
                        precision: mean(&precs),
                        topics: topics.len(),
                    });
                }
            }
        }
    }
    let dir = out_dir(p, "oracle");
    let mut s = String::from("criterion,k,filter,facet,recall,precision,topics\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{}",
            r.criterion.as_str(),
            r.k,
            r.filter,
            r.facet,
            r.recall,
            r.precision,
            r.topics
        );
    }
    write(&dir.join("oracle.csv"), s)?;
    let mut s = String::from("topic_id,criterion,k,precision_wse,precision_non_wse,difference\n");
    for x in &diffs {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6}",
            x.topic_id,
            x.criterion.as_str(),
            x.k,
            x.precision_wse,
            x.precision_non_wse,
            x.precision_wse - x.precision_non_wse
        );
    }
    write(&dir.join("precision_diff.csv"), s)?;
    Ok(OracleReport { rows, diffs })
}

pub type RunKey = (Method, SamplingKind, IndexMode);

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub rows: Vec<EvalRow>,
    pub tuned: BTreeMap<RunKey, Tuned>,
}

impl BenchmarkReport {
    /// Mean recall of `key` at `k` under `filter`, excluding degenerate topics.
    pub fn mean_recall(&self, key: RunKey, filter: CollectionFilter, k: usize) -> f64 {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| {
                r.method == key.0.as_str()
                    && r.strategy == key.1.as_str()
                    && r.mode == key.2.as_str()
                    && r.filter == filter.as_str()
                    && r.k == k
                    && !r.degenerate
            })
            .map(|r| r.recall)
            .collect();
        mean(&vals)
    }
}

/// Every method on every (strategy, mode) index, tuned by cross-validation.
pub fn run_benchmark(p: &Pipeline) -> Result<BenchmarkReport> {
    let mut tuned = BTreeMap::new();
    let mut rows = Vec::new();
    for ((strategy, mode), index) in &p.indexes {
        for method in &p.cfg.methods {
            let t = p.tune(*method, index, &p.sizes)?;
            for filter in &p.cfg.filters {
                rows.extend(p.evaluate(&t.lists, *method, strategy.as_str(), mode.as_str(), *filter));
            }
            tuned.insert((*method, *strategy, *mode), t);
        }
    }
    let dir = out_dir(p, "benchmark");
    write_eval_csv(&dir.join("eval.csv"), &rows)?;
    write_summary_csv(&dir.join("summary.csv"), &rows)?;
    let mut s = String::from("method,strategy,mode,params\n");
    for ((m, st, md), t) in &tuned {
        let json = serde_json::to_string(&t.chosen).expect("params serialize");
        let _ = writeln!(s, "{m},{st},{md},\"{}\"", json.replace('"', "\"\""));
        write_run(&dir.join("runs").join(format!("{m}_{st}_{md}.tsv")), &t.lists)?;
    }
    write(&dir.join("params.csv"), s)?;
    Ok(BenchmarkReport { rows, tuned })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRow {
    pub estimator: Estimator,
    pub source: SamplingKind,
    pub filter: CollectionFilter,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeCorrelationReport {
    /// Mean tau against the size ranking and the number of defined pairs.
    pub taus: Vec<(Method, f64, usize)>,
    pub estimators: Vec<EstimatorRow>,
    /// Pearson correlation of clarity with SB1's recall advantage.
    pub scs: Vec<(Method, Option<f64>)>,
}

impl SizeCorrelationReport {
    pub fn tau(&self, m: Method) -> Option<f64> {
        self.taus.iter().find(|t| t.0 == m).map(|t| t.1)
    }
}

const CORRELATED: [Method; 7] = [
    Method::Lm,
    Method::Cori,
    Method::Gavg,
    Method::Redde,
    Method::Crcs,
    Method::CrcsExp,
    Method::Sb1,
];

/// Rank agreement with a pure size ranking, size-estimator comparison for
/// SB1, and clarity versus SB1's advantage.
pub fn run_size_correlation(p: &Pipeline, bench: &BenchmarkReport) -> Result<SizeCorrelationReport> {
    let size_lists: Vec<RankedList> = p
        .dataset
        .topics
        .iter()
        .map(|t| {
            let considered: BTreeSet<String> = p.sizes.keys().cloned().collect();
            RankedList::from_scores(&t.id, "size", p.sizes.clone(), considered)
        })
        .collect();
    let mut taus = Vec::new();
    for m in CORRELATED {
        let vals: Vec<f64> = bench
            .tuned
            .iter()
            .filter(|((method, _, _), _)| *method == m)
            .flat_map(|(_, t)| t.lists.iter().zip(&size_lists).filter_map(|(l, s)| kendall_tau(l, s)))
            .collect();
        if bench.tuned.keys().any(|k| k.0 == m) {
            taus.push((m, mean(&vals), vals.len()));
        }
    }

    // SB1 under each size estimator, on the pages index of the size strategy.
    let mut estimators = Vec::new();
    let base_key = (p.cfg.size_strategy, IndexMode::Pages);
    let base_index = p.indexes.get(&base_key).or_else(|| p.indexes.values().next()).expect("an index exists");
    let mut sources: Vec<SamplingKind> = vec![p.cfg.size_strategy];
    if p.stores.contains_key(&SamplingKind::Top) && p.cfg.size_strategy != SamplingKind::Top {
        sources.push(SamplingKind::Top);
    }
    for est in Estimator::ALL {
        for source in &sources {
            if est == Estimator::TrueSize && *source != p.cfg.size_strategy {
                continue;
            }
            let sizes = usable_sizes(&p.dataset, &p.stores[source], est, seed::derive(p.cfg.seed, "sizes"))?;
            let t = p.tune(Method::Sb1, base_index, &sizes)?;
            for filter in [CollectionFilter::All, CollectionFilter::NonWse] {
                let rows = p.evaluate(&t.lists, Method::Sb1, source.as_str(), "pages", filter);
                let k = p.cfg.tune_k();
                let rec: Vec<f64> = rows.iter().filter(|r| r.k == k && !r.degenerate).map(|r| r.recall).collect();
                let prec: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.precision).collect();
                estimators.push(EstimatorRow {
                    estimator: est,
                    source: *source,
                    filter,
                    recall: mean(&rec),
                    precision: mean(&prec),
                });
            }
        }
    }

    // Clarity against SB1's per-topic recall advantage.
    let k = p.cfg.tune_k();
    let mut scs_rows = Vec::new();
    let key_of = |m: Method| (m, base_key.0, base_key.1);
    if let Some(sb1) = bench.tuned.get(&key_of(Method::Sb1)) {
        let clarity: Vec<Option<f64>> = p.dataset.topics.iter().map(|t| scs(&t.query, base_index)).collect();
        for m in [Method::Lm, Method::Cori, Method::Gavg, Method::Redde, Method::Crcs] {
            let Some(other) = bench.tuned.get(&key_of(m)) else { continue };
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for (t, c) in clarity.iter().enumerate() {
                let o = &p.oracles[t];
                let a = recall_at_k(&sb1.lists[t], o, &p.table, k);
                let b = recall_at_k(&other.lists[t], o, &p.table, k);
                if let (Some(c), false) = (c, a.degenerate) {
                    xs.push(*c);
                    ys.push(a.value - b.value);
                }
            }
            let r = pearson(&xs, &ys).map_err(|e| warn!("clarity correlation for {m}: {e}")).ok();
            scs_rows.push((m, r));
        }
    }

    let dir = out_dir(p, "size-correlation");
    let mut s = String::from("method,tau,pairs\n");
    for (m, t, n) in &taus {
        let _ = writeln!(s, "{m},{t:.6},{n}");
    }
    write(&dir.join("tau.csv"), s)?;
    let mut s = String::from("estimator,source,filter,recall,precision\n");
    for r in &estimators {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6}",
            r.estimator, r.source, r.filter, r.recall, r.precision
        );
    }
    write(&dir.join("estimators.csv"), s)?;
    let mut s = String::from("method,pearson\n");
    for (m, r) in &scs_rows {
        match r {
            Some(r) => {
                let _ = writeln!(s, "{m},{r:.6}");
            }
            None => {
                let _ = writeln!(s, "{m},NA");
            }
        }
    }
    write(&dir.join("scs.csv"), s)?;
    Ok(SizeCorrelationReport {
        taus,
        estimators,
        scs: scs_rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub method: Method,
    pub strategy: SamplingKind,
    pub fraction: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn recall(&self, m: Method, s: SamplingKind, fraction: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.method == m && p.strategy == s && p.fraction == fraction)
            .map(|p| p.recall)
    }
}

/// Recall of the swept methods on nested subsets of the snippet samples.
/// Size estimates stay those of the full samples.
pub fn run_sampling_sweep(p: &Pipeline) -> Result<SweepReport> {
    let mut points = Vec::new();
    for strategy in &p.cfg.strategies {
        let store = &p.stores[strategy];
        let sub_seed = seed::derive(p.cfg.seed, &format!("sweep/{strategy}"));
        for fraction in &p.cfg.sweep_fractions {
            let sub = subsample(store, *fraction, sub_seed)?;
            let index = build_index(&sub, &p.dataset, IndexMode::Snippets)?;
            for m in &p.cfg.sweep_methods {
                let t = p.tune(*m, &index, &p.sizes)?;
                points.push(SweepPoint {
                    method: *m,
                    strategy: *strategy,
                    fraction: *fraction,
                    recall: p.mean_recall(&t.lists, p.cfg.tune_k()),
                });
            }
        }
    }
    let dir = out_dir(p, "sampling-sweep");
    let mut s = String::from("method,strategy,fraction,recall\n");
    for x in &points {
        let _ = writeln!(s, "{},{},{:.2},{:.6}", x.method, x.strategy, x.fraction, x.recall);
    }
    write(&dir.join("sweep.csv"), s)?;
    for m in &p.cfg.sweep_methods {
        let series: Vec<(String, Vec<(f64, f64)>)> = p
            .cfg
            .strategies
            .iter()
            .map(|st| {
                let pts = points
                    .iter()
                    .filter(|x| x.method == *m && x.strategy == *st)
                    .map(|x| (x.fraction, x.recall))
                    .collect();
                (st.to_string(), pts)
            })
            .collect();
        write(
            &dir.join(format!("sweep_{m}.svg")),
            plot::lines(&format!("{m}: recall@{} by sample fraction", p.cfg.tune_k()), &series),
        )?;
    }
    Ok(SweepReport { points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub alpha: Option<f64>,
    pub alpha_error: Option<String>,
    /// (topic subset size, mean tau against the full-set system ranking).
    pub curve: Vec<(usize, f64)>,
    pub runs: usize,
    pub topics: usize,
}

/// Runs as rows, non-degenerate topics as columns, recall at the tuning cutoff.
pub fn benchmark_matrix(p: &Pipeline, bench: &BenchmarkReport) -> Result<ScoreMatrix> {
    let k = p.cfg.tune_k();
    let cols: Vec<usize> = (0..p.num_topics())
        .filter(|t| !recall_at_k(&p.oracles[*t], &p.oracles[*t], &p.table, k).degenerate)
        .collect();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut seen_constant: BTreeSet<Method> = BTreeSet::new();
    for ((m, st, md), t) in &bench.tuned {
        if *m == Method::Oracle {
            continue;
        }
        if matches!(m, Method::Popular | Method::Sb2) && !seen_constant.insert(*m) {
            continue;
        }
        rows.push(format!("{m}/{st}/{md}"));
        cells.push(cols.iter().map(|c| recall_at_k(&t.lists[*c], &p.oracles[*c], &p.table, k).value).collect());
    }
    let columns = cols.iter().map(|c| p.dataset.topics[*c].id.clone()).collect();
    ScoreMatrix::new(rows, columns, cells)
}

/// Positions (negated, so larger is better) of rows sorted by descending score,
/// ties broken by row order.
fn ranking_positions(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)));
    let mut pos = vec![0.0; scores.len()];
    for (rank, i) in order.into_iter().enumerate() {
        pos[i] = -(rank as f64);
    }
    pos
}

/// Mean tau between system rankings on random topic subsets and on all topics.
pub fn subset_curve(m: &ScoreMatrix, step: usize, resamples: usize, seed: u64) -> Vec<(usize, f64)> {
    let n = m.columns.len();
    let all: Vec<usize> = (0..n).collect();
    let full = ranking_positions(&m.row_means(&all));
    let mut sizes: Vec<usize> = (step..=n).step_by(step).collect();
    if sizes.last() != Some(&n) && n > 0 {
        sizes.push(n);
    }
    sizes
        .par_iter()
        .map(|size| {
            let taus: Vec<f64> = (0..resamples)
                .filter_map(|r| {
                    let mut cols = all.clone();
                    cols.shuffle(&mut seed::rng(seed, &format!("subset/{size}/{r}")));
                    cols.truncate(*size);
                    kendall_tau_a(&ranking_positions(&m.row_means(&cols)), &full)
                })
                .collect();
            (*size, mean(&taus))
        })
        .collect()
}

pub fn run_robustness(p: &Pipeline, bench: &BenchmarkReport) -> Result<RobustnessReport> {
    let m = benchmark_matrix(p, bench)?;
    let (alpha, alpha_error) = match cronbach_alpha(&m) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let curve = subset_curve(
        &m,
        p.cfg.subset_step,
        p.cfg.subset_resamples,
        seed::derive(p.cfg.seed, "robustness"),
    );
    let dir = out_dir(p, "robustness");
    let alpha_text = alpha.map_or_else(|| "NA".to_string(), |a| format!("{a:.6}"));
    write(
        &dir.join("alpha.csv"),
        format!("runs,topics,alpha\n{},{},{alpha_text}\n", m.rows.len(), m.columns.len()),
    )?;
    let mut s = String::from("topics,mean_tau\n");
    for (size, tau) in &curve {
        let _ = writeln!(s, "{size},{tau:.6}");
    }
    write(&dir.join("subset_tau.csv"), s)?;
    let n = m.columns.len().max(1) as f64;
    let pts: Vec<(f64, f64)> = curve.iter().map(|(s, t)| (*s as f64 / n, *t)).collect();
    write(
        &dir.join("subset_tau.svg"),
        plot::lines("Kendall tau vs share of topics", &[("tau".to_string(), pts)]),
    )?;
    Ok(RobustnessReport {
        alpha,
        alpha_error,
        curve,
        runs: m.rows.len(),
        topics: m.columns.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistributionReport {
    /// Estimates per estimator, largest first.
    pub sorted: BTreeMap<Estimator, Vec<(String, f64)>>,
}

/// Sorted estimates per estimator as CSV and a log-scale bar chart, plus the
/// five largest collections per estimator.
pub fn write_size_distribution(dir: &Path, estimates: &[SizeEstimate]) -> Result<SizeDistributionReport> {
    let mut sorted: BTreeMap<Estimator, Vec<(String, f64)>> = BTreeMap::new();
    for e in estimates {
        sorted.entry(e.estimator).or_default().push((e.collection_id.clone(), e.value));
    }
    for v in sorted.values_mut() {
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }
    let mut all = String::from("estimator,rank,collection_id,value\n");
    let mut top = String::from("estimator,rank,collection_id,value\n");
    for (est, v) in &sorted {
        for (i, (c, x)) in v.iter().enumerate() {
            let line = format!("{est},{},{c},{x:.6}\n", i + 1);
            if i < 5 {
                top.push_str(&line);
            }
            all.push_str(&line);
        }
        let values: Vec<f64> = v.iter().map(|(_, x)| *x).collect();
        write(&dir.join(format!("sizes_{est}.svg")), plot::log_bars(&format!("Size distribution ({est})"), &values))?;
    }
    write(&dir.join("distribution.csv"), all)?;
    write(&dir.join("top5.csv"), top)?;
    Ok(SizeDistributionReport { sorted })
}

pub fn run_size_distribution(p: &Pipeline) -> Result<SizeDistributionReport> {
    let store = &p.stores[&p.cfg.size_strategy];
    let s = seed::derive(p.cfg.seed, "sizes");
    let estimates: Vec<SizeEstimate> = Estimator::ALL
        .iter()
        .flat_map(|e| estimate_sizes_lenient(&p.dataset, store, *e, s))
        .collect();
    write_size_distribution(&out_dir(p, "size-distribution"), &estimates)
}

pub fn run_coverage(p: &Pipeline) -> Result<Vec<(SamplingKind, IndexMode, Coverage)>> {
    let topics: Vec<(String, String)> = p.dataset.topics.iter().map(|t| (t.id.clone(), t.query.clone())).collect();
    let rows: Vec<(SamplingKind, IndexMode, Coverage)> = p
        .indexes
        .iter()
        .map(|((s, m), idx)| (*s, *m, coverage_stats(idx, &topics, &p.table)))
        .collect();
    let mut s = String::from("strategy,mode,avg_of_total,avg_of_relevant,topics_with_relevant\n");
    for (st, m, c) in &rows {
        let _ = writeln!(
            s,
            "{st},{m},{:.6},{:.6},{}",
            c.avg_total, c.avg_relevant, c.relevant_topics
        );
    }
    write(&out_dir(p, "coverage").join("coverage.csv"), s)?;
    Ok(rows)
}

