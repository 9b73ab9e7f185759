//! Evaluation of collection rankings against page judgments.

mod stats;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use log::warn;

use crate::corpus::{binary_relevant, Dataset, RelevanceCriterion};
use crate::index::SampleIndex;
use crate::select::RankedList;
use crate::{Error, Result};

pub use self::stats::{
    cronbach_alpha, cross_validate, fold_assignment, kendall_tau, kendall_tau_a, pearson, CvResult,
    ScoreMatrix,
};

/// Results each collection contributes per query in precision@(10·k).
pub const RESULTS_PER_COLLECTION: usize = 10;

/// Judged results per topic and collection, reduced to binary relevance.
#[derive(Debug, Clone, Default)]
pub struct RelevanceTable {
    criterion: Option<RelevanceCriterion>,
    results: BTreeMap<String, BTreeMap<String, Vec<(String, bool)>>>,
}

impl RelevanceTable {
    pub fn new(dataset: &Dataset, criterion: RelevanceCriterion) -> Self {
        let mut results: BTreeMap<String, BTreeMap<String, Vec<(String, bool)>>> = BTreeMap::new();
        for j in &dataset.judgments {
            results
                .entry(j.topic_id.clone())
                .or_default()
                .entry(j.collection_id.clone())
                .or_default()
                .push((j.normalized_url.clone(), binary_relevant(j, criterion)));
        }
        RelevanceTable {
            criterion: Some(criterion),
            results,
        }
    }

    /// Table from explicit `(topic, collection, normalized url, relevant)` rows.
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, &'a str, bool)>) -> Self {
        let mut t = RelevanceTable::default();
        for (topic, c, url, rel) in rows {
            t.results
                .entry(topic.to_string())
                .or_default()
                .entry(c.to_string())
                .or_default()
                .push((url.to_string(), rel));
        }
        t
    }

    pub fn criterion(&self) -> Option<RelevanceCriterion> {
        self.criterion
    }

    pub fn results(&self, topic: &str, collection: &str) -> &[(String, bool)] {
        self.results
            .get(topic)
            .and_then(|m| m.get(collection))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Relevant results of `collection` for `topic`; shared URLs count in every collection.
    pub fn relevant_count(&self, topic: &str, collection: &str) -> usize {
        self.results(topic, collection).iter().filter(|(_, r)| *r).count()
    }

    pub fn relevant_counts(&self, topic: &str) -> BTreeMap<String, usize> {
        self.results
            .get(topic)
            .map(|m| {
                m.iter()
                    .map(|(c, rs)| (c.clone(), rs.iter().filter(|(_, r)| *r).count()))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Collections with at least one relevant result for `topic`.
    pub fn relevant_collections(&self, topic: &str) -> BTreeSet<String> {
        self.relevant_counts(topic)
            .into_iter()
            .filter(|(_, n)| *n > 0)
            .map(|(c, _)| c)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recall {
    pub value: f64,
    /// The oracle found no relevant documents in its top k.
    pub degenerate: bool,
}

/// Σ relevant(run_i) / Σ relevant(oracle_i) over the first `k` positions.
pub fn recall_at_k(run: &RankedList, oracle: &RankedList, table: &RelevanceTable, k: usize) -> Recall {
    let topic = &oracle.query_id;
    let sum = |l: &RankedList| -> usize { l.ids().take(k).map(|c| table.relevant_count(topic, c)).sum() };
    let (num, den) = (sum(run), sum(oracle));
    if den == 0 {
        return Recall {
            value: if num == 0 { 1.0 } else { 0.0 },
            degenerate: true,
        };
    }
    Recall {
        value: num as f64 / den as f64,
        degenerate: false,
    }
}

/// Unique relevant URLs among the results of the run's top `k` collections,
/// divided by 10·k.
pub fn precision_at_10k(run: &RankedList, table: &RelevanceTable, k: usize) -> f64 {
    let mut seen: HashSet<&str> = HashSet::new();
    for c in run.ids().take(k) {
        for (url, rel) in table.results(&run.query_id, c).iter().take(RESULTS_PER_COLLECTION) {
            if *rel {
                seen.insert(url);
            }
        }
    }
    seen.len() as f64 / (RESULTS_PER_COLLECTION * k) as f64
}

/// Simplified clarity from `(query term frequency, collection probability)`
/// pairs. Terms with zero probability are skipped; `None` if none remain.
pub fn scs_from_probs(terms: &[(f64, f64)]) -> Option<f64> {
    let known: Vec<&(f64, f64)> = terms.iter().filter(|(_, p)| *p > 0.0).collect();
    let ql: f64 = known.iter().map(|(q, _)| q).sum();
    if known.is_empty() || ql <= 0.0 {
        return None;
    }
    Some(known.iter().map(|(q, p)| (q / ql) * ((q / ql) / p).log2()).sum())
}

/// Simplified clarity score of a query against the sample index.
pub fn scs(query: &str, index: &SampleIndex) -> Option<f64> {
    let terms = index.analyze(query);
    let mut qtf: BTreeMap<&str, f64> = BTreeMap::new();
    for t in &terms {
        *qtf.entry(t.as_str()).or_default() += 1.0;
    }
    let pairs: Vec<(f64, f64)> = qtf
        .iter()
        .map(|(t, q)| {
            let p = index.global_term_prob(t);
            if p == 0.0 {
                warn!("clarity: term {t:?} is not in the sample index");
            }
            (*q, p)
        })
        .collect();
    scs_from_probs(&pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    /// Mean share of all collections with a sampled match for the topic.
    pub avg_total: f64,
    /// Mean share of relevant collections that have a sampled match.
    pub avg_relevant: f64,
    /// Topics contributing to `avg_relevant`.
    pub relevant_topics: usize,
}

/// Sample coverage over `topics` given as `(topic id, query)`.
pub fn coverage_stats(index: &SampleIndex, topics: &[(String, String)], table: &RelevanceTable) -> Coverage {
    let n = index.num_collections().max(1) as f64;
    let mut total = 0.0;
    let mut rel_sum = 0.0;
    let mut rel_topics = 0;
    for (id, query) in topics {
        let matched: BTreeSet<&str> = index
            .matching_collections(&index.analyze(query))
            .into_iter()
            .map(|ci| index.collection_ids()[ci].as_str())
            .collect();
        total += matched.len() as f64 / n;
        let relevant = table.relevant_collections(id);
        if relevant.is_empty() {
            continue;
        }
        let hit = relevant.iter().filter(|c| matched.contains(c.as_str())).count();
        rel_sum += hit as f64 / relevant.len() as f64;
        rel_topics += 1;
    }
    Coverage {
        avg_total: if topics.is_empty() { 0.0 } else { total / topics.len() as f64 },
        avg_relevant: if rel_topics == 0 { 0.0 } else { rel_sum / rel_topics as f64 },
        relevant_topics: rel_topics,
    }
}

/// One line of `eval.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub topic_id: String,
    pub method: String,
    pub strategy: String,
    pub mode: String,
    pub filter: String,
    pub k: usize,
    pub recall: f64,
    pub precision: f64,
    pub degenerate: bool,
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut out = String::from("topic_id,method,strategy,mode,filter,k,recall,precision\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6}\n",
            r.topic_id, r.method, r.strategy, r.mode, r.filter, r.k, r.recall, r.precision
        ));
    }
    write(path, out)
}

/// Method-level means; topics with a degenerate recall are left out of the
/// recall mean.
pub fn write_summary_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    type Key<'a> = (&'a str, &'a str, &'a str, &'a str, usize);
    let mut groups: BTreeMap<Key<'_>, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let g = groups
            .entry((&r.method, &r.strategy, &r.mode, &r.filter, r.k))
            .or_default();
        if r.degenerate {
            warn!("topic {} has no relevant documents for {}; excluded from recall", r.topic_id, r.method);
        } else {
            g.0.push(r.recall);
        }
        g.1.push(r.precision);
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut out = String::from("method,strategy,mode,filter,k,recall,precision,topics\n");
    for ((m, s, md, f, k), (rec, prec)) in &groups {
        out.push_str(&format!(
            "{m},{s},{md},{f},{k},{:.6},{:.6},{}\n",
            mean(rec),
            mean(prec),
            prec.len()
        ));
    }
    write(path, out)
}

pub(crate) fn write(path: &Path, body: String) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::select::oracle_rank;

    fn ranked(topic: &str, ids: &[&str]) -> RankedList {
        let n = ids.len();
        RankedList::from_scores(
            topic,
            "m",
            ids.iter().enumerate().map(|(i, c)| (c.to_string(), (n - i) as f64)),
            ids.iter().map(|c| c.to_string()).collect(),
        )
    }

    /// Collection `c` gets `n` relevant results with distinct URLs.
    fn table_with_counts(counts: &[(&str, usize)]) -> RelevanceTable {
        let mut rows = Vec::new();
        for (c, n) in counts {
            for i in 0..*n {
                rows.push(("t", c.to_string(), format!("http://{c}/{i}"), true));
            }
        }
        RelevanceTable::from_rows(rows.iter().map(|(t, c, u, r)| (*t, c.as_str(), u.as_str(), *r)))
    }

    #[test]
    fn recall_example() {
        let table = table_with_counts(&[("a", 10), ("b", 5), ("o1", 10), ("o2", 8), ("o3", 5)]);
        let run = ranked("t", &["a", "b", "x", "y", "z"]);
        let oracle = ranked("t", &["o1", "o2", "o3", "x", "y"]);
        let r = recall_at_k(&run, &oracle, &table, 5);
        assert!((r.value - 15.0 / 23.0).abs() < 1e-12);
        assert!(!r.degenerate);
    }

    #[test]
    fn recall_identity_and_prefix() {
        let table = table_with_counts(&[("a", 3), ("b", 2), ("c", 1)]);
        let o = oracle_rank("t", &table.relevant_counts("t"), &["a", "b", "c"].iter().map(|s| s.to_string()).collect());
        for k in 1..=4 {
            assert_eq!(recall_at_k(&o, &o, &table, k).value, 1.0);
        }
        let run = ranked("t", &["a", "c", "b"]);
        assert_eq!(recall_at_k(&run, &o, &table, 1).value, 1.0);
    }

    #[test]
    fn recall_with_no_relevant_documents_is_degenerate() {
        let table = table_with_counts(&[("a", 0)]);
        let r = recall_at_k(&ranked("t", &["a"]), &ranked("t", &["a"]), &table, 5);
        assert_eq!(r, Recall { value: 1.0, degenerate: true });
    }

    #[test]
    fn precision_examples() {
        let mut rows: Vec<(&str, &str, String, bool)> = (0..10).map(|i| ("t", "a", format!("u{i}"), i < 4)).collect();
        rows[1].2 = "u0".into();
        let table = RelevanceTable::from_rows(rows.iter().map(|(t, c, u, r)| (*t, *c, u.as_str(), *r)));
        assert!((precision_at_10k(&ranked("t", &["a"]), &table, 1) - 0.3).abs() < 1e-12);

        let none = table_with_counts(&[("a", 0)]);
        assert_eq!(precision_at_10k(&ranked("t", &["a"]), &none, 1), 0.0);

        let rows: Vec<(String, String)> = ["a", "b"]
            .iter()
            .flat_map(|c| (0..10).map(move |i| (c.to_string(), format!("u{i}"))))
            .collect();
        let table = RelevanceTable::from_rows(rows.iter().map(|(c, u)| ("t", c.as_str(), u.as_str(), true)));
        assert!((precision_at_10k(&ranked("t", &["a", "b"]), &table, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scs_examples() {
        assert!((scs_from_probs(&[(1.0, 2f64.powi(-10))]).unwrap() - 10.0).abs() < 1e-12);
        assert!(scs_from_probs(&[(1.0, 0.5), (1.0, 0.5)]).unwrap().abs() < 1e-12);
        assert!((scs_from_probs(&[(1.0, 0.125), (1.0, 0.125)]).unwrap() - 2.0).abs() < 1e-12);
        assert!((scs_from_probs(&[(1.0, 0.0), (1.0, 2f64.powi(-10))]).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(scs_from_probs(&[(1.0, 0.0)]), None);
    }

    #[test]
    fn scs_against_index() {
        let idx = SampleIndex::from_texts(&["A"], [("A", "x y y y")]);
        assert!((scs("x", &idx).unwrap() - 2.0).abs() < 1e-12);
        assert!((scs("x zzz", &idx).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_examples() {
        let idx = SampleIndex::from_texts(&["A", "B"], [("A", "x"), ("B", "x y")]);
        let table = table_with_counts(&[("A", 1), ("C", 2)]);
        let topics = vec![("t".to_string(), "x".to_string()), ("u".to_string(), "y".to_string())];
        let c = coverage_stats(&idx, &topics, &table);
        assert!((c.avg_total - 0.75).abs() < 1e-12);
        // Only topic t has relevant collections: A (matched) and C (not).
        assert_eq!(c.relevant_topics, 1);
        assert!((c.avg_relevant - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coverage_fraction_of_relevant() {
        let ids: Vec<String> = (0..60).map(|i| format!("c{i:02}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let idx = SampleIndex::from_texts(&refs, refs[..20].iter().map(|c| (*c, "x")));
        let counts: Vec<(&str, usize)> = refs[..50].iter().map(|c| (*c, 1)).collect();
        let table = table_with_counts(&counts);
        let c = coverage_stats(&idx, &[("t".into(), "x".into())], &table);
        assert!((c.avg_relevant - 0.4).abs() < 1e-12);
    }

    #[test]
    fn csv_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let row = |t: &str, r: f64, d: bool| EvalRow {
            topic_id: t.into(),
            method: "redde".into(),
            strategy: "zipf".into(),
            mode: "snippets".into(),
            filter: "all".into(),
            k: 5,
            recall: r,
            precision: 0.1,
            degenerate: d,
        };
        let rows = vec![row("t1", 0.5, false), row("t2", 1.0, true)];
        write_eval_csv(&dir.path().join("eval.csv"), &rows).unwrap();
        write_summary_csv(&dir.path().join("summary.csv"), &rows).unwrap();
        let s = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "redde,zipf,snippets,all,5,0.500000,0.100000,2");
    }

    proptest! {
        #[test]
        fn recall_and_precision_bounds(
            rel in prop::collection::vec(prop::collection::vec((0usize..15, any::<bool>()), 0..10), 6),
            perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
            k in 1usize..8,
        ) {
            let ids = ["a", "b", "c", "d", "e", "f"];
            let rows: Vec<(String, String, bool)> = rel
                .iter()
                .enumerate()
                .flat_map(|(ci, docs)| docs.iter().map(move |(u, r)| (ids[ci].to_string(), format!("u{u}"), *r)))
                .collect();
            let table = RelevanceTable::from_rows(rows.iter().map(|(c, u, r)| ("t", c.as_str(), u.as_str(), *r)));
            let all = ids.iter().map(|s| s.to_string()).collect();
            let oracle = oracle_rank("t", &table.relevant_counts("t"), &all);
            let run_ids: Vec<&str> = perm.iter().map(|i| ids[*i]).collect();
            let run = ranked("t", &run_ids);
            let r = recall_at_k(&run, &oracle, &table, k);
            prop_assert!((0.0..=1.0).contains(&r.value));
            prop_assert_eq!(recall_at_k(&oracle, &oracle, &table, k).value, 1.0);
            let p = precision_at_10k(&run, &table, k);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn duplicate_urls_never_raise_precision(urls in prop::collection::vec(0usize..20, 1..10), k in 2usize..4) {
            let base: Vec<(String, String)> = urls.iter().map(|u| ("a".to_string(), format!("u{u}"))).collect();
            let t1 = RelevanceTable::from_rows(base.iter().map(|(c, u)| ("t", c.as_str(), u.as_str(), true)));
            let mut dup = base.clone();
            dup.extend(urls.iter().map(|u| ("b".to_string(), format!("u{u}"))));
            let t2 = RelevanceTable::from_rows(dup.iter().map(|(c, u)| ("t", c.as_str(), u.as_str(), true)));
            let run = ranked("t", &["a", "b"]);
            prop_assert!(precision_at_10k(&run, &t2, k) <= precision_at_10k(&run, &t1, k));
        }
    }
}
