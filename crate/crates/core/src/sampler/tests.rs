use std::collections::BTreeMap;

use super::*;
use crate::corpus::{MediaKind, RetrievalModel};

fn collection(id: &str, bodies: &[String]) -> Collection {
    Collection {
        id: id.to_string(),
        name: id.to_uppercase(),
        is_wse: false,
        true_size: Some(bodies.len() as u64),
        retrieval_model: RetrievalModel::QueryLikelihood,
        documents: bodies
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Document::new(format!("http://{id}.test/{i}"), "", "", b.clone(), MediaKind::Html).unwrap()
            })
            .collect(),
    }
}

fn dataset() -> Dataset {
    let small: Vec<String> = ["apple pie", "apple tart", "apple crumble", "pear"].map(String::from).to_vec();
    let big: Vec<String> = (0..500).map(|i| format!("apple w{i} common")).collect();
    let mut df = BTreeMap::new();
    for (i, t) in ["apple", "pear", "pie", "tart", "crumble", "common", "w1", "w2"].iter().enumerate() {
        df.insert(t.to_string(), 100 - i as u64);
    }
    Dataset {
        collections: vec![collection("small", &small), collection("big", &big)],
        topics: Vec::new(),
        judgments: Vec::new(),
        refstats: ReferenceCorpusStats::new(1000, df).unwrap(),
        query_log: QueryLog::new(vec![("apple".into(), 9), ("pear".into(), 5), ("common".into(), 1)]).unwrap(),
    }
}

#[test]
fn top_follows_log_order() {
    let log = QueryLog::new(vec![("a".into(), 9), ("b".into(), 5)]).unwrap();
    let mut p = QueryPicker::top(&log, seed::rng(1, "t"));
    let mut pool = TermPool::default();
    assert_eq!(p.pick_query(&mut pool).unwrap(), "a");
    assert_eq!(p.pick_query(&mut pool).unwrap(), "b");
    assert!(matches!(p.pick_query(&mut pool), Err(Error::QuerySourceExhausted { issued: 2, .. })));
}

#[test]
fn query_log_rejects_increasing_frequencies() {
    assert!(QueryLog::new(vec![("a".into(), 1), ("b".into(), 5)]).is_err());
}

#[test]
fn zipf_takes_evenly_from_bins() {
    let bins: Vec<Vec<String>> = (0..4).map(|b| (0..5).map(|i| format!("b{b}t{i}")).collect()).collect();
    let mut p = QueryPicker::zipf(bins, seed::rng(3, "z"));
    let mut pool = TermPool::default();
    let picked: Vec<String> = (0..8).map(|_| p.pick_query(&mut pool).unwrap()).collect();
    let mut per_bin = [0usize; 4];
    for q in &picked {
        per_bin[q[1..2].parse::<usize>().unwrap()] += 1;
    }
    assert_eq!(per_bin, [2, 2, 2, 2]);
    let mut distinct = picked.clone();
    distinct.sort();
    distinct.dedup();
    assert_eq!(distinct.len(), picked.len());
}

#[test]
fn random_is_deterministic_and_never_repeats() {
    let run = || {
        let mut p = QueryPicker::random(vec!["seed".into()], seed::rng(5, "r"));
        let mut pool = TermPool::default();
        let mut out = vec![p.pick_query(&mut pool).unwrap()];
        pool.add_text("one two three four five six seed");
        for _ in 0..6 {
            out.push(p.pick_query(&mut pool).unwrap());
        }
        assert!(p.pick_query(&mut pool).is_err());
        out
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a[0], "seed");
    let mut sorted = a.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 7);
}

#[test]
fn result_counts_are_capped() {
    let d = dataset();
    let strategy = SamplingStrategy {
        kind: SamplingKind::Top,
        query_budget: 2,
        ..SamplingStrategy::default()
    };
    let store = run_sampling(&d, &strategy, 1).unwrap();
    let apple_small = &store.records_for("small")[0];
    assert_eq!(apple_small.query, "apple");
    assert_eq!(apple_small.num_results, 3);
    let apple_big = &store.records_for("big")[0];
    assert_eq!(apple_big.num_results, 10);
    assert_eq!(store.records_for("big")[1].num_results, 0);
    store.validate(&d).unwrap();
}

#[test]
fn full_page_flag_follows_budget() {
    let d = dataset();
    let strategy = SamplingStrategy {
        kind: SamplingKind::Zipf,
        query_budget: 6,
        full_page_queries: 2,
        zipf_bins: 3,
        ..SamplingStrategy::default()
    };
    let store = run_sampling(&d, &strategy, 4).unwrap();
    let flags: Vec<bool> = store.records_for("big").iter().map(|r| r.full_page).collect();
    assert_eq!(flags, [true, true, false, false, false, false]);
}

#[test]
fn sampling_is_deterministic() {
    let d = dataset();
    for kind in SamplingKind::ALL {
        let strategy = SamplingStrategy {
            kind,
            query_budget: if kind == SamplingKind::Top { 3 } else { 5 },
            zipf_bins: 4,
            ..SamplingStrategy::default()
        };
        let a = run_sampling(&d, &strategy, 11).unwrap();
        let b = run_sampling(&d, &strategy, 11).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn exhausted_budget_is_an_error() {
    let d = dataset();
    let strategy = SamplingStrategy {
        kind: SamplingKind::Top,
        query_budget: 4,
        ..SamplingStrategy::default()
    };
    assert!(matches!(run_sampling(&d, &strategy, 1), Err(Error::QuerySourceExhausted { .. })));
}

fn store_with_slots(n: usize) -> SampleStore {
    let recs = |c: u32| {
        (0..n)
            .map(|slot| SampleRecord {
                slot,
                query: format!("q{slot}"),
                returned: vec![c],
                num_results: 1,
                full_page: false,
            })
            .collect()
    };
    SampleStore {
        kind: SamplingKind::Zipf,
        results_per_query: 10,
        records: [("a".to_string(), recs(0)), ("b".to_string(), recs(1))].into_iter().collect(),
    }
}

#[test]
fn subsample_counts_and_nesting() {
    let store = store_with_slots(40);
    assert_eq!(subsample(&store, 1.0, 7).unwrap(), store);
    let half = subsample(&store, 0.5, 7).unwrap();
    assert_eq!(half.slots().len(), 20);
    assert_eq!(half.records_for("a").len(), 20);
    assert_eq!(half, subsample(&store, 0.5, 7).unwrap());
    let quarter = subsample(&store, 0.25, 7).unwrap();
    let big: HashSet<usize> = half.slots().into_iter().collect();
    assert!(quarter.slots().iter().all(|s| big.contains(s)));
    assert!(subsample(&store, 0.0, 7).is_err());
    assert!(subsample(&store, 1.5, 7).is_err());
}
