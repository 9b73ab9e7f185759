use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;

fn terms(q: &str) -> Vec<String> {
    tokenize_stem(q)
}

#[test]
fn counts_one_document() {
    let idx = SampleIndex::from_texts(&["A"], [("A", "a a b")]);
    assert_eq!(idx.tf("a", 0), 2);
    assert_eq!(idx.tf("b", 0), 1);
    assert_eq!(idx.doc_len(0), 3);
    assert_eq!(idx.cw(0), 3);
    assert_eq!(idx.sample_count(0), 1);
}

#[test]
fn collections_containing_counts_collections() {
    let idx = SampleIndex::from_texts(&["A", "B", "C"], [("A", "x y"), ("B", "x"), ("B", "x z"), ("C", "z")]);
    assert_eq!(idx.collections_containing("x"), 2);
    assert_eq!(idx.df_in_collection("x", 1), 2);
    assert_eq!(idx.collection_term("x", 1), (2, 2));
    assert_eq!(idx.collections_containing("nope"), 0);
    assert_eq!(idx.num_collections(), 3);
    assert!((idx.avg_cw() - 2.0).abs() < 1e-12);
}

#[test]
fn global_probability_is_token_share() {
    let idx = SampleIndex::from_texts(&["A", "B"], [("A", "a a b"), ("B", "b")]);
    assert_eq!(idx.global_term_prob("a"), 0.5);
    assert_eq!(idx.global_term_prob("b"), 0.5);
    assert_eq!(idx.global_term_prob("c"), 0.0);
}

#[test]
fn duplicate_urls_collapse_per_collection() {
    let docs = vec![
        SourceDoc { collection_id: "A", normalized_url: "http://u/", source: 0, text: "x".into() },
        SourceDoc { collection_id: "A", normalized_url: "http://u/", source: 0, text: "x".into() },
        SourceDoc { collection_id: "B", normalized_url: "http://u/", source: 3, text: "x".into() },
    ];
    let idx = SampleIndex::from_docs(IndexMode::Snippets, vec!["B".into(), "A".into()], docs);
    assert_eq!(idx.num_docs(), 2);
    assert_eq!(idx.sample_count(0), 1);
    assert_eq!(idx.doc_owner(1), "B");
    assert_eq!(idx.doc(1).source, 3);
}

#[test]
fn dirichlet_examples() {
    // One doc of length 10 with tf(w) = 2; P(w|G) = 2/10 here.
    let idx = SampleIndex::from_texts(&["A"], [("A", "w w o o o o o o o o")]);
    let q = terms("w");
    assert!((idx.dirichlet_ql(&q, 0, 0.0) - 0.2f64.ln()).abs() < 1e-12);
    // tf 2, |d| 10, mu 100, P(w|G) 0.2: (2 + 20) / 110.
    assert!((idx.dirichlet_ql(&q, 0, 100.0) - (22.0f64 / 110.0).ln()).abs() < 1e-12);
    let absent = terms("o w zzz");
    assert_eq!(idx.dirichlet_ql(&absent, 0, 0.0), f64::NEG_INFINITY);
}

#[test]
fn dirichlet_hand_value() {
    // 100 docs of "o", one doc of length 10 with two w's: P(w|G) = 2 / 1010... build
    // the exact 0.01 probability instead: 2 w's in 200 tokens.
    let mut texts = vec![("A", "w w o o o o o o o o")];
    let filler = "o o o o o o o o o o";
    texts.extend(std::iter::repeat(("A", filler)).take(19));
    let idx = SampleIndex::from_texts(&["A"], texts);
    assert!((idx.global_term_prob("w") - 0.01).abs() < 1e-15);
    let got = idx.dirichlet_ql(&terms("w"), 0, 100.0);
    assert!((got - (3.0f64 / 110.0).ln()).abs() < 1e-12);
    // A doc without the term still scores mu * P / (|d| + mu).
    let got = idx.dirichlet_ql(&terms("w"), 1, 100.0);
    assert!((got - (1.0f64 / 110.0).ln()).abs() < 1e-12);
}

#[test]
fn single_match_has_rank_zero() {
    let idx = SampleIndex::from_texts(&["A", "B"], [("A", "x"), ("B", "y")]);
    let r = idx.rank_samples(&terms("y"), 10.0);
    assert_eq!(r.entries.len(), 1);
    assert_eq!(idx.doc_owner(r.entries[0].0), "B");
    assert_eq!(r.sample_rank(r.entries[0].0), Some(0));
}

#[test]
fn ties_break_by_collection_then_url() {
    let idx = SampleIndex::from_texts(&["B", "A"], [("B", "x"), ("A", "x")]);
    let r = idx.rank_samples(&terms("x"), 10.0);
    let owners: Vec<&str> = r.entries.iter().map(|(d, _)| idx.doc_owner(*d)).collect();
    assert_eq!(owners, ["A", "B"]);
    assert_eq!(r, idx.rank_samples(&terms("x"), 10.0));
}

#[test]
fn oov_terms_are_ignored_in_ranking() {
    let idx = SampleIndex::from_texts(&["A"], [("A", "x y"), ("A", "y")]);
    let with = idx.rank_samples(&terms("x qqq"), 5.0);
    let without = idx.rank_samples(&terms("x"), 5.0);
    assert_eq!(with, without);
    assert!(idx.rank_samples(&terms("qqq"), 5.0).is_empty());
}

fn brute_rank(idx: &SampleIndex, q: &[String], mu: f64) -> Vec<u32> {
    let known: Vec<String> = q.iter().filter(|t| idx.global_term_prob(t) > 0.0).cloned().collect();
    let mut scored: Vec<(u32, f64)> = (0..idx.num_docs() as u32)
        .filter(|d| known.iter().any(|t| idx.tf(t, *d) > 0))
        .map(|d| (d, idx.dirichlet_ql(&known, d, mu)))
        .filter(|(_, s)| s.is_finite())
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(d, _)| d).collect()
}

#[test]
fn three_doc_ranking_matches_exhaustive_scoring() {
    let idx = SampleIndex::from_texts(&["A", "B"], [("A", "x x y"), ("B", "x y y y z"), ("A", "z")]);
    let q = terms("x y");
    let got: Vec<u32> = idx.rank_samples(&q, 3.0).entries.iter().map(|(d, _)| *d).collect();
    assert_eq!(got, brute_rank(&idx, &q, 3.0));
    assert_eq!(got.len(), 2);
}

const WORDS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "omega", "pi"];

fn toy_corpus() -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
    prop::collection::vec((0usize..4, prop::collection::vec(0usize..WORDS.len(), 0..8)), 1..50)
}

fn build(corpus: &[(usize, Vec<usize>)]) -> (SampleIndex, Vec<(String, String)>) {
    let ids = ["c0", "c1", "c2", "c3"];
    let texts: Vec<(String, String)> = corpus
        .iter()
        .map(|(c, ws)| (ids[*c].to_string(), ws.iter().map(|w| WORDS[*w]).collect::<Vec<_>>().join(" ")))
        .collect();
    let idx = SampleIndex::from_texts(&ids, texts.iter().map(|(c, t)| (c.as_str(), t.as_str())));
    (idx, texts)
}

proptest! {
    #[test]
    fn statistics_match_recount(corpus in toy_corpus()) {
        let (idx, texts) = build(&corpus);
        let mut total = 0u64;
        let mut count: BTreeMap<String, u64> = BTreeMap::new();
        let mut df: BTreeMap<(String, String), u32> = BTreeMap::new();
        let mut cw: BTreeMap<String, u64> = BTreeMap::new();
        for (c, t) in &texts {
            let toks = tokenize_stem(t);
            total += toks.len() as u64;
            *cw.entry(c.clone()).or_default() += toks.len() as u64;
            let mut seen = toks.clone();
            seen.sort();
            seen.dedup();
            for w in &toks {
                *count.entry(w.clone()).or_default() += 1;
            }
            for w in seen {
                *df.entry((w, c.clone())).or_default() += 1;
            }
        }
        prop_assert_eq!(idx.total_tokens(), total);
        for (ci, id) in idx.collection_ids().iter().enumerate() {
            prop_assert_eq!(idx.cw(ci), cw.get(id).copied().unwrap_or(0));
            prop_assert!(idx.collections_containing("alpha") <= idx.num_collections());
        }
        let sum_cw: u64 = (0..idx.num_collections()).map(|i| idx.cw(i)).sum();
        prop_assert!((idx.avg_cw() - sum_cw as f64 / 4.0).abs() < 1e-12);
        for ((w, c), n) in &df {
            let ci = idx.collection_index(c).unwrap();
            prop_assert_eq!(idx.df_in_collection(w, ci), *n);
        }
        if total > 0 {
            let s: f64 = count.keys().map(|w| idx.global_term_prob(w)).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            for (w, n) in &count {
                prop_assert_eq!(idx.global_term_prob(w), *n as f64 / total as f64);
            }
        }
    }

    #[test]
    fn ranking_is_sorted_permutation(corpus in toy_corpus(), q in prop::collection::vec(0usize..WORDS.len(), 1..4), mu in 0.0f64..50.0) {
        let (idx, _) = build(&corpus);
        let query: Vec<String> = q.iter().flat_map(|w| tokenize_stem(WORDS[*w])).collect();
        let r = idx.rank_samples(&query, mu);
        for w in r.entries.windows(2) {
            prop_assert!(w[0].1 >= w[1].1);
        }
        let got: Vec<u32> = r.entries.iter().map(|(d, _)| *d).collect();
        prop_assert_eq!(got, brute_rank(&idx, &query, mu));
    }

    #[test]
    fn dirichlet_monotone_in_tf(tf in 0u32..20, extra in 0u32..20, len_pad in 0u32..20, mu in 0.0f64..1000.0, p in 1e-6f64..1.0) {
        let len = (tf + extra + len_pad) as f64;
        let f = |t: u32| dirichlet_term(t as f64, len, mu, p);
        prop_assert!(f(tf) <= f(tf + extra));
    }
}
