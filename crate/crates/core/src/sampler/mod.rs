//! Query-based sampling of uncooperative engines.
//!
//! Each collection is probed with a sequence of single-term (or query-log)
//! queries; the top results of every probe are kept together with the
//! reported result count. The resulting [`SampleStore`] feeds both the
//! centralized sample index and the size estimators.

mod engine;
mod io;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Collection, Dataset, Document, ReferenceCorpusStats};
use crate::index::{tokenize, Analyzer};
use crate::seed::{self, Rng};
use crate::{Error, Result};

pub use self::engine::{searchable_text, SearchEngine, SearchHits};
pub use self::io::{load_samples, write_samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingKind {
    Random,
    Top,
    Zipf,
}

impl SamplingKind {
    pub const ALL: [SamplingKind; 3] = [SamplingKind::Random, SamplingKind::Top, SamplingKind::Zipf];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplingKind::Random => "random",
            SamplingKind::Top => "top",
            SamplingKind::Zipf => "zipf",
        }
    }
}

impl fmt::Display for SamplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(SamplingKind::Random),
            "top" => Ok(SamplingKind::Top),
            "zipf" => Ok(SamplingKind::Zipf),
            other => Err(format!("unknown sampling strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingStrategy {
    pub kind: SamplingKind,
    /// Snippet queries issued per collection.
    pub query_budget: usize,
    /// Leading queries whose result pages are downloaded in full.
    pub full_page_queries: usize,
    pub results_per_query: usize,
    /// Equal-size rank bins over the reference vocabulary (Zipf only).
    pub zipf_bins: usize,
    /// First query of the Random strategy; defaults to the most frequent
    /// token of the first document in the dataset.
    pub bootstrap_term: Option<String>,
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        SamplingStrategy {
            kind: SamplingKind::Zipf,
            query_budget: 197,
            full_page_queries: 40,
            results_per_query: 10,
            zipf_bins: 10,
            bootstrap_term: None,
        }
    }
}

impl SamplingStrategy {
    pub fn new(kind: SamplingKind) -> Self {
        SamplingStrategy {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.query_budget == 0 {
            return Err(Error::Config("query_budget must be >= 1".into()));
        }
        if self.results_per_query == 0 {
            return Err(Error::Config("results_per_query must be >= 1".into()));
        }
        if self.zipf_bins == 0 {
            return Err(Error::Config("zipf_bins must be >= 1".into()));
        }
        Ok(())
    }
}

/// Popular queries with their frequencies, most frequent first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLog {
    pub entries: Vec<(String, u64)>,
}

impl QueryLog {
    pub fn new(entries: Vec<(String, u64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::Invariant("query log frequencies must be non-increasing".into()));
        }
        Ok(QueryLog { entries })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    /// Position of the query in the sampling run; shared by all collections.
    pub slot: usize,
    pub query: String,
    /// Positions of returned documents in the collection, best first.
    pub returned: Vec<u32>,
    pub num_results: usize,
    /// Full pages were downloaded for this query (otherwise snippets only).
    pub full_page: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleStore {
    pub kind: SamplingKind,
    pub results_per_query: usize,
    /// Records per collection id, in slot order.
    pub records: BTreeMap<String, Vec<SampleRecord>>,
}

impl SampleStore {
    pub fn records_for(&self, collection_id: &str) -> &[SampleRecord] {
        self.records.get(collection_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.records.values().all(Vec::is_empty)
    }

    /// Distinct query slots present in any collection.
    pub fn slots(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.records.values().flatten().map(|r| r.slot).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Checks record invariants against the source dataset.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        for (cid, records) in &self.records {
            let c = dataset
                .collection(cid)
                .ok_or_else(|| Error::UnknownCollection(cid.clone()))?;
            for r in records {
                if r.num_results > self.results_per_query {
                    return Err(Error::Invariant(format!(
                        "{cid}: query {:?} reports {} results over the cap {}",
                        r.query, r.num_results, self.results_per_query
                    )));
                }
                if r.returned.len() != r.num_results {
                    return Err(Error::Invariant(format!(
                        "{cid}: query {:?} returned {} documents but reports {}",
                        r.query,
                        r.returned.len(),
                        r.num_results
                    )));
                }
                if r.returned.iter().any(|d| *d as usize >= c.documents.len()) {
                    return Err(Error::Invariant(format!(
                        "{cid}: query {:?} references a missing document",
                        r.query
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Unused candidate terms with O(1) uniform removal.
#[derive(Debug, Default)]
pub struct TermPool {
    unused: Vec<String>,
    seen: HashSet<String>,
}

impl TermPool {
    pub fn add_text(&mut self, text: &str) {
        for t in tokenize(text) {
            if !self.seen.contains(&t) {
                self.seen.insert(t.clone());
                self.unused.push(t);
            }
        }
    }

    /// Mark `term` as issued so it is never drawn.
    pub fn mark_used(&mut self, term: &str) {
        if self.seen.insert(term.to_string()) {
            return;
        }
        if let Some(i) = self.unused.iter().position(|t| t == term) {
            self.unused.swap_remove(i);
        }
    }

    pub fn has_documents(&self) -> bool {
        !self.seen.is_empty()
    }

    fn draw(&mut self, rng: &mut Rng) -> Option<String> {
        if self.unused.is_empty() {
            return None;
        }
        let i = rng.random_range(0..self.unused.len());
        Some(self.unused.swap_remove(i))
    }
}

/// Stateful query source for one sampling run.
#[derive(Debug)]
pub struct QueryPicker {
    kind: SamplingKind,
    rng: Rng,
    issued: usize,
    used: HashSet<String>,
    log: Vec<String>,
    log_cursor: usize,
    bins: Vec<Vec<String>>,
    bin_cursor: usize,
    bootstrap: Vec<String>,
    bootstrap_cursor: usize,
}

impl QueryPicker {
    pub fn random(bootstrap: Vec<String>, rng: Rng) -> Self {
        Self::build(SamplingKind::Random, rng, Vec::new(), Vec::new(), bootstrap)
    }

    pub fn top(log: &QueryLog, rng: Rng) -> Self {
        let queries = log.entries.iter().map(|(q, _)| q.clone()).collect();
        Self::build(SamplingKind::Top, rng, queries, Vec::new(), Vec::new())
    }

    pub fn zipf(bins: Vec<Vec<String>>, rng: Rng) -> Self {
        Self::build(SamplingKind::Zipf, rng, Vec::new(), bins, Vec::new())
    }

    fn build(
        kind: SamplingKind,
        rng: Rng,
        log: Vec<String>,
        bins: Vec<Vec<String>>,
        bootstrap: Vec<String>,
    ) -> Self {
        QueryPicker {
            kind,
            rng,
            issued: 0,
            used: HashSet::new(),
            log,
            log_cursor: 0,
            bins,
            bin_cursor: 0,
            bootstrap,
            bootstrap_cursor: 0,
        }
    }

    fn exhausted(&self) -> Error {
        Error::QuerySourceExhausted {
            strategy: self.kind.to_string(),
            issued: self.issued,
        }
    }

    /// Next query. `pool` holds the terms of documents sampled so far and is
    /// consulted only by the Random strategy.
    pub fn pick_query(&mut self, pool: &mut TermPool) -> Result<String> {
        let q = match self.kind {
            SamplingKind::Top => self.next_log_query(),
            SamplingKind::Zipf => self.next_zipf_term(),
            SamplingKind::Random => self.next_random_term(pool),
        }
        .ok_or_else(|| self.exhausted())?;
        self.issued += 1;
        self.used.insert(q.clone());
        Ok(q)
    }

    fn next_log_query(&mut self) -> Option<String> {
        while self.log_cursor < self.log.len() {
            let q = &self.log[self.log_cursor];
            self.log_cursor += 1;
            if !self.used.contains(q) {
                return Some(q.clone());
            }
        }
        None
    }

    fn next_zipf_term(&mut self) -> Option<String> {
        for _ in 0..self.bins.len() {
            let b = self.bin_cursor;
            self.bin_cursor = (self.bin_cursor + 1) % self.bins.len();
            while !self.bins[b].is_empty() {
                let i = self.rng.random_range(0..self.bins[b].len());
                let t = self.bins[b].swap_remove(i);
                if !self.used.contains(&t) {
                    return Some(t);
                }
            }
        }
        None
    }

    fn next_random_term(&mut self, pool: &mut TermPool) -> Option<String> {
        if pool.has_documents() {
            while let Some(t) = pool.draw(&mut self.rng) {
                if !self.used.contains(&t) {
                    return Some(t);
                }
            }
        }
        // Nothing sampled yet, or every sampled term was already issued.
        while self.bootstrap_cursor < self.bootstrap.len() {
            let t = self.bootstrap[self.bootstrap_cursor].clone();
            self.bootstrap_cursor += 1;
            if !self.used.contains(&t) {
                pool.mark_used(&t);
                return Some(t);
            }
        }
        None
    }
}

/// Most frequent token of `doc` (ties broken alphabetically).
pub fn most_frequent_token(doc: &Document) -> Option<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in tokenize(&format!("{} {} {}", doc.title, doc.snippet, doc.body)) {
        *counts.entry(t).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .map(|(t, _)| t)
}

/// Engines for every collection of a dataset, built once and reused across runs.
pub struct Sampler<'a> {
    dataset: &'a Dataset,
    engines: Vec<SearchEngine>,
}

impl<'a> Sampler<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        let engines = dataset.collections.par_iter().map(SearchEngine::new).collect();
        Sampler { dataset, engines }
    }

    pub fn engine(&self, collection_index: usize) -> &SearchEngine {
        &self.engines[collection_index]
    }

    fn bootstrap_terms(&self, strategy: &SamplingStrategy) -> Vec<String> {
        let first = strategy.bootstrap_term.clone().or_else(|| {
            self.dataset
                .collections
                .iter()
                .flat_map(|c| c.documents.first())
                .next()
                .and_then(most_frequent_token)
        });
        first
            .into_iter()
            .chain(self.dataset.refstats.terms_by_frequency())
            .collect()
    }

    /// Shared query sequence for the collection-independent strategies.
    fn fixed_queries(&self, strategy: &SamplingStrategy, seed: u64) -> Result<Vec<String>> {
        let rng = seed::rng(seed, &format!("sampling/{}", strategy.kind));
        let mut picker = match strategy.kind {
            SamplingKind::Top => QueryPicker::top(&self.dataset.query_log, rng),
            SamplingKind::Zipf => {
                QueryPicker::zipf(self.dataset.refstats.binned_terms(strategy.zipf_bins), rng)
            }
            SamplingKind::Random => unreachable!("random queries depend on the collection"),
        };
        let mut pool = TermPool::default();
        (0..strategy.query_budget)
            .map(|_| picker.pick_query(&mut pool))
            .collect()
    }

    pub fn run(&self, strategy: &SamplingStrategy, seed: u64) -> Result<SampleStore> {
        strategy.validate()?;
        let fixed = match strategy.kind {
            SamplingKind::Random => None,
            _ => Some(self.fixed_queries(strategy, seed)?),
        };
        let bootstrap = self.bootstrap_terms(strategy);
        let per_collection: Vec<Result<(String, Vec<SampleRecord>)>> = self
            .dataset
            .collections
            .par_iter()
            .zip(self.engines.par_iter())
            .map(|(c, engine)| {
                let records = match &fixed {
                    Some(queries) => sample_fixed(c, engine, strategy, queries),
                    None => sample_random(c, engine, strategy, bootstrap.clone(), seed)?,
                };
                Ok((c.id.clone(), records))
            })
            .collect();
        let mut records = BTreeMap::new();
        for r in per_collection {
            let (id, recs) = r?;
            records.insert(id, recs);
        }
        Ok(SampleStore {
            kind: strategy.kind,
            results_per_query: strategy.results_per_query,
            records,
        })
    }
}

fn record(
    slot: usize,
    query: String,
    engine: &SearchEngine,
    analyzer: &mut Analyzer,
    strategy: &SamplingStrategy,
) -> SampleRecord {
    let hits = engine.search(analyzer, &query, strategy.results_per_query);
    SampleRecord {
        slot,
        num_results: hits.docs.len(),
        returned: hits.docs,
        query,
        full_page: slot < strategy.full_page_queries,
    }
}

fn sample_fixed(
    _collection: &Collection,
    engine: &SearchEngine,
    strategy: &SamplingStrategy,
    queries: &[String],
) -> Vec<SampleRecord> {
    let mut analyzer = Analyzer::new();
    queries
        .iter()
        .enumerate()
        .map(|(slot, q)| record(slot, q.clone(), engine, &mut analyzer, strategy))
        .collect()
}

fn sample_random(
    collection: &Collection,
    engine: &SearchEngine,
    strategy: &SamplingStrategy,
    bootstrap: Vec<String>,
    seed: u64,
) -> Result<Vec<SampleRecord>> {
    let rng = seed::rng(seed, &format!("sampling/random/{}", collection.id));
    let mut picker = QueryPicker::random(bootstrap, rng);
    let mut pool = TermPool::default();
    let mut analyzer = Analyzer::new();
    let mut records = Vec::with_capacity(strategy.query_budget);
    for slot in 0..strategy.query_budget {
        let query = picker.pick_query(&mut pool)?;
        let rec = record(slot, query, engine, &mut analyzer, strategy);
        for &d in &rec.returned {
            let doc = &collection.documents[d as usize];
            if rec.full_page {
                pool.add_text(&format!("{} {}", doc.title, doc.body));
            } else {
                pool.add_text(&format!("{} {}", doc.title, doc.snippet));
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// Sample every collection of `dataset` with `strategy`.
pub fn run_sampling(dataset: &Dataset, strategy: &SamplingStrategy, seed: u64) -> Result<SampleStore> {
    Sampler::new(dataset).run(strategy, seed)
}

/// Keep a random `fraction` of the query slots (every record of a kept slot
/// survives). Subsets drawn with the same seed are nested across fractions.
pub fn subsample(store: &SampleStore, fraction: f64, seed: u64) -> Result<SampleStore> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("subsample fraction {fraction} outside (0, 1]")));
    }
    if fraction == 1.0 {
        return Ok(store.clone());
    }
    let mut slots = store.slots();
    let keep = ((fraction * slots.len() as f64).round() as usize).max(1).min(slots.len());
    slots.shuffle(&mut seed::rng(seed, "subsample"));
    let kept: HashSet<usize> = slots[..keep].iter().copied().collect();
    let records = store
        .records
        .iter()
        .map(|(cid, recs)| {
            let recs = recs.iter().filter(|r| kept.contains(&r.slot)).cloned().collect();
            (cid.clone(), recs)
        })
        .collect();
    Ok(SampleStore {
        kind: store.kind,
        results_per_query: store.results_per_query,
        records,
    })
}

/// Reference-corpus helper used when a dataset has no query log: the most
/// frequent reference terms with their dfs as frequencies.
pub fn query_log_from_refstats(refstats: &ReferenceCorpusStats, len: usize) -> QueryLog {
    let entries = refstats
        .terms_by_frequency()
        .into_iter()
        .take(len)
        .map(|t| {
            let f = refstats.df(&t);
            (t, f)
        })
        .collect();
    QueryLog { entries }
}

/// Count of distinct sampled documents per collection.
pub fn distinct_sampled(store: &SampleStore) -> HashMap<String, usize> {
    store
        .records
        .iter()
        .map(|(cid, recs)| {
            let set: HashSet<u32> = recs.iter().flat_map(|r| r.returned.iter().copied()).collect();
            (cid.clone(), set.len())
        })
        .collect()
}

#[cfg(test)]
mod tests;
