//! Centralized index over sampled documents.
//!
//! Sampled documents from every collection are pooled into one inverted
//! index. Besides postings it keeps the per-collection "big document"
//! statistics used by CORI and LM, and ranks samples by Dirichlet-smoothed
//! query likelihood for the small-document methods.

mod porter;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::sampler::SampleStore;
use crate::{Error, Result};

pub use self::porter::stem;
pub use self::tokenize::{tokenize, tokenize_stem, Analyzer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    /// URL, title and result snippet of every sampled document.
    Snippets,
    /// URL and body of documents downloaded as full pages.
    Pages,
}

impl IndexMode {
    pub const ALL: [IndexMode; 2] = [IndexMode::Pages, IndexMode::Snippets];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexMode::Snippets => "snippets",
            IndexMode::Pages => "pages",
        }
    }
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snippets" | "snippet" => Ok(IndexMode::Snippets),
            "pages" | "page" => Ok(IndexMode::Pages),
            other => Err(Error::Config(format!("unknown index mode `{other}`"))),
        }
    }
}

/// A sampled document as stored in the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedDoc {
    /// Position of the owning collection in [`SampleIndex::collection_ids`].
    pub collection: u32,
    pub normalized_url: String,
    /// Position of the document in its source collection.
    pub source: u32,
}

/// Per-term statistics.
#[derive(Debug, Clone, Default, PartialEq)]
struct TermStats {
    postings: Vec<(u32, u32)>,
    /// Total occurrences over the whole index.
    count: u64,
    /// (collection, df, tf in the collection's big document), by collection.
    by_collection: Vec<(u32, u32, u64)>,
}

#[derive(Debug, Clone)]
pub struct SampleIndex {
    mode: IndexMode,
    collection_ids: Vec<String>,
    docs: Vec<IndexedDoc>,
    doc_len: Vec<u32>,
    terms: HashMap<String, TermStats>,
    sample_count: Vec<u64>,
    cw: Vec<u64>,
    total_tokens: u64,
    avg_cw: f64,
}

/// Text indexed for a sampled document under `mode`.
fn indexed_text(doc: &crate::corpus::Document, mode: IndexMode) -> String {
    if doc.media_kind.is_media() {
        return doc.url.clone();
    }
    match mode {
        IndexMode::Snippets => format!("{} {} {}", doc.url, doc.title, doc.snippet),
        IndexMode::Pages => format!("{} {}", doc.url, doc.body),
    }
}

/// Build the centralized index over `store`. Documents sampled more than
/// once from the same collection are indexed once.
pub fn build_index(store: &SampleStore, dataset: &Dataset, mode: IndexMode) -> Result<SampleIndex> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let mut docs = Vec::new();
    for cid in store.records.keys() {
        let collection = dataset
            .collection(cid)
            .ok_or_else(|| Error::UnknownCollection(cid.clone()))?;
        for record in store.records_for(cid) {
            if mode == IndexMode::Pages && !record.full_page {
                continue;
            }
            for d in &record.returned {
                let doc = collection.documents.get(*d as usize).ok_or_else(|| {
                    Error::Invariant(format!("{cid}: sampled document {d} does not exist"))
                })?;
                docs.push(SourceDoc {
                    collection_id: cid,
                    normalized_url: &doc.normalized_url,
                    source: *d,
                    text: indexed_text(doc, mode),
                });
            }
        }
    }
    Ok(SampleIndex::from_docs(mode, store.records.keys().cloned().collect(), docs))
}

/// Input to [`SampleIndex::from_docs`].
#[derive(Debug, Clone)]
pub struct SourceDoc<'a> {
    pub collection_id: &'a str,
    pub normalized_url: &'a str,
    pub source: u32,
    pub text: String,
}

/// log[(tf + mu·P(w|G)) / (|d| + mu)] for a single query term.
pub fn dirichlet_term(tf: f64, doc_len: f64, mu: f64, global_prob: f64) -> f64 {
    ((tf + mu * global_prob) / (doc_len + mu)).ln()
}

/// Distinct query terms, sorted, with their query frequencies.
fn query_weights(terms: &[String]) -> Vec<(&str, f64)> {
    let mut w: BTreeMap<&str, f64> = BTreeMap::new();
    for t in terms {
        *w.entry(t.as_str()).or_default() += 1.0;
    }
    w.into_iter().collect()
}

/// Documents ranked by query likelihood for one query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedSampleList {
    /// (doc id, score), best first. The position is the 0-based sample rank.
    pub entries: Vec<(u32, f64)>,
}

impl RankedSampleList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sample_rank(&self, doc: u32) -> Option<usize> {
        self.entries.iter().position(|(d, _)| *d == doc)
    }
}

impl SampleIndex {
    /// Index `docs` as-is. `collection_ids` lists every collection, including
    /// ones without samples; the first document per (collection, url) wins.
    pub fn from_docs(mode: IndexMode, mut collection_ids: Vec<String>, docs: Vec<SourceDoc<'_>>) -> Self {
        collection_ids.sort();
        collection_ids.dedup();
        let mut picked: BTreeMap<(u32, &str), (u32, &str)> = BTreeMap::new();
        for d in &docs {
            let ci = collection_ids
                .binary_search_by(|c| c.as_str().cmp(d.collection_id))
                .expect("document collection listed") as u32;
            picked.entry((ci, d.normalized_url)).or_insert((d.source, d.text.as_str()));
        }

        let mut analyzer = Analyzer::new();
        let mut docs = Vec::with_capacity(picked.len());
        let mut doc_len = Vec::with_capacity(picked.len());
        let mut terms: HashMap<String, TermStats> = HashMap::new();
        let mut sample_count = vec![0u64; collection_ids.len()];
        let mut cw = vec![0u64; collection_ids.len()];
        let mut tokens = Vec::new();
        for (doc_id, ((ci, url), (source, text))) in picked.iter().enumerate() {
            tokens.clear();
            analyzer.analyze(text, &mut tokens);
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (t, n) in &tf {
                let stats = terms.entry((*t).to_string()).or_default();
                stats.postings.push((doc_id as u32, *n));
                stats.count += u64::from(*n);
                match stats.by_collection.last_mut() {
                    Some((c, df, ctf)) if c == ci => {
                        *df += 1;
                        *ctf += u64::from(*n);
                    }
                    _ => stats.by_collection.push((*ci, 1, u64::from(*n))),
                }
            }
            sample_count[*ci as usize] += 1;
            cw[*ci as usize] += tokens.len() as u64;
            doc_len.push(tokens.len() as u32);
            docs.push(IndexedDoc {
                collection: *ci,
                normalized_url: (*url).to_string(),
                source: *source,
            });
        }
        let total_tokens: u64 = cw.iter().sum();
        let avg_cw = if collection_ids.is_empty() {
            0.0
        } else {
            total_tokens as f64 / collection_ids.len() as f64
        };
        SampleIndex {
            mode,
            collection_ids,
            docs,
            doc_len,
            terms,
            sample_count,
            cw,
            total_tokens,
            avg_cw,
        }
    }

    /// Toy index from `(collection_id, text)` pairs; each text becomes one document.
    pub fn from_texts<'a>(collection_ids: &[&str], texts: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let urls: Vec<(String, &str, &str)> = texts
            .into_iter()
            .enumerate()
            .map(|(i, (c, t))| (format!("doc{i:06}"), c, t))
            .collect();
        let docs = urls
            .iter()
            .enumerate()
            .map(|(i, (u, c, t))| SourceDoc {
                collection_id: c,
                normalized_url: u,
                source: i as u32,
                text: (*t).to_string(),
            })
            .collect();
        Self::from_docs(IndexMode::Pages, collection_ids.iter().map(|s| s.to_string()).collect(), docs)
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    /// All collections of the sample store, sorted.
    pub fn collection_ids(&self) -> &[String] {
        &self.collection_ids
    }

    pub fn collection_index(&self, id: &str) -> Option<usize> {
        self.collection_ids.binary_search_by(|c| c.as_str().cmp(id)).ok()
    }

    /// |C|: number of collections.
    pub fn num_collections(&self) -> usize {
        self.collection_ids.len()
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn doc(&self, doc: u32) -> &IndexedDoc {
        &self.docs[doc as usize]
    }

    pub fn doc_owner(&self, doc: u32) -> &str {
        &self.collection_ids[self.docs[doc as usize].collection as usize]
    }

    pub fn doc_len(&self, doc: u32) -> u32 {
        self.doc_len[doc as usize]
    }

    /// |S_i|: distinct sampled documents of collection `ci`.
    pub fn sample_count(&self, ci: usize) -> u64 {
        self.sample_count[ci]
    }

    /// cw_i: length of collection `ci`'s big document.
    pub fn cw(&self, ci: usize) -> u64 {
        self.cw[ci]
    }

    pub fn avg_cw(&self) -> f64 {
        self.avg_cw
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn postings(&self, term: &str) -> &[(u32, u32)] {
        self.terms.get(term).map(|s| s.postings.as_slice()).unwrap_or(&[])
    }

    pub fn tf(&self, term: &str, doc: u32) -> u32 {
        let p = self.postings(term);
        p.binary_search_by_key(&doc, |(d, _)| *d).map(|i| p[i].1).unwrap_or(0)
    }

    /// P(w|G), maximum likelihood over all indexed text.
    pub fn global_term_prob(&self, term: &str) -> f64 {
        match self.terms.get(term) {
            Some(s) if self.total_tokens > 0 => s.count as f64 / self.total_tokens as f64,
            _ => 0.0,
        }
    }

    /// df_{w,i} and the term's frequency in the big document of collection `ci`.
    pub fn collection_term(&self, term: &str, ci: usize) -> (u32, u64) {
        self.terms
            .get(term)
            .and_then(|s| {
                s.by_collection
                    .binary_search_by_key(&(ci as u32), |(c, _, _)| *c)
                    .ok()
                    .map(|i| (s.by_collection[i].1, s.by_collection[i].2))
            })
            .unwrap_or((0, 0))
    }

    pub fn df_in_collection(&self, term: &str, ci: usize) -> u32 {
        self.collection_term(term, ci).0
    }

    /// cf_q: number of collections whose samples contain `term`.
    pub fn collections_containing(&self, term: &str) -> usize {
        self.terms.get(term).map_or(0, |s| s.by_collection.len())
    }

    /// Collections with at least one sampled document containing a term of `terms`.
    pub fn matching_collections(&self, terms: &[String]) -> BTreeSet<usize> {
        terms
            .iter()
            .filter_map(|t| self.terms.get(t))
            .flat_map(|s| s.by_collection.iter().map(|(c, _, _)| *c as usize))
            .collect()
    }

    /// Terms of `query` as indexed.
    pub fn analyze(&self, query: &str) -> Vec<String> {
        tokenize_stem(query)
    }

    /// Dirichlet-smoothed log query likelihood of `doc`. Query terms repeat per
    /// occurrence. With `mu == 0` a missing term yields negative infinity.
    pub fn dirichlet_ql(&self, query_terms: &[String], doc: u32, mu: f64) -> f64 {
        let len = f64::from(self.doc_len(doc));
        query_weights(query_terms)
            .into_iter()
            .map(|(t, q)| q * dirichlet_term(f64::from(self.tf(t, doc)), len, mu, self.global_term_prob(t)))
            .sum()
    }

    /// Documents containing at least one in-vocabulary query term, by
    /// descending query likelihood. Terms absent from the index are ignored;
    /// documents with a non-finite score are dropped. Ties go to the lower
    /// doc id, i.e. (collection id, url) order.
    pub fn rank_samples(&self, query_terms: &[String], mu: f64) -> RankedSampleList {
        let known: Vec<String> = query_terms.iter().filter(|t| self.terms.contains_key(*t)).cloned().collect();
        let weights = query_weights(&known);
        let (distinct, qtf): (Vec<&str>, Vec<f64>) = weights.into_iter().unzip();
        let mut tfs: HashMap<u32, Vec<u32>> = HashMap::new();
        for (j, t) in distinct.iter().enumerate() {
            for (d, n) in self.postings(t) {
                tfs.entry(*d).or_insert_with(|| vec![0; distinct.len()])[j] = *n;
            }
        }
        let probs: Vec<f64> = distinct.iter().map(|t| self.global_term_prob(t)).collect();
        let mut entries: Vec<(u32, f64)> = tfs
            .into_iter()
            .map(|(d, tf)| {
                let len = f64::from(self.doc_len(d));
                let score = tf
                    .iter()
                    .zip(&probs)
                    .zip(&qtf)
                    .map(|((n, p), q)| q * dirichlet_term(f64::from(*n), len, mu, *p))
                    .sum::<f64>();
                (d, score)
            })
            .filter(|(_, s)| s.is_finite())
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        RankedSampleList { entries }
    }

    /// Writes `cw.tsv`, `df.tsv` and `cf.tsv` under `dir`.
    pub fn write_stats(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))
        };
        let mut cw = String::from("collection_id\tsample_count\tcw\n");
        for (i, id) in self.collection_ids.iter().enumerate() {
            cw.push_str(&format!("{id}\t{}\t{}\n", self.sample_count[i], self.cw[i]));
        }
        cw.push_str(&format!("#avg_cw\t{:.6}\n", self.avg_cw));
        write("cw.tsv", cw)?;

        let mut sorted: Vec<(&String, &TermStats)> = self.terms.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let mut df = String::from("term\tcollection_id\tdf\ttf\n");
        let mut cf = String::from("term\tcf\tcount\tglobal_prob\n");
        for (term, s) in sorted {
            for (c, d, t) in &s.by_collection {
                df.push_str(&format!("{term}\t{}\t{d}\t{t}\n", self.collection_ids[*c as usize]));
            }
            cf.push_str(&format!(
                "{term}\t{}\t{}\t{:.12}\n",
                s.by_collection.len(),
                s.count,
                s.count as f64 / self.total_tokens as f64
            ));
        }
        write("df.tsv", df)?;
        write("cf.tsv", cf)
    }
}

#[cfg(test)]
mod tests;
