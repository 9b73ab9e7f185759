//! Collection size estimation from query-based samples.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Collection, Dataset, ReferenceCorpusStats};
use crate::sampler::{distinct_sampled, SampleRecord, SampleStore};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "clueweb1")]
    ClueWebI,
    #[serde(rename = "clueweb2")]
    ClueWebII,
    #[serde(rename = "querypools")]
    QueryPools,
    #[serde(rename = "true")]
    TrueSize,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::ClueWebI,
        Estimator::ClueWebII,
        Estimator::QueryPools,
        Estimator::TrueSize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::ClueWebI => "clueweb1",
            Estimator::ClueWebII => "clueweb2",
            Estimator::QueryPools => "querypools",
            Estimator::TrueSize => "true",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-', ' '], "").as_str() {
            "clueweb1" | "cluewebi" => Ok(Estimator::ClueWebI),
            "clueweb2" | "cluewebii" => Ok(Estimator::ClueWebII),
            "querypools" => Ok(Estimator::QueryPools),
            "true" | "truesize" => Ok(Estimator::TrueSize),
            _ => Err(Error::Config(format!("unknown size estimator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeEstimate {
    pub collection_id: String,
    pub estimator: Estimator,
    pub value: f64,
    pub queries_used: usize,
    /// Set when the estimate fell back to a default (e.g. an empty query half).
    pub warning: Option<String>,
}

/// Reference-scaled size estimate from `(num_results, reference df)` pairs.
///
/// Queries with df 0 are skipped. With `discard_at = Some(max)`, queries that
/// hit the result cap while the reference df exceeds it are dropped as well.
/// Returns the estimate and the number of queries used.
pub fn clueweb_estimate(
    counts: &[(usize, u64)],
    total_docs: u64,
    discard_at: Option<usize>,
) -> Option<(f64, usize)> {
    let used: Vec<f64> = counts
        .iter()
        .filter(|(_, df)| *df > 0)
        .filter(|(n, df)| match discard_at {
            Some(max) => !(*n == max && *df > max as u64),
            None => true,
        })
        .map(|(n, df)| *n as f64 / *df as f64)
        .collect();
    if used.is_empty() {
        return None;
    }
    let mean = used.iter().sum::<f64>() / used.len() as f64;
    Some((mean * total_docs as f64, used.len()))
}

fn query_df(refstats: &ReferenceCorpusStats, query: &str) -> u64 {
    let q = query.trim();
    match refstats.df.get(q) {
        Some(df) => *df,
        None => refstats.df(&q.to_lowercase()),
    }
}

fn clueweb(
    collection_id: &str,
    records: &[SampleRecord],
    refstats: &ReferenceCorpusStats,
    estimator: Estimator,
    max_results: Option<usize>,
) -> Result<SizeEstimate> {
    let counts: Vec<(usize, u64)> = records
        .iter()
        .map(|r| (r.num_results, query_df(refstats, &r.query)))
        .collect();
    let (value, queries_used) = clueweb_estimate(&counts, refstats.total_docs, max_results)
        .ok_or_else(|| Error::NoUsableQueries(format!("{estimator} estimate for {collection_id}")))?;
    Ok(SizeEstimate {
        collection_id: collection_id.to_string(),
        estimator,
        value,
        queries_used,
        warning: None,
    })
}

/// Mean of numResults/df scaled by the reference corpus size.
pub fn estimate_clueweb1(
    collection_id: &str,
    records: &[SampleRecord],
    refstats: &ReferenceCorpusStats,
) -> Result<SizeEstimate> {
    clueweb(collection_id, records, refstats, Estimator::ClueWebI, None)
}

/// As [`estimate_clueweb1`], ignoring queries that hit `max_results` while
/// their reference df is larger than `max_results`.
pub fn estimate_clueweb2(
    collection_id: &str,
    records: &[SampleRecord],
    refstats: &ReferenceCorpusStats,
    max_results: usize,
) -> Result<SizeEstimate> {
    clueweb(collection_id, records, refstats, Estimator::ClueWebII, Some(max_results))
}

/// |A|·|B| / max(|A ∩ B|, 1).
pub fn querypools_value<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let overlap = a.intersection(b).count().max(1);
    a.len() as f64 * b.len() as f64 / overlap as f64
}

/// Capture–recapture estimate from two random halves of the sampled queries.
pub fn estimate_querypools(
    collection: &Collection,
    records: &[SampleRecord],
    split_seed: u64,
) -> Result<SizeEstimate> {
    if records.len() < 2 {
        return Err(Error::NoUsableQueries(format!(
            "querypools estimate for {} needs at least 2 queries, got {}",
            collection.id,
            records.len()
        )));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut seed::rng(split_seed, &format!("querypools/{}", collection.id)));
    let half = records.len() / 2;
    let urls = |idx: &[usize]| -> HashSet<&str> {
        idx.iter()
            .flat_map(|i| records[*i].returned.iter())
            .map(|d| collection.documents[*d as usize].normalized_url.as_str())
            .collect()
    };
    let a = urls(&order[..half]);
    let b = urls(&order[half..]);
    let (value, warning) = if a.is_empty() || b.is_empty() {
        let msg = format!("{}: a query half returned no documents", collection.id);
        warn!("{msg}");
        (0.0, Some(msg))
    } else {
        (querypools_value(&a, &b), None)
    };
    Ok(SizeEstimate {
        collection_id: collection.id.clone(),
        estimator: Estimator::QueryPools,
        value,
        queries_used: records.len(),
        warning,
    })
}

/// Known collection size: the recorded true size, else the document count.
pub fn true_size(collection: &Collection) -> SizeEstimate {
    SizeEstimate {
        collection_id: collection.id.clone(),
        estimator: Estimator::TrueSize,
        value: collection.true_size.unwrap_or(collection.documents.len() as u64) as f64,
        queries_used: 0,
        warning: None,
    }
}

fn estimate_one(
    dataset: &Dataset,
    collection: &Collection,
    records: &[SampleRecord],
    max_results: usize,
    estimator: Estimator,
    seed: u64,
) -> Result<SizeEstimate> {
    let id = &collection.id;
    match estimator {
        Estimator::ClueWebI => estimate_clueweb1(id, records, &dataset.refstats),
        Estimator::ClueWebII => estimate_clueweb2(id, records, &dataset.refstats, max_results),
        Estimator::QueryPools => estimate_querypools(collection, records, seed),
        Estimator::TrueSize => Ok(true_size(collection)),
    }
}

/// Estimate every collection of `store` with `estimator`.
pub fn estimate_sizes(
    dataset: &Dataset,
    store: &SampleStore,
    estimator: Estimator,
    seed: u64,
) -> Result<Vec<SizeEstimate>> {
    store
        .records
        .par_iter()
        .map(|(cid, records)| {
            let c = dataset
                .collection(cid)
                .ok_or_else(|| Error::UnknownCollection(cid.clone()))?;
            estimate_one(dataset, c, records, store.results_per_query, estimator, seed)
        })
        .collect()
}

/// Like [`estimate_sizes`], but collections whose estimate fails are logged
/// and left out.
pub fn estimate_sizes_lenient(dataset: &Dataset, store: &SampleStore, estimator: Estimator, seed: u64) -> Vec<SizeEstimate> {
    let results: Vec<(String, Result<SizeEstimate>)> = store
        .records
        .par_iter()
        .map(|(cid, records)| {
            let r = dataset
                .collection(cid)
                .ok_or_else(|| Error::UnknownCollection(cid.clone()))
                .and_then(|c| estimate_one(dataset, c, records, store.results_per_query, estimator, seed));
            (cid.clone(), r)
        })
        .collect();
    results
        .into_iter()
        .filter_map(|(cid, r)| r.map_err(|e| log::warn!("{estimator} estimate for {cid}: {e}")).ok())
        .collect()
}

/// Size per collection for the selection methods. Failed or too-small
/// estimates are raised to the number of distinct documents sampled from the
/// collection (and to 1), since a collection holds at least what was seen.
pub fn usable_sizes(
    dataset: &Dataset,
    store: &SampleStore,
    estimator: Estimator,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let seen = distinct_sampled(store);
    let mut out = BTreeMap::new();
    for cid in store.records.keys() {
        let c = dataset
            .collection(cid)
            .ok_or_else(|| Error::UnknownCollection(cid.clone()))?;
        let estimate = estimate_one(dataset, c, store.records_for(cid), store.results_per_query, estimator, seed);
        let floor = seen.get(cid).copied().unwrap_or(0).max(1) as f64;
        let value = match estimate {
            Ok(e) => e.value.max(floor),
            Err(e) => {
                warn!("{cid}: {e}; using the sampled document count");
                floor
            }
        };
        out.insert(cid.clone(), value);
    }
    Ok(out)
}

pub fn write_sizes(path: &Path, estimates: &[SizeEstimate]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = String::from("collection_id\testimator\tvalue\tqueries_used\n");
    for e in estimates {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\n",
            e.collection_id, e.estimator, e.value, e.queries_used
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_sizes(path: &Path) -> Result<Vec<SizeEstimate>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = lines
        .next()
        .map(|(_, l)| l.split('\t').collect())
        .unwrap_or_default();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::schema(&file, 1, format!("missing required column `{name}`")))
    };
    let (ci, ei, vi, qi) = (col("collection_id")?, col("estimator")?, col("value")?, col("queries_used")?);
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let get = |i: usize| f.get(i).copied().ok_or_else(|| Error::schema(&file, n + 1, "too few fields"));
        let value: f64 = get(vi)?
            .parse()
            .map_err(|_| Error::schema(&file, n + 1, "value is not a number"))?;
        if !(value >= 0.0) {
            return Err(Error::schema(&file, n + 1, "value must be >= 0"));
        }
        out.push(SizeEstimate {
            collection_id: get(ci)?.to_string(),
            estimator: get(ei)?.parse()?,
            value,
            queries_used: get(qi)?
                .parse()
                .map_err(|_| Error::schema(&file, n + 1, "queries_used is not an integer"))?,
            warning: None,
        });
    }
    Ok(out)
}
