//! Resource selection: rank collections for a query.
//!
//! Big-document methods (CORI, LM) score each collection's concatenated
//! samples. Small-document methods (ReDDE, GAVG, CRCS) rank the pooled
//! samples first and aggregate per collection. Size and popularity
//! baselines and the judgment oracle share the same [`RankedList`] output.

mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Collection, Dataset};
use crate::index::SampleIndex;
use crate::{Error, Result};

pub use self::run::{read_run, write_run};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoParams {
    pub cori_b: f64,
    pub lm_lambda: f64,
    pub redde_ratio: f64,
    pub redde_k: f64,
    pub gavg_k: usize,
    pub gavg_mu: f64,
    pub crcs_k: usize,
    pub crcs_alpha: f64,
    pub crcs_beta: f64,
    /// Dirichlet prior of the sample ranking used by ReDDE and CRCS.
    pub rank_mu: f64,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            cori_b: 0.4,
            lm_lambda: 0.5,
            redde_ratio: 0.003,
            redde_k: 1.0,
            gavg_k: 10,
            gavg_mu: 1000.0,
            crcs_k: 50,
            crcs_alpha: 1.2,
            crcs_beta: 0.28,
            rank_mu: 1000.0,
        }
    }
}

impl AlgoParams {
    pub fn validate(&self) -> Result<()> {
        let unit = [("cori_b", self.cori_b), ("lm_lambda", self.lm_lambda)];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} outside [0, 1]")));
            }
        }
        let nonneg = [
            ("redde_ratio", self.redde_ratio),
            ("redde_k", self.redde_k),
            ("gavg_mu", self.gavg_mu),
            ("rank_mu", self.rank_mu),
            ("crcs_alpha", self.crcs_alpha),
            ("crcs_beta", self.crcs_beta),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} {v} must be finite and >= 0")));
            }
        }
        if self.gavg_k == 0 || self.crcs_k == 0 {
            return Err(Error::Config("gavg_k and crcs_k must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cori,
    Lm,
    Redde,
    Gavg,
    Crcs,
    CrcsExp,
    Sb1,
    Sb2,
    Popular,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Popular,
        Method::Sb1,
        Method::Sb2,
        Method::Cori,
        Method::Lm,
        Method::Redde,
        Method::Gavg,
        Method::Crcs,
        Method::CrcsExp,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cori => "cori",
            Method::Lm => "lm",
            Method::Redde => "redde",
            Method::Gavg => "gavg",
            Method::Crcs => "crcs",
            Method::CrcsExp => "crcs_exp",
            Method::Sb1 => "sb1",
            Method::Sb2 => "sb2",
            Method::Popular => "popular",
            Method::Oracle => "oracle",
        }
    }

    /// Whether the output depends on the sample index.
    pub fn uses_samples(self) -> bool {
        !matches!(self, Method::Popular | Method::Oracle | Method::Sb2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == k)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Which collections a ranking or evaluation may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionFilter {
    All,
    WseOnly,
    NonWse,
}

impl CollectionFilter {
    pub const ALL: [CollectionFilter; 3] = [CollectionFilter::All, CollectionFilter::WseOnly, CollectionFilter::NonWse];

    pub fn admits(self, c: &Collection) -> bool {
        match self {
            CollectionFilter::All => true,
            CollectionFilter::WseOnly => c.is_wse,
            CollectionFilter::NonWse => !c.is_wse,
        }
    }

    pub fn ids(self, dataset: &Dataset) -> BTreeSet<String> {
        dataset
            .collections
            .iter()
            .filter(|c| self.admits(c))
            .map(|c| c.id.clone())
            .collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CollectionFilter::All => "all",
            CollectionFilter::WseOnly => "wse",
            CollectionFilter::NonWse => "non_wse",
        }
    }
}

impl fmt::Display for CollectionFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CollectionFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "all" => Ok(CollectionFilter::All),
            "wse" | "wse_only" => Ok(CollectionFilter::WseOnly),
            "non_wse" | "nonwse" => Ok(CollectionFilter::NonWse),
            _ => Err(Error::Config(format!("unknown collection filter `{s}`"))),
        }
    }
}

/// Collections ordered by descending score for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    pub method: String,
    pub entries: Vec<(String, f64)>,
    /// Collections the method actually scored.
    pub considered: BTreeSet<String>,
    /// Every considered collection received the same score by construction.
    pub degenerate: bool,
}

impl RankedList {
    /// Sort `scores` by descending score, ties by collection id.
    pub fn from_scores(
        query_id: &str,
        method: &str,
        scores: impl IntoIterator<Item = (String, f64)>,
        considered: BTreeSet<String>,
    ) -> Self {
        let mut entries: Vec<(String, f64)> = scores.into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedList {
            query_id: query_id.to_string(),
            method: method.to_string(),
            entries,
            considered,
            degenerate: false,
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(c, _)| c.as_str())
    }

    /// The list limited to `allowed` collections, order preserved.
    pub fn restrict(&self, allowed: &BTreeSet<String>) -> RankedList {
        RankedList {
            query_id: self.query_id.clone(),
            method: self.method.clone(),
            entries: self.entries.iter().filter(|(c, _)| allowed.contains(c)).cloned().collect(),
            considered: self.considered.intersection(allowed).cloned().collect(),
            degenerate: self.degenerate,
        }
    }
}

/// CORI belief p(w|C_i) for one term.
pub fn cori_belief(df: f64, cw: f64, avg_cw: f64, num_collections: f64, cf: f64, b: f64) -> f64 {
    if df <= 0.0 {
        return b;
    }
    let t = df / (df + 50.0 + 150.0 * cw / avg_cw);
    let i = ((num_collections + 0.5) / cf).ln() / (num_collections + 1.0).ln();
    b + (1.0 - b) * t * i
}

/// Jelinek-Mercer mixture λ·P(w|C) + (1−λ)·P(w|G).
pub fn lm_mixture(p_collection: f64, p_global: f64, lambda: f64) -> f64 {
    lambda * p_collection + (1.0 - lambda) * p_global
}

fn considered_ids(index: &SampleIndex, set: &BTreeSet<usize>) -> BTreeSet<String> {
    set.iter().map(|ci| index.collection_ids()[*ci].clone()).collect()
}

pub fn cori_rank(query_id: &str, terms: &[String], index: &SampleIndex, params: &AlgoParams) -> RankedList {
    let matched = index.matching_collections(terms);
    let n = index.num_collections() as f64;
    let scores = matched.iter().map(|ci| {
        let score = terms
            .iter()
            .map(|t| {
                cori_belief(
                    f64::from(index.df_in_collection(t, *ci)),
                    index.cw(*ci) as f64,
                    index.avg_cw(),
                    n,
                    index.collections_containing(t) as f64,
                    params.cori_b,
                )
            })
            .sum::<f64>();
        (index.collection_ids()[*ci].clone(), score)
    });
    let mut list = RankedList::from_scores(query_id, Method::Cori.as_str(), scores, considered_ids(index, &matched));
    list.degenerate = params.cori_b == 1.0;
    list
}

/// Log query likelihood under each collection's smoothed big-document model.
/// Terms unseen in every sample are skipped.
pub fn lm_rank(query_id: &str, terms: &[String], index: &SampleIndex, params: &AlgoParams) -> RankedList {
    let matched = index.matching_collections(terms);
    let known: Vec<(&String, f64)> = terms
        .iter()
        .map(|t| (t, index.global_term_prob(t)))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let scores = matched.iter().map(|ci| {
        let cw = index.cw(*ci) as f64;
        let score = known
            .iter()
            .map(|(t, pg)| {
                let tf = index.collection_term(t, *ci).1 as f64;
                lm_mixture(tf / cw, *pg, params.lm_lambda).ln()
            })
            .sum::<f64>();
        (index.collection_ids()[*ci].clone(), score)
    });
    let mut list = RankedList::from_scores(query_id, Method::Lm.as_str(), scores, considered_ids(index, &matched));
    list.degenerate = params.lm_lambda == 0.0;
    list
}

/// Scale factor |C_i|/|S_i| of a collection.
fn scale(id: &str, sizes: &BTreeMap<String, f64>, counts: &BTreeMap<String, u64>) -> Result<f64> {
    let size = *sizes.get(id).ok_or_else(|| Error::MissingSize(id.to_string()))?;
    match counts.get(id) {
        Some(n) if *n > 0 => Ok(size / *n as f64),
        _ => Err(Error::EmptySample(id.to_string())),
    }
}

/// Estimated centralized rank of each document in a sample ranking, given
/// the owning collection of each ranked document, best first.
pub fn central_ranks(
    owners: &[&str],
    sizes: &BTreeMap<String, f64>,
    sample_counts: &BTreeMap<String, u64>,
) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    owners
        .iter()
        .map(|o| {
            let here = acc;
            acc += scale(o, sizes, sample_counts)?;
            Ok(here)
        })
        .collect()
}

/// ReDDE score per collection owning a ranked document. `|C_all|` is the sum
/// of all entries of `sizes`.
pub fn redde_scores(
    owners: &[&str],
    sizes: &BTreeMap<String, f64>,
    sample_counts: &BTreeMap<String, u64>,
    ratio: f64,
    k: f64,
) -> Result<BTreeMap<String, f64>> {
    let central = central_ranks(owners, sizes, sample_counts)?;
    let threshold = ratio * sizes.values().sum::<f64>();
    let mut hits: BTreeMap<String, f64> = BTreeMap::new();
    for (o, c) in owners.iter().zip(&central) {
        let e = hits.entry((*o).to_string()).or_default();
        if *c < threshold {
            *e += k;
        }
    }
    hits.into_iter()
        .map(|(id, rel)| Ok((id.clone(), scale(&id, sizes, sample_counts)? * rel)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrcsVariant {
    Linear,
    Exponential,
}

/// CRCS score per collection owning a ranked document. |C^max| is the largest
/// size among those collections.
pub fn crcs_scores(
    owners: &[&str],
    sizes: &BTreeMap<String, f64>,
    sample_counts: &BTreeMap<String, u64>,
    params: &AlgoParams,
    variant: CrcsVariant,
) -> Result<BTreeMap<String, f64>> {
    let mut weight: BTreeMap<String, f64> = BTreeMap::new();
    for (rank, o) in owners.iter().enumerate() {
        let e = weight.entry((*o).to_string()).or_default();
        if rank < params.crcs_k {
            *e += match variant {
                CrcsVariant::Linear => (params.crcs_k - rank) as f64,
                CrcsVariant::Exponential => params.crcs_alpha * (-params.crcs_beta * rank as f64).exp(),
            };
        }
    }
    let mut max = 0.0f64;
    for id in weight.keys() {
        max = max.max(*sizes.get(id).ok_or_else(|| Error::MissingSize(id.clone()))?);
    }
    weight
        .into_iter()
        .map(|(id, r)| {
            let n = match sample_counts.get(&id) {
                Some(n) if *n > 0 => *n as f64,
                _ => return Err(Error::EmptySample(id.clone())),
            };
            let score = if max > 0.0 { sizes[&id] / (max * n) * r } else { 0.0 };
            Ok((id, score))
        })
        .collect()
}

/// Mean log-likelihood of each collection's top `k` documents; collections
/// with fewer ranked documents are padded with the lowest score in `ranked`.
pub fn gavg_scores(ranked: &[(&str, f64)], k: usize) -> BTreeMap<String, f64> {
    let floor = ranked
        .iter()
        .map(|(_, s)| *s)
        .filter(|s| s.is_finite())
        .fold(f64::INFINITY, f64::min);
    let mut top: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (o, s) in ranked {
        let v = top.entry(*o).or_default();
        if v.len() < k {
            v.push(*s);
        }
    }
    top.into_iter()
        .map(|(id, mut v)| {
            v.resize(k, floor);
            (id.to_string(), v.iter().sum::<f64>() / k as f64)
        })
        .collect()
}

fn sample_counts(index: &SampleIndex) -> BTreeMap<String, u64> {
    index
        .collection_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), index.sample_count(i)))
        .collect()
}

fn ranked_owners<'a>(index: &'a SampleIndex, terms: &[String], mu: f64) -> Vec<(&'a str, f64)> {
    index
        .rank_samples(terms, mu)
        .entries
        .into_iter()
        .map(|(d, s)| (index.doc_owner(d), s))
        .collect()
}

fn from_map(query_id: &str, method: Method, scores: BTreeMap<String, f64>) -> RankedList {
    let considered = scores.keys().cloned().collect();
    RankedList::from_scores(query_id, method.as_str(), scores, considered)
}

pub fn redde_rank(
    query_id: &str,
    terms: &[String],
    index: &SampleIndex,
    sizes: &BTreeMap<String, f64>,
    params: &AlgoParams,
) -> Result<RankedList> {
    let owners: Vec<&str> = ranked_owners(index, terms, params.rank_mu).into_iter().map(|(o, _)| o).collect();
    let scores = redde_scores(&owners, sizes, &sample_counts(index), params.redde_ratio, params.redde_k)?;
    Ok(from_map(query_id, Method::Redde, scores))
}

pub fn crcs_rank(
    query_id: &str,
    terms: &[String],
    index: &SampleIndex,
    sizes: &BTreeMap<String, f64>,
    params: &AlgoParams,
    variant: CrcsVariant,
) -> Result<RankedList> {
    let owners: Vec<&str> = ranked_owners(index, terms, params.rank_mu).into_iter().map(|(o, _)| o).collect();
    let scores = crcs_scores(&owners, sizes, &sample_counts(index), params, variant)?;
    let method = match variant {
        CrcsVariant::Linear => Method::Crcs,
        CrcsVariant::Exponential => Method::CrcsExp,
    };
    Ok(from_map(query_id, method, scores))
}

pub fn gavg_rank(query_id: &str, terms: &[String], index: &SampleIndex, params: &AlgoParams) -> RankedList {
    let ranked = ranked_owners(index, terms, params.gavg_mu);
    from_map(query_id, Method::Gavg, gavg_scores(&ranked, params.gavg_k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeBaseline {
    /// Collections with a sampled document matching a query term.
    Sb1,
    /// Every collection, independent of the query.
    Sb2,
}

pub fn size_baseline_rank(
    query_id: &str,
    terms: &[String],
    index: &SampleIndex,
    sizes: &BTreeMap<String, f64>,
    variant: SizeBaseline,
) -> Result<RankedList> {
    let (method, ids): (Method, Vec<String>) = match variant {
        SizeBaseline::Sb1 => (Method::Sb1, considered_ids(index, &index.matching_collections(terms)).into_iter().collect()),
        SizeBaseline::Sb2 => (Method::Sb2, index.collection_ids().to_vec()),
    };
    let scores = ids
        .into_iter()
        .map(|id| {
            let s = *sizes.get(&id).ok_or_else(|| Error::MissingSize(id.clone()))?;
            Ok((id, s))
        })
        .collect::<Result<BTreeMap<String, f64>>>()?;
    Ok(from_map(query_id, method, scores))
}

/// The configured popularity list, identical for every query.
pub fn popular_rank(query_id: &str, popular: &[String], dataset: &Dataset) -> Result<RankedList> {
    let n = popular.len();
    let mut entries = Vec::with_capacity(n);
    for (i, id) in popular.iter().enumerate() {
        if dataset.collection(id).is_none() {
            return Err(Error::UnknownCollection(id.clone()));
        }
        entries.push((id.clone(), (n - i) as f64));
    }
    Ok(RankedList {
        query_id: query_id.to_string(),
        method: Method::Popular.as_str().to_string(),
        considered: popular.iter().cloned().collect(),
        entries,
        degenerate: false,
    })
}

/// Collections of `subset` ordered by their number of relevant results.
pub fn oracle_rank(query_id: &str, relevant: &BTreeMap<String, usize>, subset: &BTreeSet<String>) -> RankedList {
    let scores = subset
        .iter()
        .map(|id| (id.clone(), relevant.get(id).copied().unwrap_or(0) as f64));
    RankedList::from_scores(query_id, Method::Oracle.as_str(), scores, subset.clone())
}

/// Everything a sample-based method may need for one configuration.
pub struct SelectionInput<'a> {
    pub index: &'a SampleIndex,
    pub sizes: &'a BTreeMap<String, f64>,
    pub dataset: &'a Dataset,
    pub popular: &'a [String],
}

/// Rank collections for `query` with `method`. The oracle needs judgments
/// and is produced by [`oracle_rank`] instead.
pub fn rank(
    method: Method,
    query_id: &str,
    query: &str,
    input: &SelectionInput<'_>,
    params: &AlgoParams,
) -> Result<RankedList> {
    let terms = input.index.analyze(query);
    let (index, sizes) = (input.index, input.sizes);
    match method {
        Method::Cori => Ok(cori_rank(query_id, &terms, index, params)),
        Method::Lm => Ok(lm_rank(query_id, &terms, index, params)),
        Method::Redde => redde_rank(query_id, &terms, index, sizes, params),
        Method::Gavg => Ok(gavg_rank(query_id, &terms, index, params)),
        Method::Crcs => crcs_rank(query_id, &terms, index, sizes, params, CrcsVariant::Linear),
        Method::CrcsExp => crcs_rank(query_id, &terms, index, sizes, params, CrcsVariant::Exponential),
        Method::Sb1 => size_baseline_rank(query_id, &terms, index, sizes, SizeBaseline::Sb1),
        Method::Sb2 => size_baseline_rank(query_id, &terms, index, sizes, SizeBaseline::Sb2),
        Method::Popular => popular_rank(query_id, input.popular, input.dataset),
        Method::Oracle => Err(Error::Config("the oracle ranks from judgments, not samples".into())),
    }
}
