//! Collections, documents, topics and relevance judgments.

mod generate;
mod io;
mod url;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sampler::QueryLog;
use crate::{Error, Result};

pub use self::generate::{generate_synthetic, level_shares, GeneratorConfig, LEVEL_SHARES};
pub use self::io::{load_dataset, write_dataset};
pub use self::url::{normalize_url, UrlNormalizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Text,
    Html,
    Pdf,
    Image,
    Sound,
}

impl MediaKind {
    /// Image and sound results carry no extractable text; only their URL is indexable.
    pub fn is_media(self) -> bool {
        matches!(self, MediaKind::Image | MediaKind::Sound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub url: String,
    pub normalized_url: String,
    pub title: String,
    pub snippet: String,
    pub body: String,
    pub media_kind: MediaKind,
}

impl Document {
    pub fn new(
        url: impl Into<String>,
        title: impl Into<String>,
        snippet: impl Into<String>,
        body: impl Into<String>,
        media_kind: MediaKind,
    ) -> Result<Self> {
        Self::with_normalizer(url, title, snippet, body, media_kind, UrlNormalizer::default_ref())
    }

    pub fn with_normalizer(
        url: impl Into<String>,
        title: impl Into<String>,
        snippet: impl Into<String>,
        body: impl Into<String>,
        media_kind: MediaKind,
        normalizer: &UrlNormalizer,
    ) -> Result<Self> {
        let url = url.into();
        let body = body.into();
        if media_kind.is_media() && !body.is_empty() {
            return Err(Error::Invariant(format!(
                "{url}: {media_kind:?} document must have an empty body"
            )));
        }
        Ok(Document {
            normalized_url: normalizer.normalize(&url)?,
            url,
            title: title.into(),
            snippet: snippet.into(),
            body,
            media_kind,
        })
    }
}

/// How a simulated engine orders the documents matching a query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalModel {
    #[default]
    QueryLikelihood,
    CoordinationBoolean,
    RecencyRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collection {
    pub id: String,
    pub name: String,
    pub is_wse: bool,
    /// Known for synthetic collections only.
    pub true_size: Option<u64>,
    pub retrieval_model: RetrievalModel,
    pub documents: Vec<Document>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetKind {
    Ambiguous,
    Faceted,
    Unspecified,
}

impl FacetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FacetKind::Ambiguous => "ambiguous",
            FacetKind::Faceted => "faceted",
            FacetKind::Unspecified => "unspecified",
        }
    }
}

impl FromStr for FacetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ambiguous" => Ok(FacetKind::Ambiguous),
            "faceted" => Ok(FacetKind::Faceted),
            "unspecified" | "" => Ok(FacetKind::Unspecified),
            other => Err(format!("unknown facet kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub query: String,
    pub facet_kind: FacetKind,
}

/// Page relevance after folding `Junk` into `Non`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelevanceLevel {
    Non = 0,
    Rel = 1,
    HRel = 2,
    Key = 3,
    Nav = 4,
}

impl RelevanceLevel {
    pub const ALL: [RelevanceLevel; 5] = [
        RelevanceLevel::Non,
        RelevanceLevel::Rel,
        RelevanceLevel::HRel,
        RelevanceLevel::Key,
        RelevanceLevel::Nav,
    ];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<Self> {
        Self::ALL.get(usize::from(v)).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceLevel::Non => "Non",
            RelevanceLevel::Rel => "Rel",
            RelevanceLevel::HRel => "HRel",
            RelevanceLevel::Key => "Key",
            RelevanceLevel::Nav => "Nav",
        }
    }
}

impl fmt::Display for RelevanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelevanceLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim();
        if let Ok(v) = t.parse::<u8>() {
            return Self::from_value(v).ok_or_else(|| format!("relevance level {v} out of range 0-4"));
        }
        match t.to_ascii_lowercase().as_str() {
            "junk" | "non" => Ok(RelevanceLevel::Non),
            "rel" => Ok(RelevanceLevel::Rel),
            "hrel" => Ok(RelevanceLevel::HRel),
            "key" => Ok(RelevanceLevel::Key),
            "nav" => Ok(RelevanceLevel::Nav),
            other => Err(format!("unknown relevance level {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub topic_id: String,
    pub collection_id: String,
    pub url: String,
    pub normalized_url: String,
    pub level: RelevanceLevel,
    pub judge_count: u32,
    /// Arithmetic mean of the judges' levels on the 0-4 scale.
    pub mean_level: f64,
}

/// Binary relevance threshold applied to a judgment's mean level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceCriterion {
    /// mean level > 1
    #[default]
    BetterThanRel,
    /// mean level > 2
    BetterThanHRel,
    /// mean level >= 1
    RelOrBetter,
}

impl RelevanceCriterion {
    pub const ALL: [RelevanceCriterion; 3] = [
        RelevanceCriterion::RelOrBetter,
        RelevanceCriterion::BetterThanRel,
        RelevanceCriterion::BetterThanHRel,
    ];

    pub fn accepts(self, mean_level: f64) -> bool {
        match self {
            RelevanceCriterion::BetterThanRel => mean_level > 1.0,
            RelevanceCriterion::BetterThanHRel => mean_level > 2.0,
            RelevanceCriterion::RelOrBetter => mean_level >= 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelevanceCriterion::BetterThanRel => "better_than_rel",
            RelevanceCriterion::BetterThanHRel => "better_than_hrel",
            RelevanceCriterion::RelOrBetter => "rel_or_better",
        }
    }
}

impl FromStr for RelevanceCriterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "better_than_rel" => Ok(RelevanceCriterion::BetterThanRel),
            "better_than_hrel" => Ok(RelevanceCriterion::BetterThanHRel),
            "rel_or_better" => Ok(RelevanceCriterion::RelOrBetter),
            other => Err(format!("unknown relevance criterion {other:?}")),
        }
    }
}

pub fn binary_relevant(judgment: &Judgment, criterion: RelevanceCriterion) -> bool {
    criterion.accepts(judgment.mean_level)
}

/// Document frequencies in a large reference corpus, used to scale sample
/// result counts into size estimates and to draw Zipf sampling queries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCorpusStats {
    pub total_docs: u64,
    pub df: BTreeMap<String, u64>,
}

impl ReferenceCorpusStats {
    pub fn new(total_docs: u64, df: BTreeMap<String, u64>) -> Result<Self> {
        if total_docs == 0 {
            return Err(Error::Invariant("reference corpus total_docs must be > 0".into()));
        }
        if let Some((term, d)) = df.iter().find(|(_, d)| **d > total_docs) {
            return Err(Error::Invariant(format!(
                "reference df({term}) = {d} exceeds total_docs {total_docs}"
            )));
        }
        Ok(ReferenceCorpusStats { total_docs, df })
    }

    pub fn df(&self, term: &str) -> u64 {
        self.df.get(term).copied().unwrap_or(0)
    }

    /// Terms ordered by descending df (ties by term) split into `num_bins`
    /// contiguous rank bins whose sizes differ by at most one.
    pub fn binned_terms(&self, num_bins: usize) -> Vec<Vec<String>> {
        let mut terms: Vec<(&String, u64)> = self
            .df
            .iter()
            .filter(|(_, d)| **d > 0)
            .map(|(t, d)| (t, *d))
            .collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let num_bins = num_bins.clamp(1, terms.len().max(1));
        let base = terms.len() / num_bins;
        let extra = terms.len() % num_bins;
        let mut bins = Vec::with_capacity(num_bins);
        let mut it = terms.into_iter();
        for b in 0..num_bins {
            let n = base + usize::from(b < extra);
            bins.push(it.by_ref().take(n).map(|(t, _)| t.clone()).collect());
        }
        bins
    }

    /// Terms by descending df.
    pub fn terms_by_frequency(&self) -> Vec<String> {
        let mut terms: Vec<(&String, u64)> = self.df.iter().map(|(t, d)| (t, *d)).collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms.into_iter().map(|(t, _)| t.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub collections: Vec<Collection>,
    pub topics: Vec<Topic>,
    pub judgments: Vec<Judgment>,
    pub refstats: ReferenceCorpusStats,
    pub query_log: QueryLog,
}

impl Dataset {
    /// Checks every type invariant the loaders and generator promise.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for c in &self.collections {
            if c.id.is_empty() {
                return Err(Error::Invariant("empty collection id".into()));
            }
            if !ids.insert(c.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "collection",
                    id: c.id.clone(),
                });
            }
            if let Some(n) = c.true_size {
                if n < c.documents.len() as u64 {
                    return Err(Error::Invariant(format!(
                        "collection {}: true_size {n} < {} documents",
                        c.id,
                        c.documents.len()
                    )));
                }
            }
            for d in &c.documents {
                if d.media_kind.is_media() && !d.body.is_empty() {
                    return Err(Error::Invariant(format!(
                        "collection {}: media document {} has a body",
                        c.id, d.url
                    )));
                }
                let expected = normalize_url(&d.url)?;
                if expected != d.normalized_url {
                    return Err(Error::Invariant(format!(
                        "collection {}: normalized url of {} should be {expected}",
                        c.id, d.url
                    )));
                }
            }
        }
        let mut topic_ids = HashSet::new();
        for t in &self.topics {
            if !topic_ids.insert(t.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "topic",
                    id: t.id.clone(),
                });
            }
            if t.query.split_whitespace().next().is_none() {
                return Err(Error::Invariant(format!("topic {} has an empty query", t.id)));
            }
        }
        for j in &self.judgments {
            if !topic_ids.contains(j.topic_id.as_str()) {
                return Err(Error::Invariant(format!("judgment for unknown topic {}", j.topic_id)));
            }
            if !ids.contains(j.collection_id.as_str()) {
                return Err(Error::Invariant(format!(
                    "judgment for unknown collection {}",
                    j.collection_id
                )));
            }
            if j.judge_count == 0 {
                return Err(Error::Invariant(format!("judgment {} has judge_count 0", j.url)));
            }
            if !(0.0..=4.0).contains(&j.mean_level) {
                return Err(Error::Invariant(format!(
                    "judgment {} has mean_level {} outside [0, 4]",
                    j.url, j.mean_level
                )));
            }
        }
        Ok(())
    }

    pub fn collection_ids(&self) -> Vec<String> {
        self.collections.iter().map(|c| c.id.clone()).collect()
    }

    pub fn collection(&self, id: &str) -> Option<&Collection> {
        self.collections.iter().find(|c| c.id == id)
    }

    pub fn wse_ids(&self) -> Vec<String> {
        self.collections
            .iter()
            .filter(|c| c.is_wse)
            .map(|c| c.id.clone())
            .collect()
    }

    /// Judgments grouped by topic then collection, in file order.
    pub fn judgments_by_topic(&self) -> HashMap<&str, BTreeMap<&str, Vec<&Judgment>>> {
        let mut out: HashMap<&str, BTreeMap<&str, Vec<&Judgment>>> = HashMap::new();
        for j in &self.judgments {
            out.entry(j.topic_id.as_str())
                .or_default()
                .entry(j.collection_id.as_str())
                .or_default()
                .push(j);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judgment(mean_level: f64) -> Judgment {
        Judgment {
            topic_id: "t".into(),
            collection_id: "c".into(),
            url: "http://a.org/x".into(),
            normalized_url: "http://a.org/x".into(),
            level: RelevanceLevel::Rel,
            judge_count: 2,
            mean_level,
        }
    }

    #[test]
    fn binary_relevance_thresholds() {
        assert!(binary_relevant(&judgment(1.5), RelevanceCriterion::BetterThanRel));
        assert!(!binary_relevant(&judgment(1.0), RelevanceCriterion::BetterThanRel));
        assert!(binary_relevant(&judgment(1.0), RelevanceCriterion::RelOrBetter));
        assert!(!binary_relevant(&judgment(2.0), RelevanceCriterion::BetterThanHRel));
    }

    #[test]
    fn junk_folds_into_non() {
        assert_eq!("Junk".parse::<RelevanceLevel>(), Ok(RelevanceLevel::Non));
        assert_eq!("hrel".parse::<RelevanceLevel>(), Ok(RelevanceLevel::HRel));
        assert_eq!("4".parse::<RelevanceLevel>(), Ok(RelevanceLevel::Nav));
        assert!("5".parse::<RelevanceLevel>().is_err());
    }

    #[test]
    fn media_documents_reject_bodies() {
        assert!(Document::new("http://a.org/x.jpg", "t", "", "text", MediaKind::Image).is_err());
        assert!(Document::new("http://a.org/x.jpg", "t", "", "", MediaKind::Image).is_ok());
    }

    #[test]
    fn rank_bins_have_balanced_sizes() {
        let df = (0..10).map(|i| (format!("w{i}"), 100 - i as u64)).collect();
        let stats = ReferenceCorpusStats::new(1000, df).unwrap();
        let bins = stats.binned_terms(4);
        let sizes: Vec<usize> = bins.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        assert_eq!(bins[0][0], "w0");
    }

    #[test]
    fn reference_df_cannot_exceed_total() {
        let df = [("a".to_string(), 11)].into_iter().collect();
        assert!(ReferenceCorpusStats::new(10, df).is_err());
    }
}
