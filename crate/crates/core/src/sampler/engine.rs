//! In-memory stand-in for an uncooperative search engine over one collection.

use std::collections::HashMap;

use crate::corpus::{Collection, Document, RetrievalModel};
use crate::index::Analyzer;
use crate::seed;

/// Dirichlet prior used by engines running the query-likelihood model.
const ENGINE_MU: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHits {
    /// Document positions in the collection, best first.
    pub docs: Vec<u32>,
    /// Number of documents matching at least one query term.
    pub total_matches: usize,
}

#[derive(Debug)]
pub struct SearchEngine {
    model: RetrievalModel,
    postings: HashMap<String, Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    total_len: u64,
    recency: Vec<u64>,
}

/// Text an engine indexes for a document.
pub fn searchable_text(doc: &Document) -> String {
    format!("{} {} {} {}", doc.url, doc.title, doc.snippet, doc.body)
}

impl SearchEngine {
    pub fn new(collection: &Collection) -> Self {
        let mut analyzer = Analyzer::new();
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(collection.documents.len());
        let mut total_len = 0u64;
        let mut terms = Vec::new();
        for (i, doc) in collection.documents.iter().enumerate() {
            terms.clear();
            analyzer.analyze(&searchable_text(doc), &mut terms);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in &terms {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (t, n) in &tf {
                postings.entry((*t).to_string()).or_default().push((i as u32, *n));
            }
            doc_len.push(terms.len() as u32);
            total_len += terms.len() as u64;
        }
        let salt = seed::hash_bytes(collection.id.as_bytes());
        let recency = collection
            .documents
            .iter()
            .map(|d| seed::derive(salt, &d.url))
            .collect();
        SearchEngine {
            model: collection.retrieval_model,
            postings,
            doc_len,
            total_len,
            recency,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_len.len()
    }

    /// Top `limit` documents matching any query term under the engine's model.
    pub fn search(&self, analyzer: &mut Analyzer, query: &str, limit: usize) -> SearchHits {
        let mut qterms = analyzer.terms(query);
        qterms.sort();
        qterms.dedup();
        let lists: Vec<&Vec<(u32, u32)>> =
            qterms.iter().filter_map(|t| self.postings.get(t)).collect();
        let mut matched: HashMap<u32, Vec<u32>> = HashMap::new();
        for (k, list) in lists.iter().enumerate() {
            for &(doc, tf) in list.iter() {
                matched.entry(doc).or_insert_with(|| vec![0; lists.len()])[k] = tf;
            }
        }
        let total_matches = matched.len();
        let mut scored: Vec<(u32, f64, u64)> = match self.model {
            RetrievalModel::QueryLikelihood => {
                let probs: Vec<f64> = lists
                    .iter()
                    .map(|l| l.iter().map(|p| f64::from(p.1)).sum::<f64>() / self.total_len as f64)
                    .collect();
                matched
                    .into_iter()
                    .map(|(doc, tfs)| {
                        let len = f64::from(self.doc_len[doc as usize]);
                        let s = tfs
                            .iter()
                            .zip(&probs)
                            .map(|(tf, p)| ((f64::from(*tf) + ENGINE_MU * p) / (len + ENGINE_MU)).ln())
                            .sum();
                        (doc, s, self.recency[doc as usize])
                    })
                    .collect()
            }
            RetrievalModel::CoordinationBoolean => matched
                .into_iter()
                .map(|(doc, tfs)| {
                    let hits = tfs.iter().filter(|t| **t > 0).count() as f64;
                    (doc, hits, self.recency[doc as usize])
                })
                .collect(),
            RetrievalModel::RecencyRandom => matched
                .into_keys()
                .map(|doc| (doc, 0.0, self.recency[doc as usize]))
                .collect(),
        };
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| b.2.cmp(&a.2))
                .then_with(|| a.0.cmp(&b.0))
        });
        scored.truncate(limit);
        SearchHits {
            docs: scored.into_iter().map(|s| s.0).collect(),
            total_matches,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MediaKind;

    fn collection(model: RetrievalModel, bodies: &[&str]) -> Collection {
        Collection {
            id: "c1".into(),
            name: "c1".into(),
            is_wse: false,
            true_size: None,
            retrieval_model: model,
            documents: bodies
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    Document::new(format!("http://c1.test/d{i}"), "", "", *b, MediaKind::Text).unwrap()
                })
                .collect(),
        }
    }

    #[test]
    fn counts_matches_and_caps_results() {
        let bodies: Vec<String> = (0..25).map(|i| format!("apple pie {i}")).collect();
        let refs: Vec<&str> = bodies.iter().map(String::as_str).collect();
        let engine = SearchEngine::new(&collection(RetrievalModel::QueryLikelihood, &refs));
        let mut a = Analyzer::new();
        let hits = engine.search(&mut a, "apple", 10);
        assert_eq!(hits.total_matches, 25);
        assert_eq!(hits.docs.len(), 10);
        assert!(engine.search(&mut a, "banana", 10).docs.is_empty());
    }

    #[test]
    fn query_likelihood_prefers_denser_documents() {
        let engine = SearchEngine::new(&collection(
            RetrievalModel::QueryLikelihood,
            &["apple x y z w v", "apple apple apple", "pear"],
        ));
        let hits = engine.search(&mut Analyzer::new(), "apples", 10);
        assert_eq!(hits.docs, vec![1, 0]);
    }

    #[test]
    fn coordination_counts_distinct_terms() {
        let engine = SearchEngine::new(&collection(
            RetrievalModel::CoordinationBoolean,
            &["apple apple apple", "apple pear", "pear"],
        ));
        let hits = engine.search(&mut Analyzer::new(), "apple pear", 10);
        assert_eq!(hits.docs[0], 1);
        assert_eq!(hits.total_matches, 3);
    }
}
