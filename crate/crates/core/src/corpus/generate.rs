//! Synthetic federated-search datasets.
//!
//! The generator reproduces the qualitative shape of a real multi-engine
//! crawl: a vocabulary with a Zipfian background distribution, topical
//! themes, log-normally skewed collection sizes, a handful of broad web
//! search engines next to topically concentrated ones, documents shared
//! between engines under slightly different URLs, and graded judgments of
//! each engine's top results for every test topic.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{
    Collection, Dataset, Document, FacetKind, Judgment, MediaKind, ReferenceCorpusStats,
    RelevanceLevel, RetrievalModel, Topic,
};
use crate::index::{stem, Analyzer};
use crate::sampler::{QueryLog, SearchEngine};
use crate::seed::{self, Rng};
use crate::{Error, Result};

/// Target share of each judged level, Non..Nav (Junk folded into Non).
pub const LEVEL_SHARES: [f64; 5] = [0.82841, 0.08756, 0.05533, 0.02456, 0.00413];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub num_collections: usize,
    pub num_wse: usize,
    pub num_topics: usize,
    /// Topical themes; the first `num_topics` back the test topics.
    pub num_themes: usize,
    pub vocabulary_size: usize,
    pub terms_per_theme: usize,
    /// Median of the log-normal size distribution.
    pub size_median: f64,
    /// Standard deviation of log size.
    pub size_sigma: f64,
    pub min_size: u64,
    pub max_size: u64,
    /// WSE sizes are drawn from the collections above this size quantile.
    pub wse_size_quantile: f64,
    /// Fraction of documents copied from a shared per-theme pool.
    pub overlap_rate: f64,
    pub shared_pool_size: usize,
    pub media_rate: f64,
    pub body_length: usize,
    /// Probability that a body token comes from the document's theme.
    pub theme_token_rate: f64,
    /// Probability that a non-WSE document is about one of its focus themes.
    pub focus_rate: f64,
    pub max_focus_themes: usize,
    pub reference_total_docs: u64,
    pub query_log_len: usize,
    pub max_judges: u32,
    pub results_per_topic: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            num_collections: 108,
            num_wse: 10,
            num_topics: 50,
            num_themes: 150,
            vocabulary_size: 40_000,
            terms_per_theme: 25,
            size_median: 100.0,
            size_sigma: 2.5,
            min_size: 10,
            max_size: 100_000,
            wse_size_quantile: 0.75,
            overlap_rate: 0.3,
            shared_pool_size: 400,
            media_rate: 0.03,
            body_length: 60,
            theme_token_rate: 0.3,
            focus_rate: 0.9,
            max_focus_themes: 3,
            reference_total_docs: 1_000_000,
            query_log_len: 1000,
            max_judges: 3,
            results_per_topic: 10,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_collections == 0 || self.num_topics == 0 {
            return fail("num_collections and num_topics must be >= 1".into());
        }
        if self.num_wse > self.num_collections {
            return fail(format!(
                "num_wse {} exceeds num_collections {}",
                self.num_wse, self.num_collections
            ));
        }
        if self.num_themes < self.num_topics.max(2) {
            return fail("num_themes must be >= max(num_topics, 2)".into());
        }
        if self.terms_per_theme < 3 {
            return fail("terms_per_theme must be >= 3".into());
        }
        if self.vocabulary_size < 200 + self.num_themes * self.terms_per_theme {
            return fail(format!(
                "vocabulary_size must be >= 200 + num_themes * terms_per_theme = {}",
                200 + self.num_themes * self.terms_per_theme
            ));
        }
        if !(self.size_median > 0.0) || !(self.size_sigma >= 0.0) {
            return fail("size_median must be > 0 and size_sigma >= 0".into());
        }
        if self.min_size == 0 || self.min_size > self.max_size {
            return fail("need 1 <= min_size <= max_size".into());
        }
        for (name, v) in [
            ("overlap_rate", self.overlap_rate),
            ("media_rate", self.media_rate),
            ("theme_token_rate", self.theme_token_rate),
            ("focus_rate", self.focus_rate),
            ("wse_size_quantile", self.wse_size_quantile),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.body_length < 4 || self.max_focus_themes == 0 || self.max_judges == 0 {
            return fail("body_length >= 4, max_focus_themes >= 1 and max_judges >= 1 required".into());
        }
        if self.shared_pool_size == 0 || self.results_per_topic == 0 || self.reference_total_docs == 0 {
            return fail("shared_pool_size, results_per_topic and reference_total_docs must be >= 1".into());
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over a fixed weight vector.
struct Discrete {
    cdf: Vec<f64>,
}

impl Discrete {
    fn zipf(n: usize, exponent: f64) -> Self {
        Self::new((1..=n).map(|r| 1.0 / (r as f64).powf(exponent)))
    }

    fn new(weights: impl Iterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        Discrete { cdf }
    }

    fn prob(&self, i: usize) -> f64 {
        self.cdf[i] - if i == 0 { 0.0 } else { self.cdf[i - 1] }
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|c| *c <= u).min(self.cdf.len() - 1)
    }
}

struct Theme {
    terms: Vec<usize>,
}

struct World<'a> {
    cfg: &'a GeneratorConfig,
    seed: u64,
    vocab: Vec<String>,
    background: Discrete,
    theme_dist: Discrete,
    themes: Vec<Theme>,
}

/// One generated document with the theme it was written about.
struct DocDraft {
    doc: Document,
    theme: usize,
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "m", "n", "p", "r", "t", "v", "z", "br", "dr", "kl", "st"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["b", "d", "g", "k", "m", "n", "p", "r", "x", "f"];

fn make_vocabulary(n: usize, rng: &mut Rng) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.random_range(1..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("nonempty"));
            w.push_str(VOWELS.choose(rng).expect("nonempty"));
        }
        w.push_str(CODAS.choose(rng).expect("nonempty"));
        // Keep only words the stemmer leaves intact so reference and index terms agree.
        if w.len() >= 4 && stem(&w) == w && seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

impl<'a> World<'a> {
    fn new(cfg: &'a GeneratorConfig, seed: u64) -> Self {
        let mut rng = seed::rng(seed, "vocabulary");
        let vocab = make_vocabulary(cfg.vocabulary_size, &mut rng);
        let background = Discrete::zipf(vocab.len(), 1.0);
        // Theme terms are disjoint and avoid the 200 most frequent background words.
        let mut pool: Vec<usize> = (200..vocab.len()).collect();
        pool.shuffle(&mut seed::rng(seed, "themes"));
        let themes = (0..cfg.num_themes)
            .map(|t| Theme {
                terms: pool[t * cfg.terms_per_theme..(t + 1) * cfg.terms_per_theme].to_vec(),
            })
            .collect();
        World {
            cfg,
            seed,
            vocab,
            background,
            theme_dist: Discrete::zipf(cfg.terms_per_theme, 0.8),
            themes,
        }
    }

    fn token(&self, theme: usize, theme_rate: f64, rng: &mut Rng) -> &str {
        let idx = if rng.random::<f64>() < theme_rate {
            self.themes[theme].terms[self.theme_dist.sample(rng)]
        } else {
            self.background.sample(rng)
        };
        &self.vocab[idx]
    }

    fn text(&self, theme: usize, len: usize, theme_rate: f64, rng: &mut Rng) -> String {
        let mut s = String::with_capacity(len * 7);
        for i in 0..len {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(self.token(theme, theme_rate, rng));
        }
        s
    }

    /// Document content for `url_base` (no extension) about `theme`.
    fn document(&self, url_base: &str, theme: usize, rng: &mut Rng) -> Document {
        let cfg = self.cfg;
        let title_len = rng.random_range(3..=7);
        let title = self.text(theme, title_len, 0.6, rng);
        if rng.random::<f64>() < cfg.media_rate {
            let (kind, ext) = if rng.random::<bool>() {
                (MediaKind::Image, ["jpg", "png", "gif", "svg"].choose(rng).expect("nonempty"))
            } else {
                (MediaKind::Sound, &"ogg")
            };
            return Document::new(format!("{url_base}.{ext}"), title.clone(), title, "", kind)
                .expect("generated url parses");
        }
        let body_len = rng.random_range(cfg.body_length / 2..=cfg.body_length * 3 / 2);
        let body = self.text(theme, body_len, cfg.theme_token_rate, rng);
        let snippet_len = rng.random_range(12..=20).min(body_len);
        let snippet: Vec<&str> = body.split(' ').take(snippet_len).collect();
        let r: f64 = rng.random();
        let (kind, ext) = if r < 0.7 {
            (MediaKind::Html, "html")
        } else if r < 0.85 {
            (MediaKind::Text, "txt")
        } else {
            (MediaKind::Pdf, "pdf")
        };
        Document::new(format!("{url_base}.{ext}"), title, snippet.join(" "), body, kind)
            .expect("generated url parses")
    }

    /// Shared web page `index` of `theme`, identical wherever it appears.
    fn pool_document(&self, theme: usize, index: usize) -> Document {
        let mut rng = seed::rng(self.seed, &format!("pool/{theme}/{index}"));
        let word = &self.vocab[self.themes[theme].terms[index % self.cfg.terms_per_theme]];
        let base = format!("http://site{}.example/{word}/page{index}", theme * 7 + index % 7);
        self.document(&base, theme, &mut rng)
    }
}

/// Engine-specific decoration of a shared URL; normalization undoes it.
fn decorate(url: &str, collection_id: &str, rng: &mut Rng) -> String {
    match rng.random_range(0..5) {
        0 => format!("{url}?utm_source={collection_id}"),
        1 => format!("{url}#result"),
        2 => url.replacen("http://site", "HTTP://Site", 1),
        3 => format!("{url}?sid={}", rng.random_range(1000..9999)),
        _ => url.to_string(),
    }
}

struct CollectionPlan {
    id: String,
    name: String,
    is_wse: bool,
    size: u64,
    model: RetrievalModel,
    /// Empty for broad (WSE) collections.
    focus: Vec<usize>,
}

fn stratified_sizes(cfg: &GeneratorConfig, rng: &mut Rng) -> Vec<u64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = cfg.num_collections;
    let mut sizes: Vec<u64> = (0..n)
        .map(|i| {
            let u = ((i as f64 + rng.random::<f64>()) / n as f64).clamp(1e-9, 1.0 - 1e-9);
            let z = normal.inverse_cdf(u);
            let s = (cfg.size_median.ln() + cfg.size_sigma * z).exp().round() as u64;
            s.clamp(cfg.min_size, cfg.max_size)
        })
        .collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

fn plan_collections(cfg: &GeneratorConfig, seed: u64) -> Vec<CollectionPlan> {
    let mut rng = seed::rng(seed, "collections");
    let sizes = stratified_sizes(cfg, &mut rng);
    let n = cfg.num_collections;
    let top = ((n as f64 * (1.0 - cfg.wse_size_quantile)).ceil() as usize).clamp(cfg.num_wse, n);
    let mut top_idx: Vec<usize> = (0..top).collect();
    top_idx.shuffle(&mut rng);
    let mut wse_sizes: Vec<u64> = top_idx[..cfg.num_wse].iter().map(|i| sizes[*i]).collect();
    wse_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let taken: HashSet<usize> = top_idx[..cfg.num_wse].iter().copied().collect();
    let mut other_sizes: Vec<u64> = (0..n).filter(|i| !taken.contains(i)).map(|i| sizes[i]).collect();
    other_sizes.shuffle(&mut rng);

    let mut plans = Vec::with_capacity(n);
    // WSE ids follow popularity, which tracks size.
    for (i, size) in wse_sizes.into_iter().enumerate() {
        plans.push(CollectionPlan {
            id: format!("wse{i:02}"),
            name: format!("Web Search {i}"),
            is_wse: true,
            size,
            model: RetrievalModel::QueryLikelihood,
            focus: Vec::new(),
        });
    }
    let models = [
        RetrievalModel::QueryLikelihood,
        RetrievalModel::CoordinationBoolean,
        RetrievalModel::RecencyRandom,
    ];
    // Larger sites cover more themes.
    let lo = (cfg.min_size as f64).ln();
    let span = ((other_sizes.iter().copied().max().unwrap_or(cfg.min_size) as f64).ln() - lo).max(1e-9);
    for (i, size) in other_sizes.into_iter().enumerate() {
        let f = ((size as f64).ln() - lo) / span;
        let k = (1 + ((cfg.max_focus_themes - 1) as f64 * f + rng.random::<f64>()) as usize).min(cfg.max_focus_themes);
        let mut themes: Vec<usize> = (0..cfg.num_themes).collect();
        themes.shuffle(&mut rng);
        themes.truncate(k);
        plans.push(CollectionPlan {
            id: format!("eng{i:03}"),
            name: format!("Engine {i}"),
            is_wse: false,
            size,
            model: *models.choose(&mut rng).expect("nonempty"),
            focus: themes,
        });
    }
    plans
}

fn build_collection(world: &World<'_>, plan: &CollectionPlan) -> (Collection, Vec<usize>) {
    let cfg = world.cfg;
    let mut rng = seed::rng(world.seed, &format!("collection/{}", plan.id));
    let mut used_pool: HashSet<(usize, usize)> = HashSet::new();
    let mut docs = Vec::with_capacity(plan.size as usize);
    let mut themes = Vec::with_capacity(plan.size as usize);
    for i in 0..plan.size as usize {
        let theme = if plan.focus.is_empty() || rng.random::<f64>() >= cfg.focus_rate {
            rng.random_range(0..cfg.num_themes)
        } else {
            *plan.focus.choose(&mut rng).expect("nonempty")
        };
        let mut draft = None;
        if rng.random::<f64>() < cfg.overlap_rate {
            let j = rng.random_range(0..cfg.shared_pool_size);
            if used_pool.insert((theme, j)) {
                let mut doc = world.pool_document(theme, j);
                let url = decorate(&doc.url, &plan.id, &mut rng);
                doc.url = url;
                draft = Some(DocDraft { doc, theme });
            }
        }
        let DocDraft { doc, theme } = draft.unwrap_or_else(|| {
            let word = &world.vocab[world.themes[theme].terms[i % cfg.terms_per_theme]];
            let base = format!("http://www.{}.example/{word}/d{i}", plan.id);
            DocDraft {
                doc: world.document(&base, theme, &mut rng),
                theme,
            }
        });
        docs.push(doc);
        themes.push(theme);
    }
    let collection = Collection {
        id: plan.id.clone(),
        name: plan.name.clone(),
        is_wse: plan.is_wse,
        true_size: Some(plan.size),
        retrieval_model: plan.model,
        documents: docs,
    };
    (collection, themes)
}

fn make_topics(world: &World<'_>) -> Vec<(Topic, usize)> {
    let cfg = world.cfg;
    let mut rng = seed::rng(world.seed, "topics");
    (0..cfg.num_topics)
        .map(|t| {
            let terms = &world.themes[t].terms;
            let facet_kind = if t % 2 == 0 { FacetKind::Faceted } else { FacetKind::Ambiguous };
            let n_terms = *[1usize, 1, 2, 2, 3].choose(&mut rng).expect("nonempty");
            let mut words: Vec<&str> = terms[..n_terms].iter().map(|i| world.vocab[*i].as_str()).collect();
            if facet_kind == FacetKind::Ambiguous {
                // Shares a head term with another theme so matches split between senses.
                let other = (t + 1 + rng.random_range(0..cfg.num_themes - 1)) % cfg.num_themes;
                words.push(&world.vocab[world.themes[other].terms[0]]);
            }
            let topic = Topic {
                id: format!("t{:02}", t + 1),
                query: words.join(" "),
                facet_kind,
            };
            (topic, t)
        })
        .collect()
}

fn make_refstats(world: &World<'_>) -> ReferenceCorpusStats {
    let cfg = world.cfg;
    let n_themes = cfg.num_themes as f64;
    let mut token_prob: Vec<f64> = (0..world.vocab.len())
        .map(|i| (1.0 - cfg.theme_token_rate) * world.background.prob(i))
        .collect();
    for theme in &world.themes {
        for (r, term) in theme.terms.iter().enumerate() {
            token_prob[*term] += cfg.theme_token_rate * world.theme_dist.prob(r) / n_themes;
        }
    }
    // Expected tokens per page: title + body.
    let doc_tokens = (cfg.body_length + 5) as f64;
    let total = cfg.reference_total_docs;
    let df = world
        .vocab
        .iter()
        .zip(&token_prob)
        .map(|(w, p)| {
            let present = 1.0 - (1.0 - p).powf(doc_tokens);
            (w.clone(), ((total as f64) * present).round() as u64)
        })
        .collect();
    ReferenceCorpusStats::new(total, df).expect("expected df never exceeds total")
}

fn make_query_log(world: &World<'_>) -> QueryLog {
    let mut rng = seed::rng(world.seed, "querylog");
    let mut terms: Vec<usize> = world.themes.iter().flat_map(|t| t.terms.iter().copied()).collect();
    terms.shuffle(&mut rng);
    terms.truncate(world.cfg.query_log_len);
    let entries = terms
        .into_iter()
        .enumerate()
        .map(|(r, t)| (world.vocab[t].clone(), (1_000_000 / (r as u64 + 1)).max(1)))
        .collect();
    QueryLog { entries }
}

struct Scored {
    judgment: Judgment,
    propensity: f64,
    key: String,
}

fn make_judgments(
    world: &World<'_>,
    collections: &[Collection],
    themes: &[Vec<usize>],
    topics: &[(Topic, usize)],
) -> Vec<Judgment> {
    let cfg = world.cfg;
    let engines: Vec<SearchEngine> = collections.par_iter().map(SearchEngine::new).collect();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut scored: Vec<Scored> = topics
        .par_iter()
        .flat_map_iter(|(topic, theme)| {
            let mut analyzer = Analyzer::new();
            let mut qterms = analyzer.terms(&topic.query);
            qterms.sort();
            qterms.dedup();
            let mut out = Vec::new();
            for ((c, engine), doc_themes) in collections.iter().zip(&engines).zip(themes) {
                let hits = engine.search(&mut analyzer, &topic.query, cfg.results_per_topic);
                for d in hits.docs {
                    let doc = &c.documents[d as usize];
                    let text = analyzer.terms(&format!("{} {}", doc.title, doc.body));
                    let matched = qterms.iter().filter(|q| text.contains(q)).count() as f64
                        / qterms.len().max(1) as f64;
                    let key = format!("{}\u{1}{}", topic.id, doc.normalized_url);
                    let u = seed::unit(world.seed, &format!("relevance/{key}")).clamp(1e-12, 1.0 - 1e-12);
                    let on_topic = f64::from(u8::from(doc_themes[d as usize] == *theme));
                    let propensity = 2.0 * on_topic + 0.5 * matched + 0.7 * normal.inverse_cdf(u);
                    out.push(Scored {
                        judgment: Judgment {
                            topic_id: topic.id.clone(),
                            collection_id: c.id.clone(),
                            url: doc.url.clone(),
                            normalized_url: doc.normalized_url.clone(),
                            level: RelevanceLevel::Non,
                            judge_count: 1,
                            mean_level: 0.0,
                        },
                        propensity,
                        key,
                    });
                }
            }
            out
        })
        .collect();

    // Assign levels by propensity quantile so the marginals match LEVEL_SHARES.
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|a, b| {
        scored[*b]
            .propensity
            .total_cmp(&scored[*a].propensity)
            .then_with(|| scored[*a].key.cmp(&scored[*b].key))
            .then_with(|| a.cmp(b))
    });
    let n = scored.len() as f64;
    let mut cut = [0usize; 5];
    let mut acc = 0.0;
    for (i, level) in (0..5).rev().enumerate() {
        acc += LEVEL_SHARES[level];
        cut[i] = (acc * n).round() as usize;
    }
    for (pos, idx) in order.iter().enumerate() {
        let tier = cut.iter().position(|c| pos < *c).unwrap_or(4);
        let level = RelevanceLevel::from_value((4 - tier) as u8).expect("level in range");
        let s = &mut scored[*idx];
        let mut rng = seed::rng(world.seed, &format!("judges/{}", s.key));
        let judges = rng.random_range(1..=cfg.max_judges);
        let mut sum = u32::from(level.value());
        for _ in 1..judges {
            let v = i32::from(level.value());
            let v = if rng.random::<f64>() < 0.75 {
                v
            } else if rng.random::<bool>() {
                v + 1
            } else {
                v - 1
            };
            sum += v.clamp(0, 4) as u32;
        }
        s.judgment.level = level;
        s.judgment.judge_count = judges;
        s.judgment.mean_level = f64::from(sum) / f64::from(judges);
    }
    scored.into_iter().map(|s| s.judgment).collect()
}

/// Generate a complete dataset. The result is a pure function of `(cfg, seed)`.
pub fn generate_synthetic(cfg: &GeneratorConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let world = World::new(cfg, seed);
    let plans = plan_collections(cfg, seed);
    let built: Vec<(Collection, Vec<usize>)> =
        plans.par_iter().map(|p| build_collection(&world, p)).collect();
    let (collections, themes): (Vec<Collection>, Vec<Vec<usize>>) = built.into_iter().unzip();
    let topics = make_topics(&world);
    let judgments = make_judgments(&world, &collections, &themes, &topics);
    let refstats = make_refstats(&world);
    let query_log = make_query_log(&world);
    let dataset = Dataset {
        collections,
        topics: topics.into_iter().map(|(t, _)| t).collect(),
        judgments,
        refstats,
        query_log,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Share of each level among `judgments`, Non..Nav.
pub fn level_shares(judgments: &[Judgment]) -> [f64; 5] {
    let mut counts = [0usize; 5];
    for j in judgments {
        counts[usize::from(j.level.value())] += 1;
    }
    let n = judgments.len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}
