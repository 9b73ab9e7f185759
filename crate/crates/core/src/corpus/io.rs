//! Dataset directory layout:
//!
//! - `collections.jsonl`: one collection per line
//! - `topics.tsv`: `id`, `facet_kind`, `query`
//! - `judgments.tsv`: `topic_id`, `collection_id`, `url`, `level`, `judge_count`, `mean_level`
//! - `refstats.tsv`: `total_docs=<N>` then `term<TAB>df` rows
//! - `querylog.tsv` (optional): `query`, `frequency`

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    normalize_url, Collection, Dataset, Document, FacetKind, Judgment, MediaKind,
    ReferenceCorpusStats, RelevanceLevel, RetrievalModel, Topic,
};
use crate::sampler::{query_log_from_refstats, QueryLog};
use crate::{Error, Result};

pub const COLLECTIONS_FILE: &str = "collections.jsonl";
pub const TOPICS_FILE: &str = "topics.tsv";
pub const JUDGMENTS_FILE: &str = "judgments.tsv";
pub const REFSTATS_FILE: &str = "refstats.tsv";
pub const QUERYLOG_FILE: &str = "querylog.tsv";

#[derive(Serialize, Deserialize)]
struct DocLine {
    url: String,
    title: String,
    snippet: String,
    body: String,
    media_kind: MediaKind,
}

#[derive(Serialize, Deserialize)]
struct CollectionLine {
    id: String,
    name: String,
    is_wse: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_size: Option<u64>,
    #[serde(default)]
    retrieval_model: RetrievalModel,
    docs: Vec<DocLine>,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `dataset` into directory `dir` (created if missing).
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(COLLECTIONS_FILE);
    let mut w = create(&path)?;
    for c in &dataset.collections {
        let line = CollectionLine {
            id: c.id.clone(),
            name: c.name.clone(),
            is_wse: c.is_wse,
            true_size: c.true_size,
            retrieval_model: c.retrieval_model,
            docs: c
                .documents
                .iter()
                .map(|d| DocLine {
                    url: d.url.clone(),
                    title: d.title.clone(),
                    snippet: d.snippet.clone(),
                    body: d.body.clone(),
                    media_kind: d.media_kind,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &line).expect("collection serializes");
        writeln!(w).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(TOPICS_FILE);
    let mut w = create(&path)?;
    let mut out = String::from("id\tfacet_kind\tquery\n");
    for t in &dataset.topics {
        out.push_str(&format!("{}\t{}\t{}\n", t.id, t.facet_kind.as_str(), t.query));
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(JUDGMENTS_FILE);
    let mut w = create(&path)?;
    writeln!(w, "topic_id\tcollection_id\turl\tlevel\tjudge_count\tmean_level")
        .map_err(|e| Error::io(&path, e))?;
    for j in &dataset.judgments {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            j.topic_id, j.collection_id, j.url, j.level, j.judge_count, j.mean_level
        )
        .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(REFSTATS_FILE);
    let mut w = create(&path)?;
    writeln!(w, "total_docs={}", dataset.refstats.total_docs).map_err(|e| Error::io(&path, e))?;
    for (term, df) in &dataset.refstats.df {
        writeln!(w, "{term}\t{df}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(QUERYLOG_FILE);
    let mut w = create(&path)?;
    writeln!(w, "query\tfrequency").map_err(|e| Error::io(&path, e))?;
    for (q, f) in &dataset.query_log.entries {
        writeln!(w, "{q}\t{f}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Header-indexed TSV reader that reports file, line and column on failure.
struct Tsv<'a> {
    file: String,
    columns: Vec<&'a str>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> Tsv<'a> {
    fn parse(file: &Path, text: &'a str, required: &[&str]) -> Result<Self> {
        let name = file.display().to_string();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::schema(&name, 1, "missing header line"))?;
        let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
        for r in required {
            if !columns.contains(r) {
                return Err(Error::schema(&name, 1, format!("missing required column `{r}`")));
            }
        }
        let rows = lines
            .map(|(n, l)| (n + 1, l.split('\t').collect()))
            .collect();
        Ok(Tsv {
            file: name,
            columns,
            rows,
        })
    }

    fn field(&self, line: usize, row: &[&'a str], column: &str) -> Result<&'a str> {
        let i = self
            .columns
            .iter()
            .position(|c| *c == column)
            .expect("required column checked at parse");
        row.get(i)
            .copied()
            .ok_or_else(|| Error::schema(&self.file, line, format!("missing value for `{column}`")))
    }

    fn parsed<T: std::str::FromStr>(&self, line: usize, row: &[&'a str], column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.field(line, row, column)?;
        raw.trim().parse().map_err(|e: T::Err| {
            Error::schema(&self.file, line, format!("field `{column}`: cannot parse {raw:?}: {e}"))
        })
    }
}

fn load_collections(path: &Path) -> Result<Vec<Collection>> {
    let text = read(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: CollectionLine =
            serde_json::from_str(line).map_err(|e| Error::schema(&name, n + 1, e.to_string()))?;
        let documents = c
            .docs
            .into_iter()
            .map(|d| Document::new(d.url, d.title, d.snippet, d.body, d.media_kind))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::schema(&name, n + 1, e.to_string()))?;
        out.push(Collection {
            id: c.id,
            name: c.name,
            is_wse: c.is_wse,
            true_size: c.true_size,
            retrieval_model: c.retrieval_model,
            documents,
        });
    }
    Ok(out)
}

fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let text = read(path)?;
    let tsv = Tsv::parse(path, &text, &["id", "facet_kind", "query"])?;
    tsv.rows
        .iter()
        .map(|(n, row)| {
            let facet_kind: FacetKind = tsv.parsed(*n, row, "facet_kind")?;
            let query = tsv.field(*n, row, "query")?.trim().to_string();
            if query.is_empty() {
                return Err(Error::schema(&tsv.file, *n, "field `query` is empty"));
            }
            Ok(Topic {
                id: tsv.field(*n, row, "id")?.trim().to_string(),
                query,
                facet_kind,
            })
        })
        .collect()
}

fn load_judgments(path: &Path) -> Result<Vec<Judgment>> {
    let text = read(path)?;
    let tsv = Tsv::parse(
        path,
        &text,
        &["topic_id", "collection_id", "url", "level", "judge_count", "mean_level"],
    )?;
    tsv.rows
        .iter()
        .map(|(n, row)| {
            let url = tsv.field(*n, row, "url")?.trim().to_string();
            let normalized_url =
                normalize_url(&url).map_err(|e| Error::schema(&tsv.file, *n, e.to_string()))?;
            let level: RelevanceLevel = tsv.parsed(*n, row, "level")?;
            let judge_count: u32 = tsv.parsed(*n, row, "judge_count")?;
            if judge_count == 0 {
                return Err(Error::schema(&tsv.file, *n, "field `judge_count` must be >= 1"));
            }
            let mean_level: f64 = tsv.parsed(*n, row, "mean_level")?;
            if !(0.0..=4.0).contains(&mean_level) {
                return Err(Error::schema(
                    &tsv.file,
                    *n,
                    format!("field `mean_level` {mean_level} outside [0, 4]"),
                ));
            }
            Ok(Judgment {
                topic_id: tsv.field(*n, row, "topic_id")?.trim().to_string(),
                collection_id: tsv.field(*n, row, "collection_id")?.trim().to_string(),
                url,
                normalized_url,
                level,
                judge_count,
                mean_level,
            })
        })
        .collect()
}

fn load_refstats(path: &Path) -> Result<ReferenceCorpusStats> {
    let text = read(path)?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::schema(&name, 1, "missing `total_docs=` header"))?;
    let total_docs: u64 = header
        .trim()
        .strip_prefix("total_docs=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::schema(&name, 1, format!("expected `total_docs=<N>`, got {header:?}")))?;
    let mut df = BTreeMap::new();
    for (n, line) in lines {
        let (term, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::schema(&name, n + 1, "expected `term<TAB>df`"))?;
        let v: u64 = value
            .trim()
            .parse()
            .map_err(|_| Error::schema(&name, n + 1, format!("field `df`: cannot parse {value:?}")))?;
        if v > total_docs {
            return Err(Error::schema(&name, n + 1, format!("df {v} exceeds total_docs {total_docs}")));
        }
        df.insert(term.to_string(), v);
    }
    ReferenceCorpusStats::new(total_docs, df).map_err(|e| Error::schema(&name, 1, e.to_string()))
}

fn load_query_log(path: &Path) -> Result<QueryLog> {
    let text = read(path)?;
    let tsv = Tsv::parse(path, &text, &["query", "frequency"])?;
    let entries = tsv
        .rows
        .iter()
        .map(|(n, row)| Ok((tsv.field(*n, row, "query")?.to_string(), tsv.parsed(*n, row, "frequency")?)))
        .collect::<Result<Vec<_>>>()?;
    QueryLog::new(entries).map_err(|e| Error::schema(&tsv.file, 1, e.to_string()))
}

/// Load and validate a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let collections = load_collections(&dir.join(COLLECTIONS_FILE))?;
    let topics = load_topics(&dir.join(TOPICS_FILE))?;
    let judgments = load_judgments(&dir.join(JUDGMENTS_FILE))?;
    let refstats = load_refstats(&dir.join(REFSTATS_FILE))?;
    let qlog_path = dir.join(QUERYLOG_FILE);
    let query_log = if qlog_path.exists() {
        load_query_log(&qlog_path)?
    } else {
        query_log_from_refstats(&refstats, 1000)
    };
    let dataset = Dataset {
        collections,
        topics,
        judgments,
        refstats,
        query_log,
    };
    dataset.validate()?;
    Ok(dataset)
}
