//! `samples/<strategy>/<collection_id>.jsonl` persistence.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SampleRecord, SampleStore, SamplingKind};
use crate::corpus::Dataset;
use crate::{Error, Result};

const STORE_META: &str = "_store.json";

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    kind: SamplingKind,
    results_per_query: usize,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    slot: usize,
    query: String,
    num_results: usize,
    full_page: bool,
    returned: Vec<String>,
}

/// Write `store` under `root/<strategy>/`.
pub fn write_samples(root: &Path, store: &SampleStore, dataset: &Dataset) -> Result<()> {
    let dir = root.join(store.kind.as_str());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let meta = StoreMeta {
        kind: store.kind,
        results_per_query: store.results_per_query,
    };
    let meta_path = dir.join(STORE_META);
    fs::write(&meta_path, serde_json::to_string(&meta).expect("meta serializes"))
        .map_err(|e| Error::io(&meta_path, e))?;
    for (cid, records) in &store.records {
        let c = dataset
            .collection(cid)
            .ok_or_else(|| Error::UnknownCollection(cid.clone()))?;
        let path = dir.join(format!("{cid}.jsonl"));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for r in records {
            let line = RecordLine {
                slot: r.slot,
                query: r.query.clone(),
                num_results: r.num_results,
                full_page: r.full_page,
                returned: r
                    .returned
                    .iter()
                    .map(|d| c.documents[*d as usize].url.clone())
                    .collect(),
            };
            serde_json::to_writer(&mut w, &line).expect("record serializes");
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Read the store for `kind` from `root/<strategy>/`, resolving URLs against `dataset`.
pub fn load_samples(root: &Path, kind: SamplingKind, dataset: &Dataset) -> Result<SampleStore> {
    let dir = root.join(kind.as_str());
    let meta_path = dir.join(STORE_META);
    let meta: StoreMeta = {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::schema(meta_path.display().to_string(), 1, e.to_string()))?
    };
    let mut records = BTreeMap::new();
    for c in &dataset.collections {
        let path = dir.join(format!("{}.jsonl", c.id));
        if !path.exists() {
            continue;
        }
        let by_url: HashMap<&str, u32> = c
            .documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.url.as_str(), i as u32))
            .collect();
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let name = path.display().to_string();
        let mut recs = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine =
                serde_json::from_str(&line).map_err(|e| Error::schema(&name, n + 1, e.to_string()))?;
            let returned = rec
                .returned
                .iter()
                .map(|u| {
                    by_url.get(u.as_str()).copied().ok_or_else(|| {
                        Error::schema(&name, n + 1, format!("returned url {u} not in collection {}", c.id))
                    })
                })
                .collect::<Result<Vec<u32>>>()?;
            recs.push(SampleRecord {
                slot: rec.slot,
                query: rec.query,
                returned,
                num_results: rec.num_results,
                full_page: rec.full_page,
            });
        }
        records.insert(c.id.clone(), recs);
    }
    let store = SampleStore {
        kind: meta.kind,
        results_per_query: meta.results_per_query,
        records,
    };
    store.validate(dataset)?;
    Ok(store)
}
