use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::RankedList;
use crate::{Error, Result};

/// Write `lists` as `topic_id, rank, collection_id, score` rows (rank from 1).
pub fn write_run(path: &Path, lists: &[RankedList]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = String::from("topic_id\trank\tcollection_id\tscore\n");
    for list in lists {
        for (i, (c, s)) in list.entries.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{c}\t{s}\n", list.query_id, i + 1));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a run file; every listed collection counts as considered.
pub fn read_run(path: &Path, method: &str) -> Result<Vec<RankedList>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut by_topic: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::schema(&file, n + 1, format!("expected 4 fields, got {}", f.len())));
        }
        let rank: usize = f[1]
            .parse()
            .map_err(|_| Error::schema(&file, n + 1, "rank is not an integer"))?;
        let score: f64 = f[3]
            .parse()
            .map_err(|_| Error::schema(&file, n + 1, "score is not a number"))?;
        by_topic.entry(f[0].to_string()).or_default().push((rank, f[2].to_string(), score));
    }
    Ok(by_topic
        .into_iter()
        .map(|(topic, mut rows)| {
            rows.sort_by_key(|r| r.0);
            let entries: Vec<(String, f64)> = rows.into_iter().map(|(_, c, s)| (c, s)).collect();
            RankedList {
                query_id: topic,
                method: method.to_string(),
                considered: entries.iter().map(|(c, _)| c.clone()).collect(),
                entries,
                degenerate: false,
            }
        })
        .collect())
}
