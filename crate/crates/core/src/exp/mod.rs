//! Experiment drivers.
//!
//! A [`Pipeline`] generates or loads a dataset, samples every collection
//! with each configured strategy, builds one sample index per
//! (strategy, mode) and estimates collection sizes. The studies in
//! [`studies`] consume it and write CSV (plus SVG for figures) under the
//! configured output directory. Every random choice derives from the master
//! seed through labelled streams, so outputs are byte-identical across runs.

mod config;
mod plot;
pub mod studies;

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;

use crate::corpus::{generate_synthetic, load_dataset, Dataset};
use crate::eval::{cross_validate, precision_at_10k, recall_at_k, EvalRow, RelevanceTable};
use crate::index::{build_index, IndexMode, SampleIndex};
use crate::sampler::{SampleStore, SamplingKind, Sampler};
use crate::select::{oracle_rank, rank, AlgoParams, CollectionFilter, Method, RankedList, SelectionInput};
use crate::sizeest::usable_sizes;
use crate::{seed, Error, Result};

pub use self::config::{ExperimentConfig, ParamGrids};
pub use self::studies::run_experiment;

/// Everything the studies share: data, samples, indexes and sizes.
pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub dataset: Dataset,
    pub stores: BTreeMap<SamplingKind, SampleStore>,
    pub indexes: BTreeMap<(SamplingKind, IndexMode), SampleIndex>,
    pub sizes: BTreeMap<String, f64>,
    pub table: RelevanceTable,
    pub popular: Vec<String>,
    /// Unfiltered oracle per topic, in topic order.
    pub oracles: Vec<RankedList>,
}

/// A method's per-topic rankings under cross-validated parameters.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub method: Method,
    /// Reported parameter setting.
    pub chosen: AlgoParams,
    /// One list per topic, ranked with the parameters of the topic's
    /// held-out fold winner.
    pub lists: Vec<RankedList>,
}

impl Pipeline {
    pub fn build(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let dataset = match &cfg.dataset {
            Some(dir) => load_dataset(dir)?,
            None => {
                info!("generating synthetic dataset (seed {})", cfg.seed);
                generate_synthetic(&cfg.generator, seed::derive(cfg.seed, "generate"))?
            }
        };
        Self::with_dataset(cfg, dataset)
    }

    pub fn with_dataset(cfg: ExperimentConfig, dataset: Dataset) -> Result<Self> {
        cfg.validate()?;
        let sampler = Sampler::new(&dataset);
        let mut kinds = cfg.strategies.clone();
        if !kinds.contains(&cfg.size_strategy) {
            kinds.push(cfg.size_strategy);
        }
        let sample_seed = seed::derive(cfg.seed, "sampling");
        let mut stores = BTreeMap::new();
        for kind in kinds {
            info!("sampling with {kind}");
            stores.insert(kind, sampler.run(&cfg.strategy(kind), sample_seed)?);
        }
        let pairs: Vec<(SamplingKind, IndexMode)> = cfg
            .strategies
            .iter()
            .flat_map(|s| cfg.modes.iter().map(move |m| (*s, *m)))
            .collect();
        let indexes = pairs
            .par_iter()
            .map(|(s, m)| Ok(((*s, *m), build_index(&stores[s], &dataset, *m)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let sizes = usable_sizes(
            &dataset,
            &stores[&cfg.size_strategy],
            cfg.size_estimator,
            seed::derive(cfg.seed, "sizes"),
        )?;
        let table = RelevanceTable::new(&dataset, cfg.criterion);
        let popular = match &cfg.popular {
            Some(p) => p.clone(),
            None => dataset.wse_ids().into_iter().take(5).collect(),
        };
        for id in &popular {
            if dataset.collection(id).is_none() {
                return Err(Error::UnknownCollection(id.clone()));
            }
        }
        let all = CollectionFilter::All.ids(&dataset);
        let oracles = dataset
            .topics
            .iter()
            .map(|t| oracle_rank(&t.id, &table.relevant_counts(&t.id), &all))
            .collect();
        Ok(Pipeline {
            cfg,
            dataset,
            stores,
            indexes,
            sizes,
            table,
            popular,
            oracles,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.dataset.topics.len()
    }

    /// Rank every topic with every grid point of `method`, then pick
    /// parameters by cross-validated recall at the tuning cutoff.
    pub fn tune(&self, method: Method, index: &SampleIndex, sizes: &BTreeMap<String, f64>) -> Result<Tuned> {
        let topics = &self.dataset.topics;
        if method == Method::Oracle {
            return Ok(Tuned {
                method,
                chosen: AlgoParams::default(),
                lists: self.oracles.clone(),
            });
        }
        let input = SelectionInput {
            index,
            sizes,
            dataset: &self.dataset,
            popular: &self.popular,
        };
        let grid = self.cfg.grids.points(method);
        let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..topics.len()).map(move |t| (g, t))).collect();
        let ranked = cells
            .par_iter()
            .map(|(g, t)| rank(method, &topics[*t].id, &topics[*t].query, &input, &grid[*g]))
            .collect::<Result<Vec<RankedList>>>()?;
        let mut lists: Vec<Vec<RankedList>> = vec![Vec::with_capacity(topics.len()); grid.len()];
        for ((g, _), l) in cells.iter().zip(ranked) {
            lists[*g].push(l);
        }
        if grid.len() == 1 {
            return Ok(Tuned {
                method,
                chosen: grid[0].clone(),
                lists: lists.pop().expect("one grid point"),
            });
        }
        let k = self.cfg.tune_k();
        let metric: Vec<Vec<f64>> = lists
            .iter()
            .map(|ls| {
                ls.iter()
                    .zip(&self.oracles)
                    .map(|(l, o)| recall_at_k(l, o, &self.table, k).value)
                    .collect()
            })
            .collect();
        let folds = self.cfg.folds.min(topics.len()).max(1);
        let cv = cross_validate(&metric, folds, seed::derive(self.cfg.seed, "cross-validation"))?;
        let per_topic = (0..topics.len()).map(|t| lists[cv.winner_for(t)][t].clone()).collect();
        Ok(Tuned {
            method,
            chosen: grid[cv.chosen].clone(),
            lists: per_topic,
        })
    }

    /// Per-topic rows for `lists` under `filter` at every configured cutoff.
    pub fn evaluate(
        &self,
        lists: &[RankedList],
        method: Method,
        strategy: &str,
        mode: &str,
        filter: CollectionFilter,
    ) -> Vec<EvalRow> {
        let allowed = filter.ids(&self.dataset);
        let mut rows = Vec::new();
        for (list, topic) in lists.iter().zip(&self.dataset.topics) {
            let run = list.restrict(&allowed);
            let oracle = oracle_rank(&topic.id, &self.table.relevant_counts(&topic.id), &allowed);
            for k in &self.cfg.ks {
                let r = recall_at_k(&run, &oracle, &self.table, *k);
                rows.push(EvalRow {
                    topic_id: topic.id.clone(),
                    method: method.as_str().to_string(),
                    strategy: strategy.to_string(),
                    mode: mode.to_string(),
                    filter: filter.as_str().to_string(),
                    k: *k,
                    recall: r.value,
                    precision: precision_at_10k(&run, &self.table, *k),
                    degenerate: r.degenerate,
                });
            }
        }
        rows
    }

    /// Mean recall at `k` over topics whose oracle finds relevant documents.
    pub fn mean_recall(&self, lists: &[RankedList], k: usize) -> f64 {
        let vals: Vec<f64> = lists
            .iter()
            .zip(&self.oracles)
            .map(|(l, o)| recall_at_k(l, o, &self.table, k))
            .filter(|r| !r.degenerate)
            .map(|r| r.value)
            .collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    }
}
