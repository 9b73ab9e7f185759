use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fedsel_core::corpus::{generate_synthetic, load_dataset, write_dataset, Dataset, RelevanceCriterion};
use fedsel_core::eval::{precision_at_10k, recall_at_k, write_eval_csv, write_summary_csv, EvalRow, RelevanceTable};
use fedsel_core::exp::studies::{write_size_distribution, EXPERIMENTS};
use fedsel_core::exp::{run_experiment, ExperimentConfig, Pipeline};
use fedsel_core::index::{build_index, IndexMode};
use fedsel_core::sampler::{load_samples, run_sampling, write_samples, SamplingKind};
use fedsel_core::select::{
    oracle_rank, rank, read_run, write_run, AlgoParams, CollectionFilter, Method, RankedList,
    SelectionInput,
};
use fedsel_core::sizeest::{estimate_sizes, load_sizes, usable_sizes, write_sizes, Estimator};
use fedsel_core::seed;

#[derive(Parser)]
#[command(name = "fedsel", version, about = "Resource selection experiments for federated web search")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Generate,
    /// Run query-based sampling against every engine of the dataset.
    Sample {
        #[arg(long, default_value = "zipf")]
        strategy: SamplingKind,
    },
    /// Build the sample index and write its df/cw/cf tables.
    Index(IndexArgs),
    /// Same as `index`.
    Stats(IndexArgs),
    /// Estimate collection sizes from a sample store.
    EstimateSize {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value = "zipf")]
        strategy: SamplingKind,
        #[arg(long, default_value = "clueweb1")]
        estimator: Estimator,
    },
    /// Rank collections for every topic with one method.
    Select {
        #[command(flatten)]
        index: IndexArgs,
        #[arg(long)]
        method: Method,
        /// Size estimates (TSV); computed from the samples when absent.
        #[arg(long)]
        sizes: Option<PathBuf>,
        #[arg(long, default_value = "clueweb1")]
        estimator: Estimator,
    },
    /// Score a run file against the oracle.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "all")]
        filter: CollectionFilter,
        #[arg(long)]
        criterion: Option<RelevanceCriterion>,
    },
    /// Run one study, or `all`.
    Experiment { name: String },
    /// Size distribution plots and tables from a size estimate file.
    Report {
        #[arg(long)]
        sizes: PathBuf,
    },
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value = "zipf")]
    strategy: SamplingKind,
    #[arg(long, default_value = "pages")]
    mode: IndexMode,
}

fn config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(d) = &g.data {
        cfg.dataset = Some(d.clone());
    }
    if let Some(o) = &g.out {
        cfg.output = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dataset(g: &Global) -> Result<Dataset> {
    let dir = g.data.as_deref().context("--data <dir> is required")?;
    Ok(load_dataset(dir)?)
}

fn out(g: &Global) -> Result<&Path> {
    g.out.as_deref().context("--out is required")
}

fn sizes_for(
    cfg: &ExperimentConfig,
    d: &Dataset,
    store: &fedsel_core::sampler::SampleStore,
    file: Option<&Path>,
    est: Estimator,
) -> Result<BTreeMap<String, f64>> {
    match file {
        Some(p) => {
            let all = load_sizes(p)?;
            let picked: BTreeMap<String, f64> = all
                .into_iter()
                .filter(|e| e.estimator == est)
                .map(|e| (e.collection_id, e.value.max(1.0)))
                .collect();
            if picked.is_empty() {
                bail!("{} holds no {est} estimates", p.display());
            }
            Ok(picked)
        }
        None => Ok(usable_sizes(d, store, est, seed::derive(cfg.seed, "sizes"))?),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Generate => {
            let cfg = config(g)?;
            let d = generate_synthetic(&cfg.generator, seed::derive(cfg.seed, "generate"))?;
            write_dataset(&d, out(g)?)?;
        }
        Command::Sample { strategy } => {
            let cfg = config(g)?;
            let d = dataset(g)?;
            let store = run_sampling(&d, &cfg.strategy(*strategy), seed::derive(cfg.seed, "sampling"))?;
            write_samples(out(g)?, &store, &d)?;
        }
        Command::Index(a) | Command::Stats(a) => {
            let d = dataset(g)?;
            let store = load_samples(&a.samples, a.strategy, &d)?;
            build_index(&store, &d, a.mode)?.write_stats(out(g)?)?;
        }
        Command::EstimateSize {
            samples,
            strategy,
            estimator,
        } => {
            let cfg = config(g)?;
            let d = dataset(g)?;
            let store = load_samples(samples, *strategy, &d)?;
            let est = estimate_sizes(&d, &store, *estimator, seed::derive(cfg.seed, "sizes"))?;
            write_sizes(out(g)?, &est)?;
        }
        Command::Select {
            index,
            method,
            sizes,
            estimator,
        } => {
            let cfg = config(g)?;
            let d = dataset(g)?;
            let store = load_samples(&index.samples, index.strategy, &d)?;
            let idx = build_index(&store, &d, index.mode)?;
            let sizes = sizes_for(&cfg, &d, &store, sizes.as_deref(), *estimator)?;
            let popular = cfg.popular.clone().unwrap_or_else(|| d.wse_ids().into_iter().take(5).collect());
            let params = AlgoParams::default();
            let lists = if *method == Method::Oracle {
                let table = RelevanceTable::new(&d, cfg.criterion);
                let ids = CollectionFilter::All.ids(&d);
                d.topics
                    .iter()
                    .map(|t| oracle_rank(&t.id, &table.relevant_counts(&t.id), &ids))
                    .collect()
            } else {
                let input = SelectionInput {
                    index: &idx,
                    sizes: &sizes,
                    dataset: &d,
                    popular: &popular,
                };
                d.topics
                    .iter()
                    .map(|t| rank(*method, &t.id, &t.query, &input, &params))
                    .collect::<fedsel_core::Result<Vec<_>>>()?
            };
            write_run(out(g)?, &lists)?;
        }
        Command::Evaluate {
            run,
            method,
            filter,
            criterion,
        } => {
            let cfg = config(g)?;
            let d = dataset(g)?;
            let table = RelevanceTable::new(&d, criterion.unwrap_or(cfg.criterion));
            let mut lists: BTreeMap<String, RankedList> =
                read_run(run, method.as_str())?.into_iter().map(|l| (l.query_id.clone(), l)).collect();
            let ids = filter.ids(&d);
            let mut rows = Vec::new();
            // Topics missing from the run count as empty rankings.
            for t in &d.topics {
                let l = lists
                    .remove(&t.id)
                    .unwrap_or_else(|| RankedList::from_scores(&t.id, method.as_str(), [], Default::default()));
                let counts = table.relevant_counts(&t.id);
                let oracle = oracle_rank(&t.id, &counts, &ids);
                let l = l.restrict(&ids);
                for k in &cfg.ks {
                    let r = recall_at_k(&l, &oracle, &table, *k);
                    rows.push(EvalRow {
                        topic_id: l.query_id.clone(),
                        method: method.to_string(),
                        strategy: "-".into(),
                        mode: "-".into(),
                        filter: filter.to_string(),
                        k: *k,
                        recall: r.value,
                        precision: precision_at_10k(&l, &table, *k),
                        degenerate: r.degenerate,
                    });
                }
            }
            if let Some(extra) = lists.keys().next() {
                bail!("{} names topic `{extra}`, which the dataset does not have", run.display());
            }
            let dir = out(g)?;
            write_eval_csv(&dir.join("eval.csv"), &rows)?;
            write_summary_csv(&dir.join("summary.csv"), &rows)?;
        }
        Command::Experiment { name } => {
            if name != "all" && !EXPERIMENTS.contains(&name.as_str()) {
                bail!("unknown experiment `{name}`; expected one of {} or all", EXPERIMENTS.join(", "));
            }
            let cfg = config(g)?;
            fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
            let p = Pipeline::build(cfg)?;
            run_experiment(name, &p)?;
        }
        Command::Report { sizes } => {
            let est = load_sizes(sizes)?;
            write_size_distribution(out(g)?, &est)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
