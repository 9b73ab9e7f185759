mod common;

use std::collections::BTreeSet;
use std::fs;

use fedsel_core::corpus::{load_dataset, write_dataset};
use fedsel_core::eval::recall_at_k;
use fedsel_core::exp::studies::{
    run_benchmark, run_coverage, run_oracle_study, run_robustness, run_sampling_sweep, run_size_correlation,
    run_size_distribution,
};
use fedsel_core::exp::Pipeline;
use fedsel_core::index::IndexMode;
use fedsel_core::sampler::{load_samples, write_samples, SamplingKind};
use fedsel_core::select::{read_run, Method};
use fedsel_core::sizeest::Estimator;

fn pipeline(seed: u64, out: &std::path::Path) -> Pipeline {
    Pipeline::build(common::small_config(seed, out)).unwrap()
}

#[test]
fn dataset_and_samples_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let p = pipeline(3, tmp.path());
    let data = tmp.path().join("data");
    write_dataset(&p.dataset, &data).unwrap();
    assert_eq!(load_dataset(&data).unwrap(), p.dataset);
    let samples = tmp.path().join("samples");
    for (kind, store) in &p.stores {
        write_samples(&samples, store, &p.dataset).unwrap();
        assert_eq!(&load_samples(&samples, *kind, &p.dataset).unwrap(), store);
    }
}

#[test]
fn benchmark_contracts() {
    let tmp = tempfile::tempdir().unwrap();
    let p = pipeline(5, tmp.path());
    let bench = run_benchmark(&p).unwrap();
    let cfg = &p.cfg;
    let runs = cfg.methods.len() * cfg.strategies.len() * cfg.modes.len();
    assert_eq!(bench.tuned.len(), runs);
    assert_eq!(bench.rows.len(), runs * cfg.filters.len() * cfg.ks.len() * p.num_topics());

    let summary = fs::read_to_string(tmp.path().join("benchmark/summary.csv")).unwrap();
    assert_eq!(summary.lines().count() - 1, runs * cfg.filters.len() * cfg.ks.len());

    // The oracle is a per-topic ceiling.
    for ((m, s, md), t) in &bench.tuned {
        for (i, list) in t.lists.iter().enumerate() {
            let r = recall_at_k(list, &p.oracles[i], &p.table, 5);
            assert!(r.value <= 1.0, "{m}/{s}/{md} topic {i}: {}", r.value);
        }
        if *m == Method::Oracle {
            assert!(t.lists.iter().zip(&p.oracles).all(|(a, b)| a == b));
        }
    }

    // Sampling-independent baselines.
    for m in [Method::Popular, Method::Sb2] {
        let lists: Vec<_> = bench.tuned.iter().filter(|(k, _)| k.0 == m).map(|(_, t)| t.lists.clone()).collect();
        assert!(lists.windows(2).all(|w| w[0] == w[1]), "{m} varies with sampling");
    }
    let sb2 = &bench.tuned[&(Method::Sb2, SamplingKind::Zipf, IndexMode::Pages)];
    let orders: BTreeSet<Vec<&str>> = sb2.lists.iter().map(|l| l.ids().collect()).collect();
    assert_eq!(orders.len(), 1);

    // Run files on disk match the tuned lists.
    let path = tmp.path().join("benchmark/runs/redde_zipf_pages.tsv");
    let back = read_run(&path, "redde").unwrap();
    let lists = &bench.tuned[&(Method::Redde, SamplingKind::Zipf, IndexMode::Pages)].lists;
    for (a, b) in back.iter().zip(lists) {
        assert_eq!(a.ids().collect::<Vec<_>>(), b.ids().collect::<Vec<_>>());
    }
}

#[test]
fn studies_agree_with_each_other() {
    let tmp = tempfile::tempdir().unwrap();
    let p = pipeline(7, tmp.path());
    let bench = run_benchmark(&p).unwrap();

    let corr = run_size_correlation(&p, &bench).unwrap();
    assert_eq!(corr.tau(Method::Sb1), Some(1.0));

    let sweep = run_sampling_sweep(&p).unwrap();
    let k = p.cfg.tune_k();
    for s in &p.cfg.strategies {
        for m in &p.cfg.sweep_methods {
            assert_eq!(
                sweep.points.iter().filter(|x| x.method == *m && x.strategy == *s).count(),
                p.cfg.sweep_fractions.len()
            );
            let full = sweep.recall(*m, *s, 1.0).unwrap();
            let bench_value = p.mean_recall(&bench.tuned[&(*m, *s, IndexMode::Snippets)].lists, k);
            assert_eq!(full, bench_value, "{m}/{s}");
        }
    }

    let rob = run_robustness(&p, &bench).unwrap();
    assert_eq!(rob.curve.last().unwrap(), &(rob.topics, 1.0));
    if let Some(a) = rob.alpha {
        assert!(a <= 1.0);
    }

    let dist = run_size_distribution(&p).unwrap();
    for (est, v) in &dist.sorted {
        assert!(v.windows(2).all(|w| w[0].1 >= w[1].1), "{est} not sorted");
        if *est == Estimator::TrueSize {
            assert_eq!(v.len(), p.dataset.collections.len());
        }
    }
    let top5 = fs::read_to_string(tmp.path().join("size-distribution/top5.csv")).unwrap();
    assert_eq!(top5.lines().count() - 1, 5 * dist.sorted.len());

    let oracle = run_oracle_study(&p).unwrap();
    assert_eq!(oracle.rows.len(), 3 * 2 * 2 * 3);
    assert!(oracle.rows.iter().all(|r| (0.0..=1.0).contains(&r.recall)));

    let cov = run_coverage(&p).unwrap();
    assert_eq!(cov.len(), p.indexes.len());
    assert!(cov.iter().all(|(_, _, c)| (0.0..=1.0).contains(&c.avg_total)));
}

#[test]
fn benchmark_outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_benchmark(&pipeline(11, a.path())).unwrap();
    run_benchmark(&pipeline(11, b.path())).unwrap();
    for f in ["eval.csv", "summary.csv", "params.csv"] {
        let x = fs::read(a.path().join("benchmark").join(f)).unwrap();
        let y = fs::read(b.path().join("benchmark").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}
