mod common;

use std::collections::BTreeMap;

use fedsel_core::corpus::{generate_synthetic, GeneratorConfig};
use fedsel_core::sampler::{run_sampling, SamplingStrategy};
use fedsel_core::sizeest::{estimate_sizes_lenient, Estimator};

/// Over 20 seeds, a collection at least 10x larger than another should get
/// the larger estimate at least 90% of the time.
#[test]
fn estimators_order_collections_ten_times_apart() {
    let cfg = GeneratorConfig {
        num_collections: 30,
        max_size: 20_000,
        ..common::small_generator()
    };
    let mut tally: BTreeMap<Estimator, (usize, usize)> = BTreeMap::new();
    for seed in 0..20u64 {
        let d = generate_synthetic(&cfg, seed).unwrap();
        let store = run_sampling(&d, &SamplingStrategy::default(), seed).unwrap();
        let truth: BTreeMap<&str, u64> = d.collections.iter().map(|c| (c.id.as_str(), c.true_size.unwrap())).collect();
        for est in [Estimator::ClueWebI, Estimator::ClueWebII, Estimator::QueryPools] {
            let values: BTreeMap<String, f64> = estimate_sizes_lenient(&d, &store, est, seed)
                .into_iter()
                .map(|e| (e.collection_id, e.value))
                .collect();
            let e = tally.entry(est).or_default();
            for (a, va) in &values {
                for (b, vb) in &values {
                    if truth[a.as_str()] >= 10 * truth[b.as_str()] {
                        e.1 += 1;
                        if va > vb {
                            e.0 += 1;
                        }
                    }
                }
            }
        }
    }
    for (est, (right, pairs)) in tally {
        assert!(pairs > 100, "{est}: only {pairs} pairs");
        let share = right as f64 / pairs as f64;
        assert!(share >= 0.9, "{est}: {right}/{pairs} = {share:.3}");
    }
}
