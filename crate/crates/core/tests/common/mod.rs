#![allow(dead_code)]

use std::path::Path;

use fedsel_core::corpus::GeneratorConfig;
use fedsel_core::exp::ExperimentConfig;
use fedsel_core::sampler::SamplingStrategy;

pub fn small_generator() -> GeneratorConfig {
    GeneratorConfig {
        num_collections: 24,
        num_wse: 4,
        num_topics: 10,
        num_themes: 30,
        vocabulary_size: 8000,
        terms_per_theme: 15,
        size_median: 80.0,
        size_sigma: 1.5,
        max_size: 3000,
        ..GeneratorConfig::default()
    }
}

pub fn small_config(seed: u64, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        generator: small_generator(),
        sampling: SamplingStrategy {
            query_budget: 60,
            full_page_queries: 15,
            ..SamplingStrategy::default()
        },
        popular: None,
        folds: 2,
        subset_step: 2,
        subset_resamples: 4,
        output: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}
