use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{GeneratorConfig, RelevanceCriterion};
use crate::index::IndexMode;
use crate::sampler::{SamplingKind, SamplingStrategy};
use crate::select::{AlgoParams, CollectionFilter, Method};
use crate::sizeest::Estimator;
use crate::{Error, Result};

/// Candidate values tuned by cross-validation. Parameters a method does not
/// use are left at their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamGrids {
    pub cori_b: Vec<f64>,
    pub lm_lambda: Vec<f64>,
    pub redde_ratio: Vec<f64>,
    pub gavg_k: Vec<usize>,
    pub gavg_mu: Vec<f64>,
    pub crcs_k: Vec<usize>,
    pub crcs_alpha: Vec<f64>,
    pub crcs_beta: Vec<f64>,
    pub rank_mu: f64,
}

impl Default for ParamGrids {
    fn default() -> Self {
        ParamGrids {
            cori_b: vec![0.2, 0.3, 0.4, 0.5, 0.6],
            lm_lambda: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            redde_ratio: vec![0.002, 0.003, 0.004, 0.005],
            gavg_k: vec![1, 3, 5, 10],
            gavg_mu: vec![100.0, 1000.0, 2500.0],
            crcs_k: vec![10, 20, 50, 100],
            crcs_alpha: vec![1.2],
            crcs_beta: vec![0.1, 0.28, 0.5],
            rank_mu: 1000.0,
        }
    }
}

impl ParamGrids {
    /// Grid points for `method`, in a fixed order.
    pub fn points(&self, method: Method) -> Vec<AlgoParams> {
        let base = AlgoParams {
            rank_mu: self.rank_mu,
            ..AlgoParams::default()
        };
        let mut out = Vec::new();
        match method {
            Method::Cori => out.extend(self.cori_b.iter().map(|b| AlgoParams { cori_b: *b, ..base.clone() })),
            Method::Lm => out.extend(self.lm_lambda.iter().map(|l| AlgoParams { lm_lambda: *l, ..base.clone() })),
            Method::Redde => out.extend(self.redde_ratio.iter().map(|r| AlgoParams { redde_ratio: *r, ..base.clone() })),
            Method::Gavg => {
                for k in &self.gavg_k {
                    for mu in &self.gavg_mu {
                        out.push(AlgoParams { gavg_k: *k, gavg_mu: *mu, ..base.clone() });
                    }
                }
            }
            Method::Crcs => out.extend(self.crcs_k.iter().map(|k| AlgoParams { crcs_k: *k, ..base.clone() })),
            Method::CrcsExp => {
                for k in &self.crcs_k {
                    for a in &self.crcs_alpha {
                        for b in &self.crcs_beta {
                            out.push(AlgoParams {
                                crcs_k: *k,
                                crcs_alpha: *a,
                                crcs_beta: *b,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
            Method::Sb1 | Method::Sb2 | Method::Popular | Method::Oracle => {}
        }
        if out.is_empty() {
            out.push(base);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Load this dataset directory instead of generating one.
    pub dataset: Option<PathBuf>,
    pub generator: GeneratorConfig,
    pub sampling: SamplingStrategy,
    pub strategies: Vec<SamplingKind>,
    pub modes: Vec<IndexMode>,
    pub methods: Vec<Method>,
    pub grids: ParamGrids,
    pub criterion: RelevanceCriterion,
    /// Cutoffs reported by the benchmark; the first is the tuning target.
    pub ks: Vec<usize>,
    pub filters: Vec<CollectionFilter>,
    pub folds: usize,
    pub size_estimator: Estimator,
    /// Samples the size estimates are computed from.
    pub size_strategy: SamplingKind,
    /// Popularity-ordered engine ids; defaults to the first five WSEs.
    pub popular: Option<Vec<String>>,
    pub sweep_fractions: Vec<f64>,
    pub sweep_methods: Vec<Method>,
    pub subset_step: usize,
    pub subset_resamples: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            dataset: None,
            generator: GeneratorConfig::default(),
            sampling: SamplingStrategy::default(),
            strategies: SamplingKind::ALL.to_vec(),
            modes: IndexMode::ALL.to_vec(),
            methods: vec![
                Method::Popular,
                Method::Sb1,
                Method::Sb2,
                Method::Cori,
                Method::Lm,
                Method::Redde,
                Method::Gavg,
                Method::Crcs,
                Method::Oracle,
            ],
            grids: ParamGrids::default(),
            criterion: RelevanceCriterion::default(),
            ks: vec![5, 10],
            filters: vec![CollectionFilter::All],
            folds: 5,
            size_estimator: Estimator::ClueWebI,
            size_strategy: SamplingKind::Zipf,
            popular: None,
            sweep_fractions: vec![0.25, 0.5, 0.75, 1.0],
            sweep_methods: vec![Method::Redde, Method::Gavg],
            subset_step: 5,
            subset_resamples: 10,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.strategies.is_empty() || self.modes.is_empty() || self.methods.is_empty() {
            return fail("strategies, modes and methods must be non-empty");
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return fail("ks must be non-empty and >= 1");
        }
        if self.filters.is_empty() {
            return fail("filters must be non-empty");
        }
        if self.folds == 0 {
            return fail("folds must be >= 1");
        }
        if self.sweep_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return fail("sweep fractions must lie in (0, 1]");
        }
        if self.subset_step == 0 || self.subset_resamples == 0 {
            return fail("subset_step and subset_resamples must be >= 1");
        }
        if self.sweep_methods.contains(&Method::Oracle) {
            return fail("the oracle cannot be swept");
        }
        self.sampling.validate()?;
        if self.dataset.is_none() {
            self.generator.validate()?;
        }
        for m in &self.methods {
            for p in self.grids.points(*m) {
                p.validate()?;
            }
        }
        Ok(())
    }

    /// Tuning cutoff.
    pub fn tune_k(&self) -> usize {
        self.ks[0]
    }

    pub fn strategy(&self, kind: SamplingKind) -> SamplingStrategy {
        SamplingStrategy {
            kind,
            ..self.sampling.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_toml() {
        let cfg = ExperimentConfig::from_toml_str(
            "seed = 7\nstrategies = [\"zipf\"]\n[generator]\nnum_topics = 10\n[grids]\nredde_ratio = [0.004]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.strategies, vec![SamplingKind::Zipf]);
        assert_eq!(cfg.generator.num_topics, 10);
        assert_eq!(cfg.grids.points(Method::Redde).len(), 1);
        assert_eq!(cfg.modes, IndexMode::ALL.to_vec());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml_str("sed = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[generator]\noverlap_rate = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("sweep_fractions = [0.0]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[grids]\ncori_b = [1.5]\n").is_err());
    }

    #[test]
    fn grid_sizes() {
        let g = ParamGrids::default();
        assert_eq!(g.points(Method::Gavg).len(), 12);
        assert_eq!(g.points(Method::Sb1).len(), 1);
        assert_eq!(g.points(Method::CrcsExp).len(), 12);
    }
}
