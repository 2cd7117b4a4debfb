use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Metrics};
use crate::baseline::{train_baseline, BaselineHyper};
use crate::corpus::{grouped_kfold, Corpus, Split};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, HaConfig};
use crate::inference::{annotate_corpus, DecisionRule, DEFAULT_ROUNDS};
use crate::lspi::{train, LspiConfig};
use crate::rng::substream_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rl,
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rl => "rl",
            Method::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rl" => Ok(Method::Rl),
            "baseline" => Ok(Method::Baseline),
            _ => Err(Error::invalid("method", format!("unknown method \"{s}\" (expected rl or baseline)"))),
        }
    }
}

/// Everything a cross-validation run needs besides the corpus, method and HA window.
/// The per-fold exploration and shuffling seeds are derived from `seed`; the
/// `seed` fields inside `lspi` and `baseline` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub features: FeatureConfig,
    pub lspi: LspiConfig,
    pub baseline: BaselineHyper,
    /// Inference round budget `J`.
    pub rounds: usize,
    pub folds: usize,
    pub repeats: usize,
    /// Significance level for paired comparisons.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            features: FeatureConfig::default(),
            lspi: LspiConfig::default(),
            baseline: BaselineHyper::default(),
            rounds: DEFAULT_ROUNDS,
            folds: 10,
            repeats: 10,
            alpha: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub metrics: Metrics,
    pub converged_documents: usize,
    pub test_documents: usize,
}

/// Trains on the train side of `split`, annotates its test side and scores it.
pub fn run_fold(corpus: &Corpus, split: &Split, method: Method, ha: &HaConfig, cfg: &ExperimentConfig) -> Result<FoldResult> {
    let index = (split.repeat * cfg.folds + split.fold) as u64;
    let train_set = corpus.subset(&split.train);
    let test_set = corpus.subset(&split.test);
    let run = |rule: &(dyn DecisionRule + Sync)| annotate_corpus(rule, &test_set, cfg.rounds);
    let results = match method {
        Method::Rl => {
            let lspi = LspiConfig {
                seed: substream_seed(cfg.seed, "explore", index),
                ..cfg.lspi
            };
            run(&train(&train_set, &lspi, &cfg.features, ha)?)?
        }
        Method::Baseline => {
            let hyper = BaselineHyper {
                seed: substream_seed(cfg.seed, "baseline", index),
                ..cfg.baseline
            };
            run(&train_baseline(&train_set, &hyper, &cfg.features, ha)?)?
        }
    };

    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for (doc, result) in test_set.documents.iter().zip(&results) {
        for (position, (clause, &p)) in doc.clauses.iter().zip(&result.annotations).enumerate() {
            gold.push(clause.gold_label.ok_or_else(|| Error::MissingGold {
                document: doc.id.clone(),
                position,
            })?);
            pred.push(p);
        }
    }
    Ok(FoldResult {
        repeat: split.repeat,
        fold: split.fold,
        metrics: compute_metrics(&gold, &pred, &corpus.label_set)?,
        converged_documents: results.iter().filter(|r| r.converged).count(),
        test_documents: results.len(),
    })
}

/// Repeated grouped k-fold cross-validation; results come back in
/// (repeat, fold) order whatever the scheduling.
pub fn crossval(corpus: &Corpus, method: Method, ha: &HaConfig, cfg: &ExperimentConfig) -> Result<Vec<FoldResult>> {
    let splits = grouped_kfold(corpus, cfg.folds, cfg.repeats, cfg.seed)?;
    splits
        .par_iter()
        .map(|split| {
            run_fold(corpus, split, method, ha, cfg).map_err(|e| Error::Fold {
                repeat: split.repeat,
                fold: split.fold,
                source: Box::new(e),
            })
        })
        .collect()
}
