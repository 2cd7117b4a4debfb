use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{policy_iteration, LinearQ, LstdqSystem, Policy};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, Featurizer, HaConfig};
use crate::mdp::{run_episode, AnnotationEnv, Rewards};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            initial: 0.3,
            decay: 0.9,
            floor: 0.02,
        }
    }
}

impl EpsilonSchedule {
    /// Exploration rate for the `episode`-th pass (0-based) over a document.
    pub fn at(&self, episode: usize) -> f64 {
        (self.initial * self.decay.powi(episode as i32)).max(self.floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspiConfig {
    pub gamma: f64,
    pub episodes: usize,
    pub delta: f64,
    pub policy_tolerance: f64,
    pub max_policy_iterations: usize,
    pub epsilon: EpsilonSchedule,
    pub rewards: Rewards,
    pub seed: u64,
}

impl Default for LspiConfig {
    fn default() -> Self {
        LspiConfig {
            gamma: 0.9,
            episodes: 10,
            delta: 1e-6,
            policy_tolerance: 1e-6,
            max_policy_iterations: 30,
            epsilon: EpsilonSchedule::default(),
            rewards: Rewards::default(),
            seed: 0,
        }
    }
}

impl LspiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1]"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be positive"));
        }
        if !(self.policy_tolerance >= 0.0) {
            return Err(Error::invalid("policy_tolerance", "must be non-negative"));
        }
        if self.max_policy_iterations == 0 {
            return Err(Error::invalid("max_policy_iterations", "must be at least 1"));
        }
        let e = &self.epsilon;
        if ![e.initial, e.decay, e.floor].iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::invalid("epsilon", "schedule values must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Counters collected while training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TrainReport {
    pub episodes: usize,
    pub samples: usize,
    pub lstdq_solves: usize,
    /// Episodes after which policy iteration hit its iteration cap.
    pub unconverged_steps: usize,
}

pub fn train(corpus: &Corpus, cfg: &LspiConfig, fcfg: &FeatureConfig, hcfg: &HaConfig) -> Result<Policy> {
    train_with_report(corpus, cfg, fcfg, hcfg).map(|(p, _)| p)
}

pub fn train_with_report(
    corpus: &Corpus,
    cfg: &LspiConfig,
    fcfg: &FeatureConfig,
    hcfg: &HaConfig,
) -> Result<(Policy, TrainReport)> {
    cfg.validate()?;
    if corpus.documents.is_empty() {
        return Err(Error::invalid("corpus", "no training documents"));
    }
    for doc in &corpus.documents {
        if let Some(position) = doc.clauses.iter().position(|c| c.gold_label.is_none()) {
            return Err(Error::MissingGold {
                document: doc.id.clone(),
                position,
            });
        }
    }
    let featurizer = Featurizer::new(fcfg.clone(), *hcfg, corpus.num_labels())?;
    let num_actions = corpus.num_labels();
    let mut q = LinearQ::zeros(featurizer.state_dim(), num_actions);
    let mut report = TrainReport::default();

    if cfg.episodes > 0 {
        let mut system = LstdqSystem::new(featurizer.state_dim(), num_actions, cfg.gamma, cfg.delta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for doc in &corpus.documents {
            let features = featurizer.document(doc);
            let mut last_round = vec![None; doc.len()];
            for k in 0..cfg.episodes {
                let epsilon = cfg.epsilon.at(k);
                let (mut env, s0) =
                    AnnotationEnv::reset_with(&featurizer, doc, Cow::Borrowed(&features), last_round, cfg.rewards)?;
                let samples = run_episode(&mut env, s0, |s| {
                    // One uniform draw per step keeps the stream aligned regardless of branch.
                    if rng.gen::<f64>() < epsilon {
                        rng.gen_range(0..num_actions)
                    } else {
                        q.greedy(s)
                    }
                })?;
                last_round = env.annotations().iter().map(|&a| Some(a)).collect();
                report.samples += samples.len();
                for sample in samples {
                    system.push(sample, &q)?;
                }
                let outcome = policy_iteration(&mut system, &mut q, cfg.policy_tolerance, cfg.max_policy_iterations)?;
                report.episodes += 1;
                report.lstdq_solves += outcome.iterations;
                if !outcome.converged {
                    report.unconverged_steps += 1;
                }
            }
        }
        log::debug!(
            "trained on {} samples with {} solves ({} capped steps)",
            report.samples,
            report.lstdq_solves,
            report.unconverged_steps
        );
    }

    let policy = Policy {
        q,
        labels: corpus.label_set.clone(),
        features: fcfg.clone(),
        ha: *hcfg,
    };
    Ok((policy, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Clause, Document, LabelSet};

    fn small_corpus() -> Corpus {
        let labels = LabelSet::new(["a", "b", "c"]).unwrap();
        let docs = vec![
            Document::new(
                "d1",
                vec![
                    Clause::new("we claim this", Some(0)),
                    Clause::new("because of that", Some(1)),
                    Clause::new("in general", Some(2)),
                ],
            )
            .unwrap(),
            Document::new(
                "d2",
                vec![Clause::new("because reasons", Some(1)), Clause::new("we claim it", Some(0))],
            )
            .unwrap(),
        ];
        Corpus::new(labels, docs).unwrap()
    }

    fn small_features() -> FeatureConfig {
        FeatureConfig {
            hash_dim: 16,
            marker_lexicon: vec![],
            token_count_cap: 10,
        }
    }

    #[test]
    fn schedule_decays_to_floor() {
        let e = EpsilonSchedule::default();
        assert_eq!(e.at(0), 0.3);
        assert!((e.at(1) - 0.27).abs() < 1e-15);
        assert_eq!(e.at(100), 0.02);
    }

    #[test]
    fn zero_episodes_returns_zero_policy() {
        let cfg = LspiConfig {
            episodes: 0,
            ..LspiConfig::default()
        };
        let p = train(&small_corpus(), &cfg, &small_features(), &HaConfig::new(1, 1)).unwrap();
        assert!(p.q.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = LspiConfig {
            episodes: 3,
            seed: 11,
            ..LspiConfig::default()
        };
        let a = train(&small_corpus(), &cfg, &small_features(), &HaConfig::new(3, 2)).unwrap();
        let b = train(&small_corpus(), &cfg, &small_features(), &HaConfig::new(3, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unlabeled_clause_is_rejected() {
        let mut corpus = small_corpus();
        corpus.documents[1].clauses[1].gold_label = None;
        let err = train(&corpus, &LspiConfig::default(), &small_features(), &HaConfig::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::MissingGold { position: 1, .. }));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = LspiConfig {
            gamma: 1.2,
            ..LspiConfig::default()
        };
        assert!(train(&small_corpus(), &cfg, &small_features(), &HaConfig::new(0, 0)).is_err());
    }
}
