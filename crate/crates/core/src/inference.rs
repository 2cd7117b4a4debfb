//! Multi-round test-time annotation under a fixed decision rule.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, Document, LabelSet};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, Featurizer, HaConfig};
use crate::lspi::Policy;
use crate::mdp::{AnnotationEnv, Rewards, Transition};

pub const DEFAULT_ROUNDS: usize = 10;

/// Anything that maps a state to a label and knows the featurization it expects.
pub trait DecisionRule {
    fn decide(&self, state: &[f64]) -> usize;
    fn label_set(&self) -> &LabelSet;
    fn feature_config(&self) -> &FeatureConfig;
    fn ha_config(&self) -> HaConfig;

    fn featurizer(&self) -> Featurizer {
        Featurizer {
            features: self.feature_config().clone(),
            ha: self.ha_config(),
            num_labels: self.label_set().len(),
        }
    }

    /// Fails with [`Error::ConfigMismatch`] unless the rule was built for
    /// exactly this label set and these configs.
    fn check_compatible(&self, labels: &LabelSet, features: &FeatureConfig, ha: &HaConfig) -> Result<()> {
        if self.label_set() != labels {
            return Err(Error::ConfigMismatch(format!(
                "model labels {:?} differ from corpus labels {:?}",
                self.label_set().names(),
                labels.names()
            )));
        }
        if self.feature_config() != features {
            return Err(Error::ConfigMismatch("feature config differs from the model's".into()));
        }
        if self.ha_config() != *ha {
            return Err(Error::ConfigMismatch(format!(
                "HA window {} differs from the model's {}",
                ha,
                self.ha_config()
            )));
        }
        Ok(())
    }
}

impl DecisionRule for Policy {
    fn decide(&self, state: &[f64]) -> usize {
        self.greedy_action(state)
    }

    fn label_set(&self) -> &LabelSet {
        &self.labels
    }

    fn feature_config(&self) -> &FeatureConfig {
        &self.features
    }

    fn ha_config(&self) -> HaConfig {
        self.ha
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationResult {
    pub annotations: Vec<usize>,
    pub rounds_used: usize,
    pub converged: bool,
}

/// Annotates `doc` in rounds until a round reproduces the previous round's
/// labels or `rounds` rounds have run.
pub fn annotate_document<R: DecisionRule + ?Sized>(rule: &R, doc: &Document, rounds: usize) -> Result<AnnotationResult> {
    if rounds < 1 {
        return Err(Error::invalid("rounds", "J must be at least 1"));
    }
    let featurizer = rule.featurizer();
    let features = featurizer.document(doc);
    let mut last: Option<Vec<usize>> = None;
    for round in 1..=rounds {
        let last_round = match &last {
            Some(l) => l.iter().map(|&a| Some(a)).collect(),
            None => vec![None; doc.len()],
        };
        let (mut env, mut state) =
            AnnotationEnv::reset_with(&featurizer, doc, Cow::Borrowed(&features), last_round, Rewards::default())?;
        loop {
            let action = rule.decide(&state);
            match env.step_unrewarded(action)? {
                Transition::Next(next) => state = next,
                Transition::Terminal => break,
            }
        }
        let current = env.annotations().to_vec();
        if last.as_ref() == Some(&current) {
            return Ok(AnnotationResult {
                annotations: current,
                rounds_used: round,
                converged: true,
            });
        }
        last = Some(current);
    }
    Ok(AnnotationResult {
        annotations: last.expect("at least one round ran"),
        rounds_used: rounds,
        converged: false,
    })
}

/// Annotates every document independently; results follow corpus order.
pub fn annotate_corpus<R: DecisionRule + Sync + ?Sized>(
    rule: &R,
    corpus: &Corpus,
    rounds: usize,
) -> Result<Vec<AnnotationResult>> {
    if rule.label_set() != &corpus.label_set {
        return Err(Error::ConfigMismatch("model and corpus label sets differ".into()));
    }
    corpus
        .documents
        .par_iter()
        .map(|doc| annotate_document(rule, doc, rounds))
        .collect()
}
