//! Episodic annotation environment.
//!
//! One episode is one left-to-right pass over a document. The clause visited
//! next never depends on the action; only the HA content of the next state
//! does. The episode ends after the last clause.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::features::{AnnotationHistory, DocumentFeatures, Featurizer, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rewards {
    pub correct: f64,
    pub incorrect: f64,
}

impl Default for Rewards {
    fn default() -> Self {
        Rewards {
            correct: 1.0,
            incorrect: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    Next(StateVector),
    Terminal,
}

impl Transition {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Transition::Terminal)
    }

    pub fn state(&self) -> Option<&StateVector> {
        match self {
            Transition::Next(s) => Some(s),
            Transition::Terminal => None,
        }
    }
}

/// One transition `(s, a, r, s')` consumed by LSTDQ.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next: Transition,
}

pub struct AnnotationEnv<'a> {
    featurizer: &'a Featurizer,
    doc: &'a Document,
    features: Cow<'a, DocumentFeatures>,
    history: AnnotationHistory,
    position: usize,
    rewards: Rewards,
}

impl<'a> AnnotationEnv<'a> {
    /// Starts an episode on `doc`; `last_round` feeds the type-L slots.
    pub fn reset(
        featurizer: &'a Featurizer,
        doc: &'a Document,
        last_round: Vec<Option<usize>>,
    ) -> Result<(Self, StateVector)> {
        Self::reset_with(featurizer, doc, Cow::Owned(featurizer.document(doc)), last_round, Rewards::default())
    }

    /// As [`AnnotationEnv::reset`], reusing precomputed base features.
    pub fn reset_with(
        featurizer: &'a Featurizer,
        doc: &'a Document,
        features: Cow<'a, DocumentFeatures>,
        last_round: Vec<Option<usize>>,
        rewards: Rewards,
    ) -> Result<(Self, StateVector)> {
        if doc.clauses.is_empty() {
            return Err(Error::EmptyDocument(doc.id.clone()));
        }
        if last_round.len() != doc.clauses.len() {
            return Err(Error::invalid(
                "last_round",
                format!("{} entries for a {}-clause document", last_round.len(), doc.clauses.len()),
            ));
        }
        let env = AnnotationEnv {
            featurizer,
            doc,
            features,
            history: AnnotationHistory::with_last_round(last_round),
            position: 0,
            rewards,
        };
        let state = env.current_state();
        Ok((env, state))
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_done(&self) -> bool {
        self.position >= self.doc.clauses.len()
    }

    pub fn history(&self) -> &AnnotationHistory {
        &self.history
    }

    /// Labels chosen so far in this episode.
    pub fn annotations(&self) -> &[usize] {
        &self.history.current_round
    }

    fn current_state(&self) -> StateVector {
        self.featurizer.state(&self.features, self.position, &self.history)
    }

    pub fn reward(&self, action: usize) -> Result<f64> {
        let gold = self.doc.clauses[self.position]
            .gold_label
            .ok_or_else(|| Error::MissingGold {
                document: self.doc.id.clone(),
                position: self.position,
            })?;
        Ok(if action == gold {
            self.rewards.correct
        } else {
            self.rewards.incorrect
        })
    }

    /// Labels the cursor clause and advances.
    pub fn step(&mut self, action: usize) -> Result<(f64, Transition)> {
        if self.is_done() {
            return Err(Error::StepAfterTerminal);
        }
        let reward = self.reward(action)?;
        let next = self.step_unrewarded(action)?;
        Ok((reward, next))
    }

    /// Reward-free step for annotating unlabeled documents.
    pub fn step_unrewarded(&mut self, action: usize) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::StepAfterTerminal);
        }
        if action >= self.featurizer.num_labels {
            return Err(Error::invalid("action", format!("label index {action} out of range")));
        }
        self.history.current_round.push(action);
        self.position += 1;
        Ok(if self.is_done() {
            Transition::Terminal
        } else {
            Transition::Next(self.current_state())
        })
    }
}

/// Runs one full episode, choosing actions with `choose`, and returns its samples.
pub fn run_episode<F>(env: &mut AnnotationEnv<'_>, initial: StateVector, mut choose: F) -> Result<Vec<Sample>>
where
    F: FnMut(&StateVector) -> usize,
{
    let mut samples = Vec::new();
    let mut state = initial;
    loop {
        let action = choose(&state);
        let (reward, next) = env.step(action)?;
        let following = next.state().cloned();
        samples.push(Sample {
            state,
            action,
            reward,
            next,
        });
        match following {
            Some(s) => state = s,
            None => return Ok(samples),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Clause;
    use crate::features::{FeatureConfig, HaConfig};

    fn featurizer(n_l: usize, n_c: usize) -> Featurizer {
        let cfg = FeatureConfig {
            hash_dim: 8,
            marker_lexicon: vec![],
            token_count_cap: 10,
        };
        Featurizer::new(cfg, HaConfig::new(n_l, n_c), 3).unwrap()
    }

    fn doc(labels: &[Option<usize>]) -> Document {
        let clauses = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Clause::new(format!("clause number {i}"), l))
            .collect();
        Document::new("d", clauses).unwrap()
    }

    #[test]
    fn single_clause_correct_action_terminates() {
        let f = featurizer(1, 1);
        let d = doc(&[Some(2)]);
        let (mut env, _) = AnnotationEnv::reset(&f, &d, vec![None]).unwrap();
        assert_eq!(env.step(2).unwrap(), (1.0, Transition::Terminal));
        assert!(matches!(env.step(0), Err(Error::StepAfterTerminal)));
    }

    #[test]
    fn wrong_action_is_penalized() {
        let f = featurizer(0, 0);
        let d = doc(&[Some(1), Some(0)]);
        let (mut env, _) = AnnotationEnv::reset(&f, &d, vec![None; 2]).unwrap();
        let (r, next) = env.step(0).unwrap();
        assert_eq!(r, -1.0);
        assert!(!next.is_terminal());
    }

    #[test]
    fn first_episode_has_empty_type_l() {
        let f = featurizer(3, 0);
        let d = doc(&[Some(0), Some(1), Some(2)]);
        let (_, s) = AnnotationEnv::reset(&f, &d, vec![None; 3]).unwrap();
        assert!(s[f.base_dim()..].iter().all(|&v| v == 0.0));
        let (_, again) = AnnotationEnv::reset(&f, &d, vec![None; 3]).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn no_type_l_window_ignores_last_round() {
        let f = featurizer(0, 2);
        let d = doc(&[Some(0), Some(1)]);
        let (_, a) = AnnotationEnv::reset(&f, &d, vec![None, None]).unwrap();
        let (_, b) = AnnotationEnv::reset(&f, &d, vec![Some(2), Some(1)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn type_c_slot_reflects_action() {
        let f = featurizer(0, 1);
        let d = doc(&[Some(0), Some(1), Some(2)]);
        let (mut env, _) = AnnotationEnv::reset(&f, &d, vec![None; 3]).unwrap();
        let (_, next) = env.step(2).unwrap();
        let s = next.state().unwrap();
        assert_eq!(&s[f.base_dim()..], &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn unlabeled_clause_needs_reward_free_step() {
        let f = featurizer(1, 1);
        let d = doc(&[None, None]);
        let (mut env, _) = AnnotationEnv::reset(&f, &d, vec![None; 2]).unwrap();
        assert!(matches!(env.step(0), Err(Error::MissingGold { position: 0, .. })));
        assert!(!env.step_unrewarded(0).unwrap().is_terminal());
        assert!(env.step_unrewarded(1).unwrap().is_terminal());
        assert_eq!(env.annotations(), &[0, 1]);
    }

    #[test]
    fn reset_checks_history_length() {
        let f = featurizer(1, 1);
        let d = doc(&[Some(0), Some(0)]);
        assert!(AnnotationEnv::reset(&f, &d, vec![None]).is_err());
    }

    #[test]
    fn episode_sample_count_and_replay() {
        let f = featurizer(3, 2);
        let d = doc(&[Some(0), Some(1), Some(2), Some(1), Some(0)]);
        let actions = [0usize, 2, 2, 1, 0];
        let record = || {
            let (mut env, s0) = AnnotationEnv::reset(&f, &d, vec![Some(1); 5]).unwrap();
            let mut it = actions.iter();
            run_episode(&mut env, s0, |_| *it.next().unwrap()).unwrap()
        };
        let a = record();
        assert_eq!(a.len(), 5);
        assert_eq!(a.iter().filter(|s| s.next.is_terminal()).count(), 1);
        assert!(a.last().unwrap().next.is_terminal());
        let rewards: Vec<f64> = a.iter().map(|s| s.reward).collect();
        assert_eq!(rewards, vec![1.0, -1.0, 1.0, 1.0, 1.0]);
        assert_eq!(a, record());
    }

    #[test]
    fn next_clause_independent_of_action() {
        // Base part of the next state is the same whatever the action was.
        let f = featurizer(1, 1);
        let d = doc(&[Some(0), Some(1)]);
        let base = f.base_dim();
        let mut bases = Vec::new();
        for action in 0..3 {
            let (mut env, _) = AnnotationEnv::reset(&f, &d, vec![None; 2]).unwrap();
            let (_, next) = env.step(action).unwrap();
            bases.push(next.state().unwrap()[..base].to_vec());
        }
        assert!(bases.windows(2).all(|w| w[0] == w[1]));
    }
}
