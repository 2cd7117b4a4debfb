//! Synthetic corpora from a first-order label Markov chain.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Clause, Corpus, Document, LabelSet};
use crate::error::{Error, Result};
use crate::rng;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub labels: LabelSet,
    pub num_documents: usize,
    /// Inclusive `[lo, hi]`.
    pub clauses_per_doc: (usize, usize),
    pub label_transition: Vec<Vec<f64>>,
    pub initial_label_dist: Vec<f64>,
    /// Shared vocabulary; `vocab_per_label[l]` is a distribution over it.
    pub vocabulary: Vec<String>,
    pub vocab_per_label: Vec<Vec<f64>>,
    /// Inclusive `[lo, hi]`.
    pub tokens_per_clause: (usize, usize),
    /// Probability that a token is drawn uniformly from the whole vocabulary
    /// instead of the clause label's own distribution.
    pub lexical_ambiguity: f64,
}

impl Default for SynthConfig {
    /// Four labels with a strongly cyclic transition structure and two pairs of
    /// labels sharing most of their vocabulary.
    fn default() -> Self {
        let (stay, next, other) = (0.05, 0.85, 0.05);
        let transition = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        if j == i {
                            stay
                        } else if j == (i + 1) % 4 {
                            next
                        } else {
                            other
                        }
                    })
                    .collect()
            })
            .collect();
        SynthConfig::with_grouped_vocabulary(
            LabelSet::new(["claim", "premise", "background", "other"]).expect("static labels"),
            60,
            (8, 15),
            transition,
            vec![0.7, 0.1, 0.1, 0.1],
            &[0, 0, 1, 1],
            6,
            0.25,
            (4, 8),
            0.6,
        )
    }
}

impl SynthConfig {
    /// Builds per-label word distributions where labels mapped to the same
    /// group share `words_per_group` words. Each label also owns
    /// `words_per_group` private words that receive `distinct_share` of its
    /// probability mass.
    #[allow(clippy::too_many_arguments)]
    pub fn with_grouped_vocabulary(
        labels: LabelSet,
        num_documents: usize,
        clauses_per_doc: (usize, usize),
        label_transition: Vec<Vec<f64>>,
        initial_label_dist: Vec<f64>,
        groups: &[usize],
        words_per_group: usize,
        distinct_share: f64,
        tokens_per_clause: (usize, usize),
        lexical_ambiguity: f64,
    ) -> Self {
        let num_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
        let mut vocabulary = Vec::new();
        for g in 0..num_groups {
            for w in 0..words_per_group {
                vocabulary.push(format!("g{g}w{w}"));
            }
        }
        for l in 0..labels.len() {
            for w in 0..words_per_group {
                vocabulary.push(format!("l{l}w{w}"));
            }
        }
        let shared_len = num_groups * words_per_group;
        let vocab_per_label = (0..labels.len())
            .map(|l| {
                let mut dist = vec![0.0; vocabulary.len()];
                let g = groups[l];
                for w in 0..words_per_group {
                    dist[g * words_per_group + w] += (1.0 - distinct_share) / words_per_group as f64;
                    dist[shared_len + l * words_per_group + w] += distinct_share / words_per_group as f64;
                }
                dist
            })
            .collect();
        SynthConfig {
            labels,
            num_documents,
            clauses_per_doc,
            label_transition,
            initial_label_dist,
            vocabulary,
            vocab_per_label,
            tokens_per_clause,
            lexical_ambiguity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.labels.len();
        if self.num_documents == 0 {
            return Err(Error::invalid("num_documents", "must be positive"));
        }
        check_range("clauses_per_doc", self.clauses_per_doc)?;
        check_range("tokens_per_clause", self.tokens_per_clause)?;
        if !(0.0..=1.0).contains(&self.lexical_ambiguity) {
            return Err(Error::invalid("lexical_ambiguity", "must lie in [0, 1]"));
        }
        if self.label_transition.len() != a {
            return Err(Error::invalid(
                "label_transition",
                format!("expected {a} rows, found {}", self.label_transition.len()),
            ));
        }
        for (i, row) in self.label_transition.iter().enumerate() {
            check_distribution(&format!("label_transition row {i}"), row, a)?;
        }
        check_distribution("initial_label_dist", &self.initial_label_dist, a)?;
        if self.vocabulary.is_empty() {
            return Err(Error::invalid("vocabulary", "must not be empty"));
        }
        if self.vocab_per_label.len() != a {
            return Err(Error::invalid(
                "vocab_per_label",
                format!("expected {a} rows, found {}", self.vocab_per_label.len()),
            ));
        }
        for (i, row) in self.vocab_per_label.iter().enumerate() {
            check_distribution(&format!("vocab_per_label row {i}"), row, self.vocabulary.len())?;
        }
        Ok(())
    }
}

fn check_range(field: &str, (lo, hi): (usize, usize)) -> Result<()> {
    if lo < 1 || lo > hi {
        return Err(Error::invalid(field, format!("range [{lo}, {hi}] needs 1 <= lo <= hi")));
    }
    Ok(())
}

fn check_distribution(field: &str, row: &[f64], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(Error::invalid(field, format!("expected {len} entries, found {}", row.len())));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(field, "entries must be finite and non-negative"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::invalid(field, format!("sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Samples a corpus. Identical `(config, seed)` pairs give identical corpora.
pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let mut rng = rng::substream(seed, "synth", 0);
    let dist = |w: &[f64]| WeightedIndex::new(w).map_err(|e| Error::invalid("distribution", e.to_string()));
    let initial = dist(&config.initial_label_dist)?;
    let transitions = config
        .label_transition
        .iter()
        .map(|r| dist(r))
        .collect::<Result<Vec<_>>>()?;
    let words = config
        .vocab_per_label
        .iter()
        .map(|r| dist(r))
        .collect::<Result<Vec<_>>>()?;

    let width = (config.num_documents.max(1) - 1).to_string().len().max(4);
    let mut documents = Vec::with_capacity(config.num_documents);
    for d in 0..config.num_documents {
        let len = rng.gen_range(config.clauses_per_doc.0..=config.clauses_per_doc.1);
        let mut clauses = Vec::with_capacity(len);
        let mut label = initial.sample(&mut rng);
        for c in 0..len {
            if c > 0 {
                label = transitions[label].sample(&mut rng);
            }
            let n_tokens = rng.gen_range(config.tokens_per_clause.0..=config.tokens_per_clause.1);
            let text = (0..n_tokens)
                .map(|_| {
                    let w = if rng.gen::<f64>() < config.lexical_ambiguity {
                        rng.gen_range(0..config.vocabulary.len())
                    } else {
                        words[label].sample(&mut rng)
                    };
                    config.vocabulary[w].as_str()
                })
                .collect::<Vec<_>>()
                .join(" ");
            clauses.push(Clause::new(text, Some(label)));
        }
        documents.push(Document::new(format!("doc{d:0width$}"), clauses)?);
    }
    Corpus::new(config.labels.clone(), documents)
}
