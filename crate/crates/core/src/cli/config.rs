//! Flat run configuration shared by every subcommand.
//!
//! A config file holds one or more JSON objects, one per line, merged in
//! order. Command-line flags are applied last. Every key is optional here;
//! each command resolves the sections it needs against the library defaults.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::baseline::BaselineHyper;
use crate::corpus::{LabelSet, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::{parse_range, ExperimentConfig, GridSpec, Method};
use crate::features::{FeatureConfig, HaConfig, HaEncoding};
use crate::lspi::{EpsilonSchedule, LspiConfig};
use crate::mdp::Rewards;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    /// `rl`, `baseline` or (for `crossval`) `both`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_documents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clauses_per_doc: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_transition: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_label_dist: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_per_label: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens_per_clause: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexical_ambiguity: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub hash_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marker_lexicon: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token_count_cap: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_c: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoding: Option<HaEncoding>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_policy_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_initial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_correct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_incorrect: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ha_rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    /// Inference round budget `J`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n_l: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n_c: Option<String>,
}

/// Reads a config file: one JSON object per non-blank line.
pub fn read_config_map(path: &Path) -> Result<Map<String, Value>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::invalid("config", format!("cannot open {}: {e}", path.display())))?;
    let mut merged = Map::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        let Value::Object(obj) = value else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("{}: expected a JSON object", path.display()),
            });
        };
        merged.extend(obj);
    }
    Ok(merged)
}

/// Parses a `key=value` override. The value is read as JSON when possible and
/// as a plain string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::invalid("set", format!("\"{s}\" is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.trim().to_string(), value))
}

impl RunConfig {
    pub fn from_map(map: Map<String, Value>) -> Result<Self> {
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("run config serializes")
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("seed", "is required (pass --seed or set \"seed\" in the config)"))
    }

    pub fn require_path(&self, field: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        let path = value
            .clone()
            .ok_or_else(|| Error::invalid(field, "is required"))?;
        if !path.exists() {
            return Err(Error::invalid(field, format!("{} does not exist", path.display())));
        }
        Ok(path.canonicalize()?)
    }

    pub fn methods(&self, allow_both: bool) -> Result<Vec<Method>> {
        match self.method.as_deref() {
            None => Ok(vec![Method::Rl]),
            Some("both") if allow_both => Ok(vec![Method::Rl, Method::Baseline]),
            Some(m) => Ok(vec![m.parse()?]),
        }
    }

    pub fn synth(&self) -> Result<SynthConfig> {
        let d = SynthConfig::default();
        let cfg = SynthConfig {
            labels: self.labels.clone().unwrap_or(d.labels),
            num_documents: self.num_documents.unwrap_or(d.num_documents),
            clauses_per_doc: self.clauses_per_doc.unwrap_or(d.clauses_per_doc),
            label_transition: self.label_transition.clone().unwrap_or(d.label_transition),
            initial_label_dist: self.initial_label_dist.clone().unwrap_or(d.initial_label_dist),
            vocabulary: self.vocabulary.clone().unwrap_or(d.vocabulary),
            vocab_per_label: self.vocab_per_label.clone().unwrap_or(d.vocab_per_label),
            tokens_per_clause: self.tokens_per_clause.unwrap_or(d.tokens_per_clause),
            lexical_ambiguity: self.lexical_ambiguity.unwrap_or(d.lexical_ambiguity),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_synth(&mut self, s: &SynthConfig) {
        self.labels = Some(s.labels.clone());
        self.num_documents = Some(s.num_documents);
        self.clauses_per_doc = Some(s.clauses_per_doc);
        self.label_transition = Some(s.label_transition.clone());
        self.initial_label_dist = Some(s.initial_label_dist.clone());
        self.vocabulary = Some(s.vocabulary.clone());
        self.vocab_per_label = Some(s.vocab_per_label.clone());
        self.tokens_per_clause = Some(s.tokens_per_clause);
        self.lexical_ambiguity = Some(s.lexical_ambiguity);
    }

    pub fn features(&self) -> Result<FeatureConfig> {
        let d = FeatureConfig::default();
        let cfg = FeatureConfig {
            hash_dim: self.hash_dim.unwrap_or(d.hash_dim),
            marker_lexicon: self.marker_lexicon.clone().unwrap_or(d.marker_lexicon),
            token_count_cap: self.token_count_cap.unwrap_or(d.token_count_cap),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_features(&mut self, f: &FeatureConfig) {
        self.hash_dim = Some(f.hash_dim);
        self.marker_lexicon = Some(f.marker_lexicon.clone());
        self.token_count_cap = Some(f.token_count_cap);
    }

    pub fn ha(&self) -> HaConfig {
        HaConfig {
            n_l: self.n_l.unwrap_or(0),
            n_c: self.n_c.unwrap_or(0),
            encoding: self.encoding.unwrap_or_default(),
        }
    }

    pub fn set_ha(&mut self, h: &HaConfig) {
        self.n_l = Some(h.n_l);
        self.n_c = Some(h.n_c);
        self.encoding = Some(h.encoding);
    }

    pub fn lspi(&self, seed: u64) -> Result<LspiConfig> {
        let d = LspiConfig::default();
        let cfg = LspiConfig {
            gamma: self.gamma.unwrap_or(d.gamma),
            episodes: self.episodes.unwrap_or(d.episodes),
            delta: self.delta.unwrap_or(d.delta),
            policy_tolerance: self.policy_tolerance.unwrap_or(d.policy_tolerance),
            max_policy_iterations: self.max_policy_iterations.unwrap_or(d.max_policy_iterations),
            epsilon: EpsilonSchedule {
                initial: self.epsilon_initial.unwrap_or(d.epsilon.initial),
                decay: self.epsilon_decay.unwrap_or(d.epsilon.decay),
                floor: self.epsilon_floor.unwrap_or(d.epsilon.floor),
            },
            rewards: Rewards {
                correct: self.reward_correct.unwrap_or(d.rewards.correct),
                incorrect: self.reward_incorrect.unwrap_or(d.rewards.incorrect),
            },
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_lspi(&mut self, c: &LspiConfig) {
        self.gamma = Some(c.gamma);
        self.episodes = Some(c.episodes);
        self.delta = Some(c.delta);
        self.policy_tolerance = Some(c.policy_tolerance);
        self.max_policy_iterations = Some(c.max_policy_iterations);
        self.epsilon_initial = Some(c.epsilon.initial);
        self.epsilon_decay = Some(c.epsilon.decay);
        self.epsilon_floor = Some(c.epsilon.floor);
        self.reward_correct = Some(c.rewards.correct);
        self.reward_incorrect = Some(c.rewards.incorrect);
    }

    pub fn baseline(&self, seed: u64) -> Result<BaselineHyper> {
        let d = BaselineHyper::default();
        let cfg = BaselineHyper {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            l2: self.l2.unwrap_or(d.l2),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            patience: self.patience.unwrap_or(d.patience),
            ha_rounds: self.ha_rounds.unwrap_or(d.ha_rounds),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_baseline(&mut self, b: &BaselineHyper) {
        self.learning_rate = Some(b.learning_rate);
        self.l2 = Some(b.l2);
        self.max_epochs = Some(b.max_epochs);
        self.patience = Some(b.patience);
        self.ha_rounds = Some(b.ha_rounds);
        self.batch_size = Some(b.batch_size);
    }

    pub fn rounds(&self) -> Result<usize> {
        let rounds = self.rounds.unwrap_or(crate::inference::DEFAULT_ROUNDS);
        if rounds == 0 {
            return Err(Error::invalid("rounds", "must be at least 1"));
        }
        Ok(rounds)
    }

    pub fn experiment(&self, seed: u64) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let alpha = self.alpha.unwrap_or(d.alpha);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid("alpha", "must lie in [0, 1]"));
        }
        Ok(ExperimentConfig {
            features: self.features()?,
            lspi: self.lspi(seed)?,
            baseline: self.baseline(seed)?,
            rounds: self.rounds()?,
            folds: self.k.unwrap_or(d.folds),
            repeats: self.repeats.unwrap_or(d.repeats),
            alpha,
            seed,
        })
    }

    pub fn set_experiment(&mut self, e: &ExperimentConfig) {
        self.set_features(&e.features);
        self.set_lspi(&e.lspi);
        self.set_baseline(&e.baseline);
        self.rounds = Some(e.rounds);
        self.k = Some(e.folds);
        self.repeats = Some(e.repeats);
        self.alpha = Some(e.alpha);
        self.seed = Some(e.seed);
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let n_l = parse_range(self.grid_n_l.as_deref().unwrap_or("0..9"))?;
        let n_c = parse_range(self.grid_n_c.as_deref().unwrap_or("0..5"))?;
        Ok(GridSpec {
            n_l,
            n_c,
            encoding: self.encoding.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_json_or_string() {
        assert_eq!(parse_override("gamma=0.5").unwrap(), ("gamma".into(), Value::from(0.5)));
        assert_eq!(parse_override("method=rl").unwrap(), ("method".into(), Value::from("rl")));
        assert!(parse_override("gamma").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let mut map = Map::new();
        map.insert("gama".into(), Value::from(0.5));
        let err = RunConfig::from_map(map).unwrap_err();
        assert!(err.to_string().contains("gama"));
    }

    #[test]
    fn resolved_sections_round_trip_through_a_line() {
        let mut cfg = RunConfig {
            seed: Some(4),
            gamma: Some(0.5),
            n_l: Some(3),
            ..RunConfig::default()
        };
        let e = cfg.experiment(4).unwrap();
        cfg.set_experiment(&e);
        cfg.set_ha(&cfg.ha());
        let line = cfg.to_line();
        let back: Map<String, Value> = serde_json::from_str(&line).unwrap();
        let back = RunConfig::from_map(back).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.experiment(4).unwrap(), e);
    }

    #[test]
    fn invalid_transition_names_row() {
        let cfg = RunConfig {
            label_transition: Some(vec![
                vec![0.25; 4],
                vec![0.5, 0.5, 0.5, 0.0],
                vec![0.25; 4],
                vec![0.25; 4],
            ]),
            ..RunConfig::default()
        };
        let err = cfg.synth().unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("row 1"), "{err}");
    }
}
