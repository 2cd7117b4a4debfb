//! Supervised linear baseline: L2-regularized multinomial logistic regression
//! over the same state vectors the RL policy sees.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelSet};
use crate::error::{Error, Result};
use crate::features::{AnnotationHistory, FeatureConfig, Featurizer, HaConfig};
use crate::inference::DecisionRule;
use crate::model_file::{self, ModelHeader, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineHyper {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Representations per clause (`K_b`).
    pub ha_rounds: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for BaselineHyper {
    fn default() -> Self {
        BaselineHyper {
            learning_rate: 0.1,
            l2: 1e-4,
            max_epochs: 200,
            patience: 10,
            ha_rounds: 2,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl BaselineHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(Error::invalid("l2", "must be non-negative"));
        }
        for (field, v) in [
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("ha_rounds", self.ha_rounds),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::invalid(field, "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainingMetadata {
    pub training_vectors: usize,
    pub epochs: usize,
    /// Full-batch objective after initialization and after each accepted epoch.
    pub loss_history: Vec<f64>,
    pub learning_rate_halvings: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// `|A| × N`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub labels: LabelSet,
    pub features: FeatureConfig,
    pub ha: HaConfig,
    pub metadata: TrainingMetadata,
}

impl LinearClassifier {
    pub fn zeros(labels: LabelSet, features: FeatureConfig, ha: HaConfig) -> Result<Self> {
        let n = Featurizer::new(features.clone(), ha, labels.len())?.state_dim();
        Ok(LinearClassifier {
            weights: vec![0.0; n * labels.len()],
            bias: vec![0.0; labels.len()],
            labels,
            features,
            ha,
            metadata: TrainingMetadata::default(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.weights.len() / self.labels.len()
    }

    pub fn scores(&self, state: &[f64]) -> Vec<f64> {
        scores(&self.weights, &self.bias, state)
    }

    /// Highest-scoring label, lowest index on ties.
    pub fn predict(&self, state: &[f64]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (a, s) in self.scores(state).into_iter().enumerate() {
            if s > best_score {
                best = a;
                best_score = s;
            }
        }
        best
    }

    /// The classifier as a decision rule for the multi-round inference loop.
    pub fn as_policy(&self) -> &(dyn DecisionRule + Sync) {
        self
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = ModelHeader {
            labels: self.labels.clone(),
            features: self.features.clone(),
            ha: self.ha,
            state_dim: self.state_dim(),
            num_actions: self.labels.len(),
        };
        let mut values = self.weights.clone();
        values.extend_from_slice(&self.bias);
        model_file::encode(ModelKind::Baseline, &header, &values)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, mut values) = model_file::decode(bytes, ModelKind::Baseline)?;
        let expected = (header.state_dim + 1) * header.num_actions;
        if values.len() != expected {
            return Err(Error::Model(format!("expected {expected} values, found {}", values.len())));
        }
        let bias = values.split_off(header.state_dim * header.num_actions);
        Ok(LinearClassifier {
            weights: values,
            bias,
            labels: header.labels,
            features: header.features,
            ha: header.ha,
            metadata: TrainingMetadata::default(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        LinearClassifier::from_bytes(&std::fs::read(path)?)
    }
}

impl DecisionRule for LinearClassifier {
    fn decide(&self, state: &[f64]) -> usize {
        self.predict(state)
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

fn scores(weights: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    bias.iter()
        .enumerate()
        .map(|(a, b)| b + crate::lspi::dot(&weights[a * n..(a + 1) * n], x))
        .collect()
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean cross-entropy over `data` plus `l2/2 · ‖W‖²` (bias unregularized).
fn objective(weights: &[f64], bias: &[f64], data: &[(Vec<f64>, usize)], l2: f64) -> f64 {
    let mut total = 0.0;
    for (x, y) in data {
        let z = scores(weights, bias, x);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += log_sum - z[*y];
    }
    let reg: f64 = weights.iter().map(|w| w * w).sum();
    total / data.len() as f64 + 0.5 * l2 * reg
}

/// Gradient of [`objective`] restricted to the samples in `batch`.
fn gradient(
    weights: &[f64],
    bias: &[f64],
    data: &[(Vec<f64>, usize)],
    batch: &[usize],
    l2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let k = bias.len();
    let n = weights.len() / k;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; k];
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let (x, y) = &data[i];
        let mut p = scores(weights, bias, x);
        softmax_in_place(&mut p);
        p[*y] -= 1.0;
        for a in 0..k {
            let c = p[a] * scale;
            gb[a] += c;
            if c != 0.0 {
                for (g, xi) in gw[a * n..(a + 1) * n].iter_mut().zip(x) {
                    *g += c * xi;
                }
            }
        }
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (gw, gb)
}

/// Training vectors: round 1 with empty HA slots, later rounds with HA slots
/// filled from gold labels. A window without HA slots yields one vector per
/// clause.
pub fn training_vectors(corpus: &Corpus, featurizer: &Featurizer, ha_rounds: usize) -> Result<Vec<(Vec<f64>, usize)>> {
    let rounds = if featurizer.ha.dim(featurizer.num_labels) == 0 {
        1
    } else {
        ha_rounds
    };
    let mut data = Vec::new();
    for doc in &corpus.documents {
        let gold: Vec<usize> = doc
            .clauses
            .iter()
            .enumerate()
            .map(|(position, c)| {
                c.gold_label.ok_or_else(|| Error::MissingGold {
                    document: doc.id.clone(),
                    position,
                })
            })
            .collect::<Result<_>>()?;
        let features = featurizer.document(doc);
        for round in 0..rounds {
            for (pos, &y) in gold.iter().enumerate() {
                let history = if round == 0 {
                    AnnotationHistory::first_round(doc.len())
                } else {
                    AnnotationHistory {
                        last_round: gold.iter().map(|&g| Some(g)).collect(),
                        current_round: gold[..pos].to_vec(),
                    }
                };
                data.push((featurizer.state(&features, pos, &history).into_inner(), y));
            }
        }
    }
    Ok(data)
}

pub fn train_baseline(
    corpus: &Corpus,
    hyper: &BaselineHyper,
    fcfg: &FeatureConfig,
    hcfg: &HaConfig,
) -> Result<LinearClassifier> {
    hyper.validate()?;
    if corpus.documents.is_empty() {
        return Err(Error::invalid("corpus", "no training documents"));
    }
    let featurizer = Featurizer::new(fcfg.clone(), *hcfg, corpus.num_labels())?;
    let data = training_vectors(corpus, &featurizer, hyper.ha_rounds)?;
    let mut model = LinearClassifier::zeros(corpus.label_set.clone(), fcfg.clone(), *hcfg)?;
    let mut meta = TrainingMetadata {
        training_vectors: data.len(),
        ..TrainingMetadata::default()
    };

    let mut seen = vec![false; corpus.num_labels()];
    for (_, y) in &data {
        seen[*y] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        let msg = "training corpus contains a single class".to_string();
        log::warn!("{msg}");
        meta.warnings.push(msg);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut lr = hyper.learning_rate;
    let mut loss = objective(&model.weights, &model.bias, &data, hyper.l2);
    meta.loss_history.push(loss);
    let mut best = loss;
    let mut stale = 0;

    for _ in 0..hyper.max_epochs {
        meta.epochs += 1;
        let (saved_w, saved_b) = (model.weights.clone(), model.bias.clone());
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let (gw, gb) = gradient(&model.weights, &model.bias, &data, batch, hyper.l2);
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= lr * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&gb) {
                *b -= lr * g;
            }
        }
        let new_loss = objective(&model.weights, &model.bias, &data, hyper.l2);
        if !new_loss.is_finite() || new_loss > loss + 1e-9 {
            model.weights = saved_w;
            model.bias = saved_b;
            lr *= 0.5;
            meta.learning_rate_halvings += 1;
            log::info!("baseline loss rose to {new_loss:.6}; learning rate halved to {lr}");
            if lr < 1e-12 {
                break;
            }
            continue;
        }
        loss = new_loss;
        meta.loss_history.push(loss);
        if best - loss > 1e-6 * best.abs().max(1.0) {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= hyper.patience {
                break;
            }
        }
    }
    model.metadata = meta;
    Ok(model)
}
