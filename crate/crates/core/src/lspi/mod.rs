//! Least-squares policy iteration over the block state-action basis
//! `φ(s, a) = e_a ⊗ s`.

mod system;
mod train;

pub use system::{lspi, policy_iteration, LstdqSystem, PolicyIterationOutcome};
pub use train::{train, train_with_report, EpsilonSchedule, LspiConfig, TrainReport};

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, Featurizer, HaConfig};
use crate::mdp::{Sample, Transition};
use crate::model_file::{self, ModelHeader, ModelKind};

/// Linear Q-function `Q(s, a) = w · φ(s, a)`; block `a` of `w` scores action `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    weights: Vec<f64>,
    state_dim: usize,
    num_actions: usize,
}

impl LinearQ {
    pub fn zeros(state_dim: usize, num_actions: usize) -> Self {
        LinearQ {
            weights: vec![0.0; state_dim * num_actions],
            state_dim,
            num_actions,
        }
    }

    pub fn from_weights(weights: Vec<f64>, state_dim: usize, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || weights.len() != state_dim * num_actions {
            return Err(Error::invalid(
                "weights",
                format!(
                    "length {} does not match N·|A| = {}·{}",
                    weights.len(),
                    state_dim,
                    num_actions
                ),
            ));
        }
        Ok(LinearQ {
            weights,
            state_dim,
            num_actions,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn block(&self, action: usize) -> &[f64] {
        &self.weights[action * self.state_dim..(action + 1) * self.state_dim]
    }

    pub fn q_value(&self, state: &[f64], action: usize) -> f64 {
        dot(self.block(action), state)
    }

    pub fn q_values(&self, state: &[f64]) -> Vec<f64> {
        (0..self.num_actions).map(|a| self.q_value(state, a)).collect()
    }

    /// `argmax_a Q(s, a)`, lowest index on ties.
    pub fn greedy(&self, state: &[f64]) -> usize {
        debug_assert_eq!(state.len(), self.state_dim);
        let mut best = 0;
        let mut best_q = f64::NEG_INFINITY;
        for a in 0..self.num_actions {
            let q = self.q_value(state, a);
            if q > best_q {
                best = a;
                best_q = q;
            }
        }
        best
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn greedy_action(policy: &Policy, state: &[f64]) -> usize {
    policy.q.greedy(state)
}

/// Append-only sample sequence.
#[derive(Debug, Clone, Default)]
pub struct SampleStore {
    samples: Vec<Sample>,
}

impl SampleStore {
    pub fn new() -> Self {
        SampleStore::default()
    }

    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn as_slice(&self) -> &[Sample] {
        &self.samples
    }
}

impl Extend<Sample> for SampleStore {
    fn extend<T: IntoIterator<Item = Sample>>(&mut self, iter: T) {
        self.samples.extend(iter);
    }
}

impl FromIterator<Sample> for SampleStore {
    fn from_iter<T: IntoIterator<Item = Sample>>(iter: T) -> Self {
        SampleStore {
            samples: iter.into_iter().collect(),
        }
    }
}

/// Adds `coef · s tᵀ` into block `(row_block, col_block)` of a column-major
/// `n × n` matrix with `n = dim · blocks`.
pub(crate) fn add_outer_block(
    m: &mut DMatrix<f64>,
    dim: usize,
    row_block: usize,
    col_block: usize,
    s: &[f64],
    t: &[f64],
    coef: f64,
) {
    let n = m.nrows();
    let data = m.as_mut_slice();
    let row0 = row_block * dim;
    for (j, &tj) in t.iter().enumerate() {
        if tj == 0.0 {
            continue;
        }
        let v = coef * tj;
        let start = (col_block * dim + j) * n + row0;
        for (dst, &si) in data[start..start + dim].iter_mut().zip(s) {
            *dst += si * v;
        }
    }
}

pub(crate) fn solve_dense(a: DMatrix<f64>, b: DVector<f64>) -> Result<Vec<f64>> {
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LSTDQ system"));
    }
    let w = a.lu().solve(&b).ok_or(Error::Singular)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LSTDQ solution"));
    }
    Ok(w.as_slice().to_vec())
}

/// Reference LSTDQ: builds `(δI + Σ φ(φ − γφ')ᵀ) w = Σ φ r` from scratch,
/// with `φ' = φ(s', π(s'))` for the greedy policy of `policy` and `φ' = 0`
/// after terminal transitions, and solves it by LU decomposition.
pub fn lstdq(samples: &SampleStore, policy: &LinearQ, gamma: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    let dim = policy.state_dim;
    let n = dim * policy.num_actions;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for sample in samples.iter() {
        let s = &sample.state[..];
        if s.len() != dim {
            return Err(Error::invalid("samples", "state length does not match the policy"));
        }
        add_outer_block(&mut a, dim, sample.action, sample.action, s, s, 1.0);
        if let Transition::Next(next) = &sample.next {
            let next_action = policy.greedy(next);
            add_outer_block(&mut a, dim, sample.action, next_action, s, next, -gamma);
        }
        for (i, &si) in s.iter().enumerate() {
            b[sample.action * dim + i] += sample.reward * si;
        }
    }
    for i in 0..n {
        a[(i, i)] += delta;
    }
    solve_dense(a, b)
}

/// Trained annotation policy with the configs it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub q: LinearQ,
    pub labels: LabelSet,
    pub features: FeatureConfig,
    pub ha: HaConfig,
}

impl Policy {
    pub fn zeros(labels: LabelSet, features: FeatureConfig, ha: HaConfig) -> Result<Self> {
        let featurizer = Featurizer::new(features.clone(), ha, labels.len())?;
        Ok(Policy {
            q: LinearQ::zeros(featurizer.state_dim(), labels.len()),
            labels,
            features,
            ha,
        })
    }

    pub fn from_weights(labels: LabelSet, features: FeatureConfig, ha: HaConfig, weights: Vec<f64>) -> Result<Self> {
        let featurizer = Featurizer::new(features.clone(), ha, labels.len())?;
        let q = LinearQ::from_weights(weights, featurizer.state_dim(), labels.len())?;
        Ok(Policy {
            q,
            labels,
            features,
            ha,
        })
    }

    pub fn greedy_action(&self, state: &[f64]) -> usize {
        self.q.greedy(state)
    }

    pub fn featurizer(&self) -> Featurizer {
        Featurizer {
            features: self.features.clone(),
            ha: self.ha,
            num_labels: self.labels.len(),
        }
    }

    fn header(&self) -> ModelHeader {
        ModelHeader {
            labels: self.labels.clone(),
            features: self.features.clone(),
            ha: self.ha,
            state_dim: self.q.state_dim,
            num_actions: self.q.num_actions,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        model_file::encode(ModelKind::Policy, &self.header(), &self.q.weights)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, values) = model_file::decode(bytes, ModelKind::Policy)?;
        Policy::from_weights(header.labels, header.features, header.ha, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Policy::from_bytes(&std::fs::read(path)?)
    }
}
