use nalgebra::{DMatrix, DVector};

use super::{add_outer_block, solve_dense, LinearQ, SampleStore};
use crate::error::{Error, Result};
use crate::mdp::{Sample, Transition};

/// LSTDQ system maintained incrementally as samples arrive and the greedy
/// policy changes.
///
/// The policy-independent part `Σ φφᵀ` and `Σ φ r` are accumulated once per
/// sample. The cross term `Σ φ φ'ᵀ` is kept for a cached greedy next action
/// per sample and only the outer products whose next action changed are
/// moved between blocks. The assembled system equals the one [`super::lstdq`]
/// builds from scratch for the same policy, up to floating-point reassociation.
#[derive(Debug, Clone)]
pub struct LstdqSystem {
    state_dim: usize,
    num_actions: usize,
    gamma: f64,
    delta: f64,
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    rhs: DVector<f64>,
    samples: SampleStore,
    next_actions: Vec<Option<usize>>,
}

impl LstdqSystem {
    pub fn new(state_dim: usize, num_actions: usize, gamma: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1]"));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        let n = state_dim * num_actions;
        Ok(LstdqSystem {
            state_dim,
            num_actions,
            gamma,
            delta,
            gram: DMatrix::zeros(n, n),
            cross: DMatrix::zeros(n, n),
            rhs: DVector::zeros(n),
            samples: SampleStore::new(),
            next_actions: Vec::new(),
        })
    }

    pub fn samples(&self) -> &SampleStore {
        &self.samples
    }

    /// Appends a sample; its next action is taken greedily from `policy`.
    pub fn push(&mut self, sample: Sample, policy: &LinearQ) -> Result<()> {
        let dim = self.state_dim;
        let s = &sample.state[..];
        if s.len() != dim || sample.action >= self.num_actions {
            return Err(Error::invalid("sample", "state length or action out of range"));
        }
        if s.iter().any(|v| !v.is_finite()) || !sample.reward.is_finite() {
            return Err(Error::NonFinite("sample"));
        }
        add_outer_block(&mut self.gram, dim, sample.action, sample.action, s, s, 1.0);
        let base = sample.action * dim;
        for (i, &si) in s.iter().enumerate() {
            self.rhs[base + i] += sample.reward * si;
        }
        let next_action = match &sample.next {
            Transition::Next(next) => {
                if next.len() != dim || next.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("sample next state"));
                }
                let b = policy.greedy(next);
                if self.gamma != 0.0 {
                    add_outer_block(&mut self.cross, dim, sample.action, b, s, next, 1.0);
                }
                Some(b)
            }
            Transition::Terminal => None,
        };
        self.next_actions.push(next_action);
        self.samples.push(sample);
        Ok(())
    }

    /// Re-evaluates the greedy next action of every sample under `policy`.
    /// Returns how many changed.
    pub fn set_policy(&mut self, policy: &LinearQ) -> usize {
        let dim = self.state_dim;
        let mut changed = 0;
        for (sample, cached) in self.samples.as_slice().iter().zip(self.next_actions.iter_mut()) {
            let (Transition::Next(next), Some(old)) = (&sample.next, cached.as_mut()) else {
                continue;
            };
            let new = policy.greedy(next);
            if new != *old {
                if self.gamma != 0.0 {
                    let s = &sample.state[..];
                    add_outer_block(&mut self.cross, dim, sample.action, *old, s, next, -1.0);
                    add_outer_block(&mut self.cross, dim, sample.action, new, s, next, 1.0);
                }
                *old = new;
                changed += 1;
            }
        }
        changed
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let mut a = &self.gram - &self.cross * self.gamma;
        for i in 0..a.nrows() {
            a[(i, i)] += self.delta;
        }
        solve_dense(a, self.rhs.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PolicyIterationOutcome {
    /// Number of LSTDQ solves performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Alternates LSTDQ with greedy improvement, starting from the policy the
/// system's cached next actions were computed with (`q`). Stops when the L∞
/// change of the weights drops below `tolerance` or after `max_iterations`
/// solves. When an improvement step changes no cached next action, or
/// `γ = 0` makes the system policy-independent, the next solve would
/// reproduce the same weights exactly, so iteration stops there.
pub fn policy_iteration(
    system: &mut LstdqSystem,
    q: &mut LinearQ,
    tolerance: f64,
    max_iterations: usize,
) -> Result<PolicyIterationOutcome> {
    let mut outcome = PolicyIterationOutcome::default();
    while outcome.iterations < max_iterations {
        let w = system.solve()?;
        outcome.iterations += 1;
        let change = w
            .iter()
            .zip(q.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        *q = LinearQ::from_weights(w, q.state_dim(), q.num_actions())?;
        let switched = system.set_policy(q);
        if change < tolerance || switched == 0 || system.gamma == 0.0 {
            outcome.converged = true;
            break;
        }
    }
    Ok(outcome)
}

/// Batch LSPI over a fixed sample set, starting from `initial`.
pub fn lspi(
    samples: &SampleStore,
    initial: &LinearQ,
    gamma: f64,
    delta: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(LinearQ, PolicyIterationOutcome)> {
    let mut system = LstdqSystem::new(initial.state_dim(), initial.num_actions(), gamma, delta)?;
    for sample in samples.iter() {
        system.push(sample.clone(), initial)?;
    }
    let mut q = initial.clone();
    let outcome = policy_iteration(&mut system, &mut q, tolerance, max_iterations)?;
    Ok((q, outcome))
}
