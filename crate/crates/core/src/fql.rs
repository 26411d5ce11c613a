//! Single-objective fuzzy Q-learning over a scalarized reward.

use rand::Rng;
use thiserror::Error;

use crate::fuzzy::FiringStrengths;
use crate::pareto::{sample_index, softmax, ObjectiveVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FqlError {
    #[error("table needs at least one rule and one action")]
    EmptyTable,
    #[error("learning rate must be finite and non-negative, got {0}")]
    InvalidLearningRate(f64),
    #[error("discount factor must lie in [0, 1], got {0}")]
    InvalidDiscount(f64),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("reward is not finite")]
    NonFiniteReward,
    #[error("{chosen} chosen actions for {active} active rules")]
    ChoiceMismatch { chosen: usize, active: usize },
    #[error("no transitions to back up")]
    NoTransitions,
}

pub type Result<T> = std::result::Result<T, FqlError>;

/// Rule × action table of scalar Q-values.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    rules: usize,
    actions: usize,
    q: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl QTable {
    pub fn new(rules: usize, actions: usize, alpha: f64, gamma: f64, tau: f64) -> Result<Self> {
        Self::filled(rules, actions, alpha, gamma, tau, 0.0)
    }

    pub fn filled(
        rules: usize,
        actions: usize,
        alpha: f64,
        gamma: f64,
        tau: f64,
        init: f64,
    ) -> Result<Self> {
        if rules == 0 || actions == 0 {
            return Err(FqlError::EmptyTable);
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(FqlError::InvalidLearningRate(alpha));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(FqlError::InvalidDiscount(gamma));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(FqlError::InvalidTemperature(tau));
        }
        Ok(Self {
            rules,
            actions,
            q: vec![init; rules * actions],
            alpha,
            gamma,
            tau,
        })
    }

    pub fn rules(&self) -> usize {
        self.rules
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, rule: usize, action: usize) -> f64 {
        self.q[rule * self.actions + action]
    }

    pub fn set(&mut self, rule: usize, action: usize, value: f64) {
        self.q[rule * self.actions + action] = value;
    }

    pub fn row(&self, rule: usize) -> &[f64] {
        &self.q[rule * self.actions..(rule + 1) * self.actions]
    }

    /// Boltzmann probabilities `exp(τ Q(l,a)) / Σ exp(τ Q(l,·))`.
    pub fn action_probabilities(&self, rule: usize) -> Vec<f64> {
        softmax(self.row(rule), self.tau)
    }

    pub fn select_action<R: Rng + ?Sized>(&self, rule: usize, rng: &mut R) -> usize {
        sample_index(&self.action_probabilities(rule), rng)
    }

    /// One sampled action per rule, for every rule of the table.
    pub fn select_actions<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.rules).map(|l| self.select_action(l, rng)).collect()
    }

    pub fn greedy_action(&self, rule: usize) -> usize {
        let row = self.row(rule);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    /// `Σ Φ^l Q(l, a^l)`; `chosen[i]` belongs to `phi.active[i]`.
    pub fn global_q(&self, phi: &FiringStrengths, chosen: &[usize]) -> Result<f64> {
        if chosen.len() != phi.len() {
            return Err(FqlError::ChoiceMismatch {
                chosen: chosen.len(),
                active: phi.len(),
            });
        }
        Ok(phi
            .iter()
            .zip(chosen)
            .map(|(p, &a)| p.strength * self.get(p.rule, a))
            .sum())
    }

    /// `Σ Φ^l max_a Q(l, a)`.
    pub fn global_q_max(&self, phi: &FiringStrengths) -> f64 {
        phi.iter()
            .map(|p| {
                let best = self.row(p.rule).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                p.strength * best
            })
            .sum()
    }

    /// Applies one TD update. `phi_next = None` marks a terminal transition,
    /// which drops the bootstrap term. Returns the TD error.
    pub fn td_update(
        &mut self,
        phi: &FiringStrengths,
        chosen: &[usize],
        reward: f64,
        phi_next: Option<&FiringStrengths>,
    ) -> Result<f64> {
        if !reward.is_finite() {
            return Err(FqlError::NonFiniteReward);
        }
        let bootstrap = phi_next.map_or(0.0, |n| self.gamma * self.global_q_max(n));
        let td = reward + bootstrap - self.global_q(phi, chosen)?;
        for (p, &a) in phi.iter().zip(chosen) {
            let i = p.rule * self.actions + a;
            self.q[i] += self.alpha * td * p.strength;
        }
        Ok(td)
    }
}

/// `k1·r_EP + k2·r_ET + k3·r_EO`.
pub fn scalar_reward(reward: &ObjectiveVector, weights: [f64; 3]) -> f64 {
    weights[0] * reward.evade + weights[1] * reward.reach + weights[2] * reward.avoid
}

/// `max over (r, V') of r + γ V'`.
pub fn scalar_bellman_value(transitions: &[(f64, f64)], gamma: f64) -> Result<f64> {
    if transitions.is_empty() {
        return Err(FqlError::NoTransitions);
    }
    Ok(transitions
        .iter()
        .map(|&(r, v)| r + gamma * v)
        .fold(f64::NEG_INFINITY, f64::max))
}
