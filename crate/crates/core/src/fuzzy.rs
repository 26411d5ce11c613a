//! Triangular-membership fuzzy inference over a full rule lattice.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("input `{name}` has an invalid range [{lo}, {hi}]")]
    InvalidRange { name: String, lo: f64, hi: f64 },
    #[error("input `{name}` needs at least 2 membership functions, got {count}")]
    TooFewMemberships { name: String, count: usize },
    #[error("membership index {index} out of range for input with {count} functions")]
    MembershipIndex { index: usize, count: usize },
    #[error("expected {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observation component {0} is not finite")]
    NonFinite(usize),
    #[error("no rule fires for this observation")]
    NoActiveRule,
    #[error("length mismatch: {left} firing strengths vs {right} actions")]
    LengthMismatch { left: usize, right: usize },
    #[error("rule index {0} out of range")]
    RuleIndex(usize),
}

pub type Result<T> = std::result::Result<T, FuzzyError>;

/// One fuzzified input: `mf_count` evenly spaced triangles whose apexes sit
/// on `lo`, ..., `hi`, forming a partition of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub mf_count: usize,
}

impl InputSpec {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, mf_count: usize) -> Result<Self> {
        let name = name.into();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::InvalidRange { name, lo, hi });
        }
        if mf_count < 2 {
            return Err(FuzzyError::TooFewMemberships {
                name,
                count: mf_count,
            });
        }
        Ok(Self {
            name,
            lo,
            hi,
            mf_count,
        })
    }

    fn width(&self) -> f64 {
        (self.hi - self.lo) / (self.mf_count - 1) as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.width()
    }

    /// Degree of membership of `x` (clamped to the range) in function `k`.
    pub fn membership(&self, x: f64, k: usize) -> Result<f64> {
        if k >= self.mf_count {
            return Err(FuzzyError::MembershipIndex {
                index: k,
                count: self.mf_count,
            });
        }
        Ok(self.membership_unchecked(x.clamp(self.lo, self.hi), k))
    }

    fn membership_unchecked(&self, x: f64, k: usize) -> f64 {
        (1.0 - (x - self.center(k)).abs() / self.width()).max(0.0)
    }

    /// The (at most two) functions with nonzero membership at `x`.
    fn active(&self, x: f64) -> ([(usize, f64); 2], usize) {
        let x = x.clamp(self.lo, self.hi);
        let t = (x - self.lo) / self.width();
        let left = (t.floor() as usize).min(self.mf_count - 2);
        let mut out = [(0, 0.0); 2];
        let mut n = 0;
        for k in [left, left + 1] {
            let mu = self.membership_unchecked(x, k);
            if mu > 0.0 {
                out[n] = (k, mu);
                n += 1;
            }
        }
        (out, n)
    }
}

/// Firing strength of one rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    pub rule: usize,
    pub strength: f64,
}

/// Normalized firing strengths of the rules that fire, ordered by rule index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FiringStrengths {
    pub active: Vec<Activation>,
}

impl FiringStrengths {
    pub fn iter(&self) -> impl Iterator<Item = &Activation> {
        self.active.iter()
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Dense vector of length `rule_count`.
    pub fn to_dense(&self, rule_count: usize) -> Vec<f64> {
        let mut out = vec![0.0; rule_count];
        for a in &self.active {
            out[a.rule] = a.strength;
        }
        out
    }

    /// A single rule with full strength.
    pub fn single(rule: usize) -> Self {
        Self {
            active: vec![Activation {
                rule,
                strength: 1.0,
            }],
        }
    }
}

/// Rule lattice: one rule per combination of membership indices, numbered
/// lexicographically with the first input most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRuleBase {
    inputs: Vec<InputSpec>,
    rule_count: usize,
}

impl FuzzyRuleBase {
    pub fn new(inputs: Vec<InputSpec>) -> Self {
        let rule_count = inputs.iter().map(|i| i.mf_count).product();
        Self { inputs, rule_count }
    }

    pub fn inputs(&self) -> &[InputSpec] {
        &self.inputs
    }

    pub fn rule_count(&self) -> usize {
        self.rule_count
    }

    /// Membership indices of `rule`, one per input.
    pub fn rule_indices(&self, rule: usize) -> Result<Vec<usize>> {
        if rule >= self.rule_count {
            return Err(FuzzyError::RuleIndex(rule));
        }
        let mut rest = rule;
        let mut idx = vec![0; self.inputs.len()];
        for (slot, input) in idx.iter_mut().zip(&self.inputs).rev() {
            *slot = rest % input.mf_count;
            rest /= input.mf_count;
        }
        Ok(idx)
    }

    fn check(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.inputs.len() {
            return Err(FuzzyError::DimensionMismatch {
                expected: self.inputs.len(),
                got: obs.len(),
            });
        }
        if let Some(i) = obs.iter().position(|x| !x.is_finite()) {
            return Err(FuzzyError::NonFinite(i));
        }
        Ok(())
    }

    /// Normalized product-t-norm firing strengths. Only rules with a nonzero
    /// product are enumerated (at most 2^n of them).
    pub fn firing_strengths(&self, obs: &[f64]) -> Result<FiringStrengths> {
        self.check(obs)?;
        let mut partial: Vec<(usize, f64)> = vec![(0, 1.0)];
        for (input, &x) in self.inputs.iter().zip(obs) {
            let (act, n) = input.active(x);
            let mut next = Vec::with_capacity(partial.len() * n);
            for &(rule, w) in &partial {
                for &(k, mu) in &act[..n] {
                    next.push((rule * input.mf_count + k, w * mu));
                }
            }
            partial = next;
        }
        let total: f64 = partial.iter().map(|p| p.1).sum();
        if partial.is_empty() || total <= 0.0 {
            return Err(FuzzyError::NoActiveRule);
        }
        Ok(FiringStrengths {
            active: partial
                .into_iter()
                .map(|(rule, w)| Activation {
                    rule,
                    strength: w / total,
                })
                .collect(),
        })
    }

    /// Dense evaluation over every rule; identical values to
    /// [`Self::firing_strengths`] for the rules that fire.
    pub fn firing_strengths_dense(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check(obs)?;
        let mut products = Vec::with_capacity(self.rule_count);
        for rule in 0..self.rule_count {
            let idx = self.rule_indices(rule)?;
            let mut w = 1.0;
            for ((input, &x), k) in self.inputs.iter().zip(obs).zip(idx) {
                w *= input.membership(x, k)?;
            }
            products.push(w);
        }
        let total: f64 = products.iter().sum();
        if total <= 0.0 {
            return Err(FuzzyError::NoActiveRule);
        }
        Ok(products.into_iter().map(|w| w / total).collect())
    }
}

/// Weighted combination `Σ Φ^l a^l` over a dense firing vector.
pub fn defuzzify(phi: &[f64], actions: &[f64]) -> Result<f64> {
    if phi.len() != actions.len() {
        return Err(FuzzyError::LengthMismatch {
            left: phi.len(),
            right: actions.len(),
        });
    }
    Ok(phi.iter().zip(actions).map(|(p, a)| p * a).sum())
}

/// Sparse counterpart of [`defuzzify`]: `actions[i]` is the consequent of
/// `phi.active[i]`.
pub fn defuzzify_sparse(phi: &FiringStrengths, actions: &[f64]) -> Result<f64> {
    if phi.len() != actions.len() {
        return Err(FuzzyError::LengthMismatch {
            left: phi.len(),
            right: actions.len(),
        });
    }
    Ok(phi.iter().zip(actions).map(|(p, a)| p.strength * a).sum())
}
