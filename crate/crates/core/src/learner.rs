//! Multi-objective fuzzy Q-learning.
//!
//! Every (rule, action) pair owns a set of non-dominated Q-vectors. Actions
//! are picked per rule by a softmax over normalized hypervolumes, global
//! Q-vectors are formed per preference ray from the ray-nearest member of
//! each rule's non-dominated union, and updates apply one vector TD error
//! per ray before filtering and pruning the result back to a bounded size.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::fuzzy::FiringStrengths;
use crate::pareto::{
    hypervolume3, hypervolume_of, nd_filter, nearest_index, nondominated_indices,
    normalize_and_select, selection_probabilities, NdSet, ObjectiveVector, ParetoError, Ray,
};

/// Seed value of every Q-set before training.
pub const INITIAL_Q: ObjectiveVector = ObjectiveVector::splat(0.01);

const STORE_HEADER: &str = "# mofql-store v1";

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error("store needs at least one rule, one action and one ray")]
    EmptyStore,
    #[error("invalid learner parameter: {0}")]
    InvalidParameter(String),
    #[error("{chosen} chosen actions for {active} active rules")]
    ChoiceMismatch { chosen: usize, active: usize },
    #[error("rule {rule} / action {action} out of range")]
    OutOfRange { rule: usize, action: usize },
    #[error("expected {expected} error matrices (one per ray), got {got}")]
    ErrorCount { expected: usize, got: usize },
    #[error("error matrix has {got} rows, Q-set has {expected}")]
    ErrorShape { expected: usize, got: usize },
    #[error("store file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LearnerError>;

/// Hyper-parameters of a [`MoqStore`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerParams {
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Maximum rows per Q-set; `None` means one per ray.
    pub prune_limit: Option<usize>,
}

/// Per-ray global Q-vectors for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPolicySnapshot {
    pub values: Vec<ObjectiveVector>,
}

impl GlobalPolicySnapshot {
    pub fn zeros(rays: usize) -> Self {
        Self {
            values: vec![ObjectiveVector::ZERO; rays],
        }
    }
}

#[derive(Debug, Clone)]
pub struct MoqStore {
    rules: usize,
    actions: usize,
    qsets: Vec<NdSet>,
    rays: Vec<Ray>,
    directions: Vec<ObjectiveVector>,
    alpha: f64,
    gamma: f64,
    tau: f64,
    prune_limit: usize,
    // Derived state, rebuilt from `qsets` whenever a set changes.
    hv: Vec<f64>,
    ray_best: Vec<ObjectiveVector>,
}

impl PartialEq for MoqStore {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
            && self.actions == other.actions
            && self.qsets == other.qsets
            && self.rays == other.rays
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.gamma.to_bits() == other.gamma.to_bits()
            && self.tau.to_bits() == other.tau.to_bits()
            && self.prune_limit == other.prune_limit
    }
}

fn validate(params: &LearnerParams) -> Result<()> {
    let bad = |m: String| Err(LearnerError::InvalidParameter(m));
    if !(params.alpha.is_finite() && params.alpha >= 0.0) {
        return bad(format!("alpha = {}", params.alpha));
    }
    if !(0.0..=1.0).contains(&params.gamma) {
        return bad(format!("gamma = {}", params.gamma));
    }
    if !(params.tau.is_finite() && params.tau > 0.0) {
        return bad(format!("tau = {}", params.tau));
    }
    if params.prune_limit == Some(0) {
        return bad("prune_limit = 0".into());
    }
    Ok(())
}

impl MoqStore {
    /// A store whose Q-sets all start as `{INITIAL_Q}`.
    pub fn new(rules: usize, actions: usize, rays: Vec<Ray>, params: LearnerParams) -> Result<Self> {
        Self::with_initial(rules, actions, rays, params, INITIAL_Q)
    }

    pub fn with_initial(
        rules: usize,
        actions: usize,
        rays: Vec<Ray>,
        params: LearnerParams,
        initial: ObjectiveVector,
    ) -> Result<Self> {
        let qsets = vec![NdSet::singleton(initial); rules * actions];
        Self::from_parts(rules, actions, rays, params, qsets)
    }

    fn from_parts(
        rules: usize,
        actions: usize,
        rays: Vec<Ray>,
        params: LearnerParams,
        qsets: Vec<NdSet>,
    ) -> Result<Self> {
        if rules == 0 || actions == 0 || rays.is_empty() {
            return Err(LearnerError::EmptyStore);
        }
        validate(&params)?;
        let directions = rays.iter().map(Ray::direction).collect();
        let prune_limit = params.prune_limit.unwrap_or(rays.len());
        let mut store = Self {
            rules,
            actions,
            qsets,
            directions,
            alpha: params.alpha,
            gamma: params.gamma,
            tau: params.tau,
            prune_limit,
            hv: vec![0.0; rules * actions],
            ray_best: vec![ObjectiveVector::ZERO; rules * rays.len()],
            rays,
        };
        for i in 0..rules * actions {
            store.hv[i] = hypervolume3(&store.qsets[i])?;
        }
        for l in 0..rules {
            store.refresh_rule(l);
        }
        Ok(store)
    }

    pub fn rules(&self) -> usize {
        self.rules
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn params(&self) -> LearnerParams {
        LearnerParams {
            alpha: self.alpha,
            gamma: self.gamma,
            tau: self.tau,
            prune_limit: Some(self.prune_limit),
        }
    }

    pub fn prune_limit(&self) -> usize {
        self.prune_limit
    }

    fn slot(&self, rule: usize, action: usize) -> Result<usize> {
        if rule >= self.rules || action >= self.actions {
            return Err(LearnerError::OutOfRange { rule, action });
        }
        Ok(rule * self.actions + action)
    }

    pub fn qset(&self, rule: usize, action: usize) -> &NdSet {
        &self.qsets[rule * self.actions + action]
    }

    /// Replaces one Q-set wholesale (used for seeding experiments).
    pub fn set_qset(&mut self, rule: usize, action: usize, set: NdSet) -> Result<()> {
        let i = self.slot(rule, action)?;
        self.hv[i] = hypervolume3(&set)?;
        self.qsets[i] = set;
        self.refresh_rule(rule);
        Ok(())
    }

    /// Hypervolume of every action's Q-set for `rule`.
    pub fn hypervolumes(&self, rule: usize) -> &[f64] {
        &self.hv[rule * self.actions..(rule + 1) * self.actions]
    }

    pub fn action_probabilities(&self, rule: usize) -> Result<Vec<f64>> {
        Ok(selection_probabilities(self.hypervolumes(rule), self.tau)?.1)
    }

    /// Samples an action for `rule` by hypervolume softmax.
    pub fn select_action_hv<R: Rng + ?Sized>(&self, rule: usize, rng: &mut R) -> Result<usize> {
        self.slot(rule, 0)?;
        Ok(normalize_and_select(self.hypervolumes(rule), self.tau, rng)?.index)
    }

    /// Non-dominated union of all action Q-sets of `rule`.
    pub fn rule_global_nd(&self, rule: usize) -> NdSet {
        let union: Vec<ObjectiveVector> = self.qsets[rule * self.actions..(rule + 1) * self.actions]
            .iter()
            .flat_map(|s| s.rows().iter().copied())
            .collect();
        let keep = nondominated_indices(&union);
        NdSet::from_rows_unchecked(keep.into_iter().map(|i| union[i]).collect(), ObjectiveVector::ZERO)
    }

    fn refresh_rule(&mut self, rule: usize) {
        let nd = self.rule_global_nd(rule);
        let h = self.rays.len();
        for (i, dir) in self.directions.iter().enumerate() {
            self.ray_best[rule * h + i] = nd.rows()[nearest_index(nd.rows(), dir)];
        }
    }

    /// The member of `rule`'s non-dominated union nearest to ray `ray`.
    pub fn ray_selected(&self, rule: usize, ray: usize) -> ObjectiveVector {
        self.ray_best[rule * self.rays.len() + ray]
    }

    /// `Q*_i = Σ_l Φ^l G*_{l,i}` for every ray `i`.
    pub fn ray_global_q(&self, phi: &FiringStrengths) -> GlobalPolicySnapshot {
        let h = self.rays.len();
        let mut values = vec![ObjectiveVector::ZERO; h];
        for act in phi.iter().filter(|a| a.strength > 0.0) {
            let best = &self.ray_best[act.rule * h..(act.rule + 1) * h];
            for (v, g) in values.iter_mut().zip(best) {
                *v = *v + act.strength * *g;
            }
        }
        GlobalPolicySnapshot { values }
    }

    /// Row-aligned TD errors `(r + γ Q*_i) - q_t(l,a)`, one matrix per ray.
    pub fn mo_td_errors(
        &self,
        reward: ObjectiveVector,
        next: &GlobalPolicySnapshot,
        rule: usize,
        action: usize,
    ) -> Result<Vec<Vec<ObjectiveVector>>> {
        if !reward.is_finite() {
            return Err(ParetoError::NonFinite.into());
        }
        let i = self.slot(rule, action)?;
        let current = self.qsets[i].rows();
        Ok(next
            .values
            .iter()
            .map(|&q_star| {
                let target = reward + self.gamma * q_star;
                current.iter().map(|&row| target - row).collect()
            })
            .collect())
    }

    /// `q ← prune(ND(⋃_i q ⊕ α Φ ε_i))`. A zero firing strength (or α = 0)
    /// leaves the set untouched.
    pub fn update_qsets(
        &mut self,
        rule: usize,
        action: usize,
        phi: f64,
        errors: &[Vec<ObjectiveVector>],
    ) -> Result<&NdSet> {
        let i = self.slot(rule, action)?;
        if errors.is_empty() {
            return Err(LearnerError::ErrorCount {
                expected: self.rays.len(),
                got: 0,
            });
        }
        let step = self.alpha * phi;
        if step == 0.0 {
            return Ok(&self.qsets[i]);
        }
        let current = self.qsets[i].rows();
        let mut candidates = Vec::with_capacity(current.len() * errors.len());
        for err in errors {
            if err.len() != current.len() {
                return Err(LearnerError::ErrorShape {
                    expected: current.len(),
                    got: err.len(),
                });
            }
            candidates.extend(current.iter().zip(err).map(|(&q, &e)| q + step * e));
        }
        let nd = nd_filter(&candidates)?;
        let rows = prune_rows(nd.into_rows(), &self.directions, self.prune_limit);
        let set = NdSet::from_rows_unchecked(rows, ObjectiveVector::ZERO);
        self.hv[i] = hypervolume3(&set)?;
        self.qsets[i] = set;
        self.refresh_rule(rule);
        Ok(&self.qsets[i])
    }

    /// One learning step. `chosen[k]` is the action picked for
    /// `phi.active[k]`; a terminal transition zeroes the bootstrap term.
    pub fn train_step(
        &mut self,
        phi: &FiringStrengths,
        chosen: &[usize],
        reward: ObjectiveVector,
        phi_next: &FiringStrengths,
        terminal: bool,
    ) -> Result<()> {
        if chosen.len() != phi.len() {
            return Err(LearnerError::ChoiceMismatch {
                chosen: chosen.len(),
                active: phi.len(),
            });
        }
        let next = if terminal {
            GlobalPolicySnapshot::zeros(self.rays.len())
        } else {
            self.ray_global_q(phi_next)
        };
        // Rays sharing a target produce identical candidates; keep one.
        let mut unique = GlobalPolicySnapshot { values: Vec::new() };
        for v in &next.values {
            if !unique.values.contains(v) {
                unique.values.push(*v);
            }
        }
        for (act, &a) in phi.iter().zip(chosen) {
            if act.strength <= 0.0 {
                continue;
            }
            let errors = self.mo_td_errors(reward, &unique, act.rule, a)?;
            self.update_qsets(act.rule, a, act.strength, &errors)?;
        }
        Ok(())
    }

    /// Greedy consequent for `rule` under a single preference ray: the action
    /// whose ray-nearest Q-vector has the largest hypervolume, ties broken by
    /// the larger projection onto the ray, then by lower index.
    pub fn greedy_action(&self, rule: usize, ray: &Ray) -> usize {
        let dir = ray.direction();
        let mut best = 0;
        let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for a in 0..self.actions {
            let rows = self.qset(rule, a).rows();
            let v = rows[nearest_index(rows, &dir)];
            let hv = hypervolume_of(&[v], ObjectiveVector::ZERO).unwrap_or(0.0);
            let key = (hv, v.dot(&dir));
            if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
                best = a;
                best_key = key;
            }
        }
        best
    }

    /// Writes the store in its versioned plain-text form. Floats use the
    /// shortest round-trip representation, so reading back is bit-exact.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{STORE_HEADER}")?;
        writeln!(
            w,
            "rules {} actions {} rays {}",
            self.rules,
            self.actions,
            self.rays.len()
        )?;
        writeln!(w, "alpha {}", self.alpha)?;
        writeln!(w, "gamma {}", self.gamma)?;
        writeln!(w, "tau {}", self.tau)?;
        writeln!(w, "prune_limit {}", self.prune_limit)?;
        for r in &self.rays {
            writeln!(w, "ray {} {}", r.theta, r.phi)?;
        }
        for l in 0..self.rules {
            for a in 0..self.actions {
                let set = self.qset(l, a);
                writeln!(w, "qset {l} {a} {}", set.len())?;
                for row in set.rows() {
                    writeln!(w, "{} {} {}", row.evade, row.reach, row.avoid)?;
                }
            }
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("store text is ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = StoreLines::new(r);
        let header = lines.next_line()?;
        if header.trim() != STORE_HEADER {
            return Err(lines.error(format!("bad header `{}`", header.trim())));
        }
        let dims = lines.keyed_fields("rules", 5)?;
        if dims[1] != "actions" || dims[3] != "rays" {
            return Err(lines.error("expected `rules R actions A rays H`".into()));
        }
        let rules: usize = lines.parse(&dims[0])?;
        let actions: usize = lines.parse(&dims[2])?;
        let ray_count: usize = lines.parse(&dims[4])?;
        let alpha: f64 = lines.keyed("alpha")?;
        let gamma: f64 = lines.keyed("gamma")?;
        let tau: f64 = lines.keyed("tau")?;
        let prune_limit: usize = lines.keyed("prune_limit")?;
        let mut rays = Vec::with_capacity(ray_count);
        for _ in 0..ray_count {
            let f = lines.keyed_fields("ray", 2)?;
            let (t, p) = (lines.parse(&f[0])?, lines.parse(&f[1])?);
            rays.push(Ray::new(t, p).map_err(|e| lines.error(e.to_string()))?);
        }
        let mut qsets = Vec::with_capacity(rules * actions);
        for l in 0..rules {
            for a in 0..actions {
                let f = lines.keyed_fields("qset", 3)?;
                let (fl, fa): (usize, usize) = (lines.parse(&f[0])?, lines.parse(&f[1])?);
                if (fl, fa) != (l, a) {
                    return Err(lines.error(format!("expected qset {l} {a}, found {fl} {fa}")));
                }
                let k: usize = lines.parse(&f[2])?;
                let mut rows = Vec::with_capacity(k);
                for _ in 0..k {
                    let line = lines.next_line()?;
                    let vals: Vec<&str> = line.split_whitespace().collect();
                    if vals.len() != 3 {
                        return Err(lines.error("expected three numbers".into()));
                    }
                    rows.push(ObjectiveVector::new(
                        lines.parse(vals[0])?,
                        lines.parse(vals[1])?,
                        lines.parse(vals[2])?,
                    ));
                }
                let set = NdSet::from_rows(rows, ObjectiveVector::ZERO)
                    .map_err(|e| lines.error(e.to_string()))?;
                qsets.push(set);
            }
        }
        if lines.next_line()?.trim() != "end" {
            return Err(lines.error("missing `end`".into()));
        }
        let params = LearnerParams {
            alpha,
            gamma,
            tau,
            prune_limit: Some(prune_limit),
        };
        Self::from_parts(rules, actions, rays, params, qsets)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

struct StoreLines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> StoreLines<R> {
    fn new(r: R) -> Self {
        Self {
            inner: r.lines(),
            line: 0,
        }
    }

    fn error(&self, msg: String) -> LearnerError {
        LearnerError::Parse {
            line: self.line,
            msg,
        }
    }

    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.error("unexpected end of file".into())),
        }
    }

    fn keyed_fields(&mut self, key: &str, n: usize) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.error(format!("expected `{key}`")));
        }
        let rest: Vec<String> = it.map(str::to_owned).collect();
        if rest.len() != n {
            return Err(self.error(format!("`{key}` takes {n} fields")));
        }
        Ok(rest)
    }

    fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let f = self.keyed_fields(key, 1)?;
        self.parse(&f[0])
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.error(format!("cannot parse `{s}`")))
    }
}

/// Bounds a non-dominated row list to `limit` rows: first the row nearest to
/// each ray, then evenly strided picks from the rest ordered by azimuth.
/// Survivors keep their original relative order.
pub fn prune_rows(
    rows: Vec<ObjectiveVector>,
    directions: &[ObjectiveVector],
    limit: usize,
) -> Vec<ObjectiveVector> {
    if rows.len() <= limit {
        return rows;
    }
    let mut taken = vec![false; rows.len()];
    let mut kept = Vec::with_capacity(limit);
    let norms: Vec<f64> = rows.iter().map(|q| q.dot(q)).collect();
    for dir in directions {
        let i = nearest_index_with_norms(&rows, &norms, dir);
        if !taken[i] {
            taken[i] = true;
            kept.push(i);
        }
    }
    kept.truncate(limit);
    if kept.len() < limit {
        let mut rest: Vec<(usize, f64, f64)> = (0..rows.len())
            .filter(|&i| !taken[i])
            .map(|i| {
                let s = rows[i].to_spherical();
                (i, s.phi, s.theta)
            })
            .collect();
        rest.sort_unstable_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(Ordering::Equal)
                .then(a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal))
                .then(a.0.cmp(&b.0))
        });
        let need = limit - kept.len();
        let n = rest.len();
        kept.extend((0..need).map(|j| rest[j * n / need].0));
    }
    kept.sort_unstable();
    kept.into_iter().map(|i| rows[i]).collect()
}

/// [`nearest_index`] with the squared row norms precomputed.
fn nearest_index_with_norms(rows: &[ObjectiveVector], norms: &[f64], dir: &ObjectiveVector) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, (q, n)) in rows.iter().zip(norms).enumerate() {
        let along = q.dot(dir);
        let d2 = (n - along * along).max(0.0);
        if d2 < best_d2 {
            best = i;
            best_d2 = d2;
        }
    }
    best
}

/// Hypervolume of the non-dominated episode returns in the last `window`
/// entries, measured from the componentwise minimum of those returns and
/// the origin.
pub fn global_hypervolume_metric(returns: &[ObjectiveVector], window: usize) -> Result<f64> {
    if window == 0 {
        return Err(LearnerError::InvalidParameter("window = 0".into()));
    }
    if returns.is_empty() {
        return Err(ParetoError::Empty.into());
    }
    let recent = &returns[returns.len().saturating_sub(window)..];
    let reference = recent
        .iter()
        .fold(ObjectiveVector::ZERO, |acc, r| acc.min(r));
    let nd = nd_filter(recent)?.with_reference(reference);
    Ok(hypervolume3(&nd)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::Activation;
    use crate::pareto::{sample_rays, RaySpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn v(e: f64, r: f64, a: f64) -> ObjectiveVector {
        ObjectiveVector::new(e, r, a)
    }

    fn params(alpha: f64, gamma: f64) -> LearnerParams {
        LearnerParams {
            alpha,
            gamma,
            tau: 1.0,
            prune_limit: None,
        }
    }

    fn x_ray() -> Vec<Ray> {
        vec![Ray::new(FRAC_PI_2, 0.0).unwrap()]
    }

    fn eq19() -> Vec<ObjectiveVector> {
        vec![
            v(12.0, 3.0, 2.0),
            v(9.0, 7.0, 5.0),
            v(3.0, 13.0, 2.0),
            v(6.0, 9.0, 8.0),
            v(4.0, 4.0, 10.0),
            v(1.0, 1.0, 14.0),
        ]
    }

    #[test]
    fn table1_selection_distribution() {
        let mut store = MoqStore::new(1, 6, x_ray(), params(0.01, 0.9)).unwrap();
        for (a, row) in eq19().into_iter().enumerate() {
            store.set_qset(0, a, NdSet::singleton(row)).unwrap();
        }
        let p = store.action_probabilities(0).unwrap();
        let want = [0.1494, 0.1875, 0.1503, 0.2091, 0.1622, 0.1415];
        for (got, w) in p.iter().zip(want) {
            assert!((got - w).abs() <= 5e-5);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = [0usize; 6];
        for _ in 0..20_000 {
            counts[store.select_action_hv(0, &mut rng).unwrap()] += 1;
        }
        let top = (0..6).max_by_key(|&i| counts[i]).unwrap();
        assert_eq!(top, 3);
    }

    #[test]
    fn identical_sets_give_uniform_selection() {
        let store = MoqStore::new(2, 4, x_ray(), params(0.01, 0.9)).unwrap();
        assert_eq!(store.action_probabilities(1).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn rule_union_examples() {
        let mut store = MoqStore::new(1, 2, x_ray(), params(0.01, 0.9)).unwrap();
        store.set_qset(0, 0, NdSet::singleton(v(1.0, 0.0, 0.0))).unwrap();
        store.set_qset(0, 1, NdSet::singleton(v(0.0, 1.0, 0.0))).unwrap();
        assert_eq!(store.rule_global_nd(0).len(), 2);
        store.set_qset(0, 0, NdSet::singleton(v(1.0, 1.0, 1.0))).unwrap();
        store.set_qset(0, 1, NdSet::singleton(v(2.0, 2.0, 2.0))).unwrap();
        assert_eq!(store.rule_global_nd(0).rows(), &[v(2.0, 2.0, 2.0)]);

        let single = MoqStore::new(1, 1, x_ray(), params(0.01, 0.9)).unwrap();
        assert_eq!(single.rule_global_nd(0), *single.qset(0, 0));
    }

    #[test]
    fn ray_global_q_weighting() {
        let mut store = MoqStore::new(3, 1, x_ray(), params(0.01, 0.9)).unwrap();
        store
            .set_qset(0, 0, NdSet::from_rows(vec![v(4.0, 0.0, 0.0), v(0.0, 4.0, 0.0)], ObjectiveVector::ZERO).unwrap())
            .unwrap();
        store.set_qset(2, 0, NdSet::singleton(v(1.0, 2.0, 3.0))).unwrap();

        let one = store.ray_global_q(&FiringStrengths::single(0));
        assert_eq!(one.values, vec![v(4.0, 0.0, 0.0)]);

        let phi = FiringStrengths {
            active: vec![
                Activation {
                    rule: 0,
                    strength: 0.25,
                },
                Activation {
                    rule: 2,
                    strength: 0.75,
                },
            ],
        };
        let snap = store.ray_global_q(&phi);
        let want = v(0.25 * 4.0 + 0.75 * 1.0, 0.75 * 2.0, 0.75 * 3.0);
        assert!((snap.values[0] - want).norm() < 1e-12);
    }

    #[test]
    fn identical_sets_give_identical_global_q() {
        let rays = sample_rays(&RaySpec::Count(5)).unwrap();
        let store = MoqStore::with_initial(4, 2, rays, params(0.1, 0.9), v(0.3, 0.2, 0.1)).unwrap();
        let phi = FiringStrengths {
            active: (0..4)
                .map(|rule| Activation {
                    rule,
                    strength: 0.25,
                })
                .collect(),
        };
        for q in store.ray_global_q(&phi).values {
            assert!((q - v(0.3, 0.2, 0.1)).norm() < 1e-15);
        }
    }

    #[test]
    fn td_error_examples() {
        let mut store = MoqStore::new(1, 1, x_ray(), params(0.1, 0.0)).unwrap();
        store.set_qset(0, 0, NdSet::singleton(ObjectiveVector::ZERO)).unwrap();
        let snap = GlobalPolicySnapshot {
            values: vec![v(9.0, 9.0, 9.0)],
        };
        let e = store.mo_td_errors(v(1.0, 2.0, 3.0), &snap, 0, 0).unwrap();
        assert_eq!(e, vec![vec![v(1.0, 2.0, 3.0)]]);

        let mut store = MoqStore::new(1, 1, x_ray(), params(0.1, 0.5)).unwrap();
        store
            .set_qset(0, 0, NdSet::from_rows(vec![v(1.0, 1.0, 1.0), v(0.0, 2.0, 1.0)], ObjectiveVector::ZERO).unwrap())
            .unwrap();
        let snap = GlobalPolicySnapshot {
            values: vec![v(2.0, 2.0, 2.0)],
        };
        let e = store.mo_td_errors(v(1.0, 1.0, 1.0), &snap, 0, 0).unwrap();
        assert_eq!(e, vec![vec![v(1.0, 1.0, 1.0), v(2.0, 0.0, 1.0)]]);

        let target_rows = store.qset(0, 0).rows().to_vec();
        assert!(target_rows.len() == 2);
        let snap = GlobalPolicySnapshot {
            values: vec![ObjectiveVector::ZERO],
        };
        let mut fixed = MoqStore::new(1, 1, x_ray(), params(0.1, 0.5)).unwrap();
        fixed.set_qset(0, 0, NdSet::singleton(v(1.0, 1.0, 1.0))).unwrap();
        let e = fixed.mo_td_errors(v(1.0, 1.0, 1.0), &snap, 0, 0).unwrap();
        assert_eq!(e, vec![vec![ObjectiveVector::ZERO]]);
    }

    #[test]
    fn update_examples() {
        let mut store = MoqStore::new(1, 1, x_ray(), params(1.0, 0.9)).unwrap();
        store.set_qset(0, 0, NdSet::singleton(v(1.0, 1.0, 1.0))).unwrap();
        let out = store.update_qsets(0, 0, 1.0, &[vec![v(1.0, 0.0, 0.0)]]).unwrap();
        assert_eq!(out.rows(), &[v(2.0, 1.0, 1.0)]);

        let mut frozen = MoqStore::new(1, 1, x_ray(), params(0.0, 0.9)).unwrap();
        let before = frozen.clone();
        frozen.update_qsets(0, 0, 1.0, &[vec![v(5.0, 5.0, 5.0)]]).unwrap();
        assert_eq!(frozen, before);

        let rays = vec![Ray::new(FRAC_PI_2, 0.0).unwrap(), Ray::new(FRAC_PI_2, FRAC_PI_2).unwrap()];
        let mut two = MoqStore::new(1, 1, rays, params(1.0, 0.9)).unwrap();
        two.set_qset(0, 0, NdSet::singleton(v(1.0, 1.0, 1.0))).unwrap();
        let out = two
            .update_qsets(0, 0, 1.0, &[vec![v(1.0, 0.0, 0.0)], vec![v(0.0, 1.0, 0.0)]])
            .unwrap();
        assert_eq!(out.rows(), &[v(2.0, 1.0, 1.0), v(1.0, 2.0, 1.0)]);
    }

    #[test]
    fn update_shape_errors() {
        let mut store = MoqStore::new(1, 1, x_ray(), params(1.0, 0.9)).unwrap();
        assert!(matches!(
            store.update_qsets(0, 0, 1.0, &[vec![]]),
            Err(LearnerError::ErrorShape { .. })
        ));
        assert!(matches!(
            store.update_qsets(3, 0, 1.0, &[vec![]]),
            Err(LearnerError::OutOfRange { .. })
        ));
    }

    #[test]
    fn train_step_touches_only_active_rule() {
        let rays = sample_rays(&RaySpec::Count(3)).unwrap();
        let mut store = MoqStore::new(3, 2, rays, params(0.5, 0.9)).unwrap();
        let before = store.clone();
        store
            .train_step(&FiringStrengths::single(1), &[0], v(1.0, -1.0, 0.5), &FiringStrengths::single(2), false)
            .unwrap();
        for l in 0..3 {
            for a in 0..2 {
                if (l, a) == (1, 0) {
                    assert_ne!(store.qset(l, a), before.qset(l, a));
                } else {
                    assert_eq!(store.qset(l, a), before.qset(l, a));
                }
            }
        }
    }

    #[test]
    fn terminal_step_ignores_next_state() {
        let mut a = MoqStore::new(2, 1, x_ray(), params(1.0, 0.9)).unwrap();
        a.set_qset(1, 0, NdSet::singleton(v(100.0, 100.0, 100.0))).unwrap();
        let mut b = a.clone();
        let r = v(1.0, 2.0, 3.0);
        a.train_step(&FiringStrengths::single(0), &[0], r, &FiringStrengths::single(1), true)
            .unwrap();
        b.train_step(&FiringStrengths::single(0), &[0], r, &FiringStrengths::single(0), true)
            .unwrap();
        assert_eq!(a.qset(0, 0).rows(), &[r]);
        assert_eq!(a, b);
    }

    #[test]
    fn pruning_keeps_ray_anchors() {
        let rows: Vec<ObjectiveVector> = (0..20)
            .map(|i| {
                let t = i as f64 / 19.0 * FRAC_PI_2;
                v(t.cos(), t.sin(), 0.5)
            })
            .collect();
        let dirs = vec![v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)];
        let pruned = prune_rows(rows.clone(), &dirs, 5);
        assert_eq!(pruned.len(), 5);
        assert!(pruned.contains(&rows[0]));
        assert!(pruned.contains(&rows[19]));
        assert_eq!(prune_rows(rows.clone(), &dirs, 30), rows);
        assert_eq!(prune_rows(rows.clone(), &dirs, 1), vec![rows[0]]);
    }

    #[test]
    fn store_round_trip_is_bit_exact() {
        let rays = sample_rays(&RaySpec::Count(4)).unwrap();
        let mut store = MoqStore::new(2, 3, rays, params(0.1, 0.7)).unwrap();
        let phi = FiringStrengths {
            active: vec![
                Activation {
                    rule: 0,
                    strength: 0.3,
                },
                Activation {
                    rule: 1,
                    strength: 0.7,
                },
            ],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let chosen = [rng.gen_range(0..3), rng.gen_range(0..3)];
            let r = v(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            store.train_step(&phi, &chosen, r, &phi, false).unwrap();
        }
        let text = store.to_text();
        let back = MoqStore::from_text(&text).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.to_text(), text);
        assert_eq!(back.hv, store.hv);
        assert_eq!(back.ray_best, store.ray_best);
    }

    #[test]
    fn corrupt_store_is_rejected() {
        assert!(matches!(
            MoqStore::from_text("# something else\n"),
            Err(LearnerError::Parse { line: 1, .. })
        ));
        let store = MoqStore::new(1, 1, x_ray(), params(0.1, 0.7)).unwrap();
        let text = store.to_text().replace("end\n", "");
        assert!(MoqStore::from_text(&text).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(global_hypervolume_metric(&[v(1.0, 1.0, 1.0)], 10).unwrap(), 1.0);
        let same = vec![v(2.0, 1.0, 3.0); 4];
        assert_eq!(global_hypervolume_metric(&same, 10).unwrap(), 6.0);
        let base = vec![v(2.0, 1.0, 3.0), v(1.0, 3.0, 1.0)];
        let mut more = base.clone();
        more.push(v(1.5, 0.5, 2.0));
        assert_eq!(
            global_hypervolume_metric(&base, 10).unwrap(),
            global_hypervolume_metric(&more, 10).unwrap()
        );
        assert!(global_hypervolume_metric(&[], 3).is_err());
        assert!(global_hypervolume_metric(&same, 0).is_err());
    }

    #[test]
    fn metric_window_uses_recent_returns() {
        let returns = vec![v(10.0, 10.0, 10.0), v(1.0, 1.0, 1.0)];
        assert_eq!(global_hypervolume_metric(&returns, 1).unwrap(), 1.0);
    }

    #[test]
    fn metric_reference_tracks_negative_returns() {
        let returns = vec![v(1.0, 2.0, 1.0), v(2.0, -1.0, 1.0)];
        // Reference (0, -1, 0): the second return sits on the reference plane.
        assert_eq!(global_hypervolume_metric(&returns, 5).unwrap(), 3.0);
    }
}
