//! Three-objective Pareto algebra.
//!
//! Everything here works in the maximization sense: larger is better on
//! every objective. The module covers dominance, non-dominated filtering,
//! the set-lifted addition and subtraction operators, the exact 3-D
//! hypervolume indicator, preference rays in the positive octant and the
//! generalized (set-valued) Bellman backup.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

/// Errors raised by the Pareto primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParetoError {
    #[error("objective vector has a non-finite component")]
    NonFinite,
    #[error("operation requires at least one point")]
    Empty,
    #[error("rows are not mutually non-dominated")]
    NotNonDominated,
    #[error("ray count must be at least 1")]
    NoRays,
    #[error("ray angles ({theta}, {phi}) outside [0, pi/2]")]
    AngleOutOfRange { theta: f64, phi: f64 },
    #[error("zero-length vector has no direction")]
    ZeroRadius,
    #[error("softmax temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("hypervolumes must be finite and non-negative")]
    InvalidHypervolume,
    #[error("discount factor must lie in [0, 1], got {0}")]
    InvalidDiscount(f64),
}

pub type Result<T> = std::result::Result<T, ParetoError>;

/// One point in (evade, reach, avoid) payoff space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveVector {
    pub evade: f64,
    pub reach: f64,
    pub avoid: f64,
}

impl ObjectiveVector {
    pub const ZERO: ObjectiveVector = ObjectiveVector::new(0.0, 0.0, 0.0);

    pub const fn new(evade: f64, reach: f64, avoid: f64) -> Self {
        Self {
            evade,
            reach,
            avoid,
        }
    }

    /// Validating constructor.
    pub fn try_new(evade: f64, reach: f64, avoid: f64) -> Result<Self> {
        let v = Self::new(evade, reach, avoid);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ParetoError::NonFinite)
        }
    }

    pub const fn splat(value: f64) -> Self {
        Self::new(value, value, value)
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.evade, self.reach, self.avoid]
    }

    pub fn is_finite(&self) -> bool {
        self.evade.is_finite() && self.reach.is_finite() && self.avoid.is_finite()
    }

    /// Pareto dominance without the finiteness check.
    #[inline]
    pub fn dominates(&self, other: &Self) -> bool {
        self.evade >= other.evade
            && self.reach >= other.reach
            && self.avoid >= other.avoid
            && (self.evade > other.evade || self.reach > other.reach || self.avoid > other.avoid)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.evade * other.evade + self.reach * other.reach + self.avoid * other.avoid
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max(&self, other: &Self) -> Self {
        Self::new(
            self.evade.max(other.evade),
            self.reach.max(other.reach),
            self.avoid.max(other.avoid),
        )
    }

    pub fn min(&self, other: &Self) -> Self {
        Self::new(
            self.evade.min(other.evade),
            self.reach.min(other.reach),
            self.avoid.min(other.avoid),
        )
    }

    /// Spherical coordinates: `theta` is measured from the avoid axis and
    /// `phi` from the evade axis inside the evade/reach plane.
    pub fn to_spherical(&self) -> Spherical {
        let radius = self.norm();
        if radius == 0.0 {
            return Spherical {
                radius,
                theta: 0.0,
                phi: 0.0,
            };
        }
        Spherical {
            radius,
            theta: (self.avoid / radius).clamp(-1.0, 1.0).acos(),
            phi: self.reach.atan2(self.evade),
        }
    }

    fn lex_cmp_desc(&self, other: &Self) -> Ordering {
        other
            .evade
            .partial_cmp(&self.evade)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.reach.partial_cmp(&self.reach).unwrap_or(Ordering::Equal))
            .then_with(|| other.avoid.partial_cmp(&self.avoid).unwrap_or(Ordering::Equal))
    }
}

impl Add for ObjectiveVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.evade + rhs.evade,
            self.reach + rhs.reach,
            self.avoid + rhs.avoid,
        )
    }
}

impl Sub for ObjectiveVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.evade - rhs.evade,
            self.reach - rhs.reach,
            self.avoid - rhs.avoid,
        )
    }
}

impl Mul<ObjectiveVector> for f64 {
    type Output = ObjectiveVector;
    fn mul(self, rhs: ObjectiveVector) -> ObjectiveVector {
        ObjectiveVector::new(self * rhs.evade, self * rhs.reach, self * rhs.avoid)
    }
}

impl fmt::Display for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.evade, self.reach, self.avoid)
    }
}

/// A vector in spherical coordinates (see [`ObjectiveVector::to_spherical`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical {
    pub radius: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Checked dominance: `u` dominates `v` iff it is at least as large in every
/// objective and strictly larger in one.
pub fn dominates(u: &ObjectiveVector, v: &ObjectiveVector) -> Result<bool> {
    if !u.is_finite() || !v.is_finite() {
        return Err(ParetoError::NonFinite);
    }
    Ok(u.dominates(v))
}

/// A set of mutually non-dominated, distinct objective vectors together with
/// the reference point used to measure its hypervolume.
#[derive(Debug, Clone, PartialEq)]
pub struct NdSet {
    rows: Vec<ObjectiveVector>,
    reference: ObjectiveVector,
}

impl NdSet {
    pub fn singleton(row: ObjectiveVector) -> Self {
        Self {
            rows: vec![row],
            reference: ObjectiveVector::ZERO,
        }
    }

    /// Builds a set from rows that are expected to already satisfy the
    /// non-dominance and uniqueness invariants. The rows are verified.
    pub fn from_rows(rows: Vec<ObjectiveVector>, reference: ObjectiveVector) -> Result<Self> {
        if rows.is_empty() {
            return Err(ParetoError::Empty);
        }
        if !reference.is_finite() || rows.iter().any(|r| !r.is_finite()) {
            return Err(ParetoError::NonFinite);
        }
        for (i, a) in rows.iter().enumerate() {
            for b in &rows[i + 1..] {
                if a == b || a.dominates(b) || b.dominates(a) {
                    return Err(ParetoError::NotNonDominated);
                }
            }
        }
        Ok(Self { rows, reference })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<ObjectiveVector>, reference: ObjectiveVector) -> Self {
        debug_assert!(!rows.is_empty());
        Self { rows, reference }
    }

    pub fn with_reference(mut self, reference: ObjectiveVector) -> Self {
        self.reference = reference;
        self
    }

    pub fn rows(&self) -> &[ObjectiveVector] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<ObjectiveVector> {
        self.rows
    }

    pub fn reference(&self) -> ObjectiveVector {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Staircase of mutually non-dominated 2-D points, sorted by the first
/// coordinate. The second coordinate strictly decreases as the first grows.
#[derive(Default)]
struct Staircase {
    keys: Vec<f64>,
    values: Vec<f64>,
}

impl Staircase {
    /// True if some stored point is at least `(a, b)` in both coordinates.
    fn covers(&self, a: f64, b: f64) -> bool {
        let i = self.keys.partition_point(|&k| k < a);
        i < self.keys.len() && self.values[i] >= b
    }

    /// Inserts a point not covered by the staircase, evicting the points it
    /// covers.
    fn insert(&mut self, a: f64, b: f64) {
        let end = self.keys.partition_point(|&k| k <= a);
        let mut start = end;
        while start > 0 && self.values[start - 1] <= b {
            start -= 1;
        }
        self.keys.splice(start..end, [a]);
        self.values.splice(start..end, [b]);
    }

    /// Area dominated by the staircase relative to the origin, assuming all
    /// coordinates are non-negative.
    fn area(&self) -> f64 {
        let mut prev = 0.0;
        let mut area = 0.0;
        for (&k, &v) in self.keys.iter().zip(&self.values) {
            area += (k - prev) * v;
            prev = k;
        }
        area
    }
}

/// Indices (ascending) of the points that survive non-dominated filtering.
/// Duplicates keep their first occurrence. Runs in O(n log n).
pub(crate) fn nondominated_indices(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| points[a].lex_cmp_desc(&points[b]).then(a.cmp(&b)));

    // Every possible dominator of a point precedes it in `order`, so a point
    // survives iff no earlier survivor beats it on (reach, avoid).
    let mut stair = Staircase::default();
    let mut keep = Vec::new();
    for i in order {
        let p = &points[i];
        if stair.covers(p.reach, p.avoid) {
            continue;
        }
        stair.insert(p.reach, p.avoid);
        keep.push(i);
    }
    keep.sort_unstable();
    keep
}

/// Returns the non-dominated, de-duplicated subset of `points`, in input
/// order. The reference point of the result is the origin.
pub fn nd_filter(points: &[ObjectiveVector]) -> Result<NdSet> {
    if points.is_empty() {
        return Err(ParetoError::Empty);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(ParetoError::NonFinite);
    }
    let rows = nondominated_indices(points)
        .into_iter()
        .map(|i| points[i])
        .collect();
    Ok(NdSet::from_rows_unchecked(rows, ObjectiveVector::ZERO))
}

/// `v ⊕ U`: adds `v` to every member of `U`, preserving order.
pub fn vec_oplus_set(v: ObjectiveVector, set: &[ObjectiveVector]) -> Result<Vec<ObjectiveVector>> {
    if set.is_empty() {
        return Err(ParetoError::Empty);
    }
    Ok(set.iter().map(|&u| v + u).collect())
}

fn pairwise(
    lhs: &[ObjectiveVector],
    rhs: &[ObjectiveVector],
    op: impl Fn(ObjectiveVector, ObjectiveVector) -> ObjectiveVector,
) -> Result<Vec<ObjectiveVector>> {
    if lhs.is_empty() || rhs.is_empty() {
        return Err(ParetoError::Empty);
    }
    Ok(lhs
        .iter()
        .flat_map(|&u| rhs.iter().map(move |&v| (u, v)))
        .map(|(u, v)| op(u, v))
        .collect())
}

/// All pairwise sums, `lhs`-major. No de-duplication.
pub fn set_oplus(lhs: &[ObjectiveVector], rhs: &[ObjectiveVector]) -> Result<Vec<ObjectiveVector>> {
    pairwise(lhs, rhs, |u, v| u + v)
}

/// All pairwise differences `u - v`, `lhs`-major. No de-duplication.
pub fn set_ominus(lhs: &[ObjectiveVector], rhs: &[ObjectiveVector]) -> Result<Vec<ObjectiveVector>> {
    pairwise(lhs, rhs, |u, v| u - v)
}

/// Hypervolume of an [`NdSet`] relative to its own reference point.
pub fn hypervolume3(set: &NdSet) -> Result<f64> {
    hypervolume_of(set.rows(), set.reference())
}

/// Rows at or above `reference` are clipped at the reference point, so a row
/// with any component below it contributes nothing.
pub fn hypervolume_of(rows: &[ObjectiveVector], reference: ObjectiveVector) -> Result<f64> {
    if rows.is_empty() {
        return Err(ParetoError::Empty);
    }
    if !reference.is_finite() || rows.iter().any(|r| !r.is_finite()) {
        return Err(ParetoError::NonFinite);
    }
    let extents = box_extents(rows, reference);
    Ok(if extents.len() <= 8 {
        inclusion_exclusion(&extents)
    } else {
        sweep_volume(extents)
    })
}

/// Same as [`hypervolume_of`] but always uses the slab sweep.
pub fn hypervolume_sweep(rows: &[ObjectiveVector], reference: ObjectiveVector) -> Result<f64> {
    if rows.is_empty() {
        return Err(ParetoError::Empty);
    }
    if !reference.is_finite() || rows.iter().any(|r| !r.is_finite()) {
        return Err(ParetoError::NonFinite);
    }
    Ok(sweep_volume(box_extents(rows, reference)))
}

fn box_extents(rows: &[ObjectiveVector], reference: ObjectiveVector) -> Vec<[f64; 3]> {
    rows.iter()
        .map(|r| (r.max(&reference) - reference).to_array())
        .filter(|e| e.iter().all(|&c| c > 0.0))
        .collect()
}

fn inclusion_exclusion(extents: &[[f64; 3]]) -> f64 {
    let n = extents.len();
    let mut volume = 0.0;
    for mask in 1u32..(1 << n) {
        let mut corner = [f64::INFINITY; 3];
        for (i, e) in extents.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for c in 0..3 {
                    corner[c] = corner[c].min(e[c]);
                }
            }
        }
        let term = corner[0] * corner[1] * corner[2];
        if mask.count_ones() % 2 == 1 {
            volume += term;
        } else {
            volume -= term;
        }
    }
    volume
}

/// Sweeps slabs along the third axis from the top down, keeping the 2-D
/// dominated area of everything above the current slab.
fn sweep_volume(mut extents: Vec<[f64; 3]>) -> f64 {
    extents.sort_by(|a, b| b[2].partial_cmp(&a[2]).unwrap_or(Ordering::Equal));
    let mut stair = Staircase::default();
    let mut area = 0.0;
    let mut volume = 0.0;
    for (i, e) in extents.iter().enumerate() {
        if !stair.covers(e[0], e[1]) {
            stair.insert(e[0], e[1]);
            area = stair.area();
        }
        let below = extents.get(i + 1).map_or(0.0, |n| n[2]);
        volume += area * (e[2] - below);
    }
    volume
}

/// Output of [`normalize_and_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub normalized: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub index: usize,
}

/// Normalizes hypervolumes to sum to one and applies a softmax with inverse
/// temperature `tau`. All-zero input yields the uniform distribution.
pub fn selection_probabilities(hvs: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if hvs.is_empty() {
        return Err(ParetoError::Empty);
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(ParetoError::InvalidTemperature(tau));
    }
    if hvs.iter().any(|h| !h.is_finite() || *h < 0.0) {
        return Err(ParetoError::InvalidHypervolume);
    }
    let total: f64 = hvs.iter().sum();
    let n = hvs.len() as f64;
    if total == 0.0 {
        return Ok((vec![1.0 / n; hvs.len()], vec![1.0 / n; hvs.len()]));
    }
    let normalized: Vec<f64> = hvs.iter().map(|h| h / total).collect();
    Ok((normalized.clone(), softmax(&normalized, tau)))
}

/// Numerically stable `exp(tau * x_i) / sum_j exp(tau * x_j)`.
pub fn softmax(values: &[f64], tau: f64) -> Vec<f64> {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|v| (tau * (v - top)).exp()).collect();
    let sum: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / sum).collect()
}

/// Samples an index from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    match WeightedIndex::new(probabilities) {
        Ok(dist) => dist.sample(rng),
        // Unreachable for softmax output; keep sampling total anyway.
        Err(_) => rng.gen_range(0..probabilities.len()),
    }
}

/// Hypervolume-softmax action selection.
pub fn normalize_and_select<R: Rng + ?Sized>(hvs: &[f64], tau: f64, rng: &mut R) -> Result<Selection> {
    let (normalized, probabilities) = selection_probabilities(hvs, tau)?;
    let index = sample_index(&probabilities, rng);
    Ok(Selection {
        normalized,
        probabilities,
        index,
    })
}

/// A preference direction in the positive octant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub theta: f64,
    pub phi: f64,
}

impl Ray {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let ok = |a: f64| a.is_finite() && (0.0..=FRAC_PI_2).contains(&a);
        if ok(theta) && ok(phi) {
            Ok(Self { theta, phi })
        } else {
            Err(ParetoError::AngleOutOfRange { theta, phi })
        }
    }

    /// Unit direction `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn direction(&self) -> ObjectiveVector {
        unit(self.theta, self.phi)
    }
}

/// How a run chooses its rays.
#[derive(Debug, Clone, PartialEq)]
pub enum RaySpec {
    /// Explicit `(theta, phi)` pairs, used verbatim.
    Explicit(Vec<(f64, f64)>),
    /// `H` rays spread over the angle square.
    Count(usize),
}

/// Expands a [`RaySpec`] into concrete rays.
///
/// Count mode uses a `k x k` grid of cell centres when `H = k²`, and
/// otherwise a golden-ratio lattice: `theta_i = (π/2)(i + 1/2)/H`,
/// `phi_i = (π/2) frac(i / golden)`.
pub fn sample_rays(spec: &RaySpec) -> Result<Vec<Ray>> {
    match spec {
        RaySpec::Explicit(angles) => {
            if angles.is_empty() {
                return Err(ParetoError::NoRays);
            }
            angles.iter().map(|&(t, p)| Ray::new(t, p)).collect()
        }
        RaySpec::Count(0) => Err(ParetoError::NoRays),
        RaySpec::Count(h) => {
            let h = *h;
            let side = (h as f64).sqrt().round() as usize;
            if side * side == h {
                let cell = FRAC_PI_2 / side as f64;
                let mut rays = Vec::with_capacity(h);
                for i in 0..side {
                    for j in 0..side {
                        rays.push(Ray::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell)?);
                    }
                }
                Ok(rays)
            } else {
                let inv_golden = (5f64.sqrt() - 1.0) / 2.0;
                (0..h)
                    .map(|i| {
                        let theta = FRAC_PI_2 * (i as f64 + 0.5) / h as f64;
                        let phi = FRAC_PI_2 * (i as f64 * inv_golden).fract();
                        Ray::new(theta, phi)
                    })
                    .collect()
            }
        }
    }
}

fn unit(theta: f64, phi: f64) -> ObjectiveVector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    ObjectiveVector::new(st * cp, st * sp, ct)
}

/// Angle between two vectors given in spherical coordinates.
pub fn angle_to_ray(p: Spherical, q: Spherical) -> Result<f64> {
    if p.radius <= 0.0 || q.radius <= 0.0 {
        return Err(ParetoError::ZeroRadius);
    }
    // atan2 of |a x b| and a.b stays accurate near 0 and π, where acos of
    // the cosine formula loses half the significant digits.
    let (a, b) = (unit(p.theta, p.phi), unit(q.theta, q.phi));
    let cross = ObjectiveVector::new(
        a.reach * b.avoid - a.avoid * b.reach,
        a.avoid * b.evade - a.evade * b.avoid,
        a.evade * b.reach - a.reach * b.evade,
    );
    Ok(cross.norm().atan2(a.dot(&b)))
}

/// `|r sin η|`, the distance from `q` to the line carrying `ray`. The origin
/// lies on every ray.
pub fn dist_point_to_ray(q: &ObjectiveVector, ray: &Ray) -> f64 {
    let s = q.to_spherical();
    if s.radius == 0.0 {
        return 0.0;
    }
    let p = Spherical {
        radius: 1.0,
        theta: ray.theta,
        phi: ray.phi,
    };
    match angle_to_ray(p, s) {
        Ok(eta) => (s.radius * eta.sin()).abs(),
        Err(_) => 0.0,
    }
}

/// Index of the row closest to the line through `direction` (a unit vector).
/// Ties go to the lowest index.
pub(crate) fn nearest_index(rows: &[ObjectiveVector], direction: &ObjectiveVector) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, q) in rows.iter().enumerate() {
        let along = q.dot(direction);
        let d2 = (q.dot(q) - along * along).max(0.0);
        if d2 < best_d2 {
            best = i;
            best_d2 = d2;
        }
    }
    best
}

/// The row of `set` nearest to `ray`.
pub fn nearest_to_ray(set: &NdSet, ray: &Ray) -> ObjectiveVector {
    set.rows()[nearest_index(set.rows(), &ray.direction())]
}

/// One successor of a set-valued Bellman backup.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub reward: ObjectiveVector,
    pub successor: NdSet,
}

/// `ND( ⋃ reward ⊕ γ·V(s') )` over all transitions.
pub fn nd_bellman_backup(transitions: &[Transition], gamma: f64) -> Result<NdSet> {
    if transitions.is_empty() {
        return Err(ParetoError::Empty);
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ParetoError::InvalidDiscount(gamma));
    }
    let mut candidates = Vec::new();
    for t in transitions {
        let discounted: Vec<ObjectiveVector> =
            t.successor.rows().iter().map(|&v| gamma * v).collect();
        candidates.extend(vec_oplus_set(t.reward, &discounted)?);
    }
    nd_filter(&candidates)
}
