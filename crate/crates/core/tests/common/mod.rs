//! Reference implementations used as test oracles. They favour obviousness
//! over speed and share no code with the library.

#![allow(dead_code)]

use mofql::ObjectiveVector;
use rand::Rng;

pub fn v(e: f64, r: f64, a: f64) -> ObjectiveVector {
    ObjectiveVector::new(e, r, a)
}

fn weakly_greater(u: &ObjectiveVector, w: &ObjectiveVector) -> bool {
    u.evade >= w.evade && u.reach >= w.reach && u.avoid >= w.avoid
}

pub fn oracle_dominates(u: &ObjectiveVector, w: &ObjectiveVector) -> bool {
    weakly_greater(u, w) && u != w
}

/// Quadratic non-dominated filter over distinct values, in input order.
pub fn brute_nd(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut out: Vec<ObjectiveVector> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let beaten = points.iter().any(|q| oracle_dominates(q, p));
        let repeated = points[..i].contains(p);
        if !beaten && !repeated {
            out.push(*p);
        }
    }
    out
}

/// Sorted copy, for order-insensitive set comparison.
pub fn sorted(mut rows: Vec<ObjectiveVector>) -> Vec<ObjectiveVector> {
    rows.sort_by(|a, b| a.to_array().partial_cmp(&b.to_array()).unwrap());
    rows
}

/// Volume of the union of boxes `[r, p]` by inclusion–exclusion over every
/// non-empty subset.
pub fn ie_hypervolume(rows: &[ObjectiveVector], r: ObjectiveVector) -> f64 {
    let n = rows.len();
    assert!(n <= 16, "inclusion-exclusion oracle is exponential");
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut lo = [f64::INFINITY; 3];
        for (i, p) in rows.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let a = p.to_array();
                for k in 0..3 {
                    lo[k] = lo[k].min(a[k]);
                }
            }
        }
        let ra = r.to_array();
        let vol: f64 = (0..3).map(|k| (lo[k] - ra[k]).max(0.0)).product();
        if mask.count_ones() % 2 == 1 {
            total += vol;
        } else {
            total -= vol;
        }
    }
    total
}

/// Monte-Carlo estimate: uniform samples in the bounding box `[r, max]`.
pub fn mc_hypervolume<R: Rng>(rows: &[ObjectiveVector], r: ObjectiveVector, samples: usize, rng: &mut R) -> f64 {
    let hi = rows.iter().fold(r, |acc, p| acc.max(p));
    let (lo, hi) = (r.to_array(), hi.to_array());
    let box_vol: f64 = (0..3).map(|k| hi[k] - lo[k]).product();
    if box_vol <= 0.0 {
        return 0.0;
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        let s: Vec<f64> = (0..3).map(|k| rng.gen_range(lo[k]..hi[k])).collect();
        if rows
            .iter()
            .any(|p| p.evade >= s[0] && p.reach >= s[1] && p.avoid >= s[2])
        {
            hits += 1;
        }
    }
    box_vol * hits as f64 / samples as f64
}

/// One-sided sign test: probability of at least `wins` successes out of `n`
/// fair coin flips.
pub fn sign_test_p(wins: usize, n: usize) -> f64 {
    let mut p = 0.0;
    for k in wins..=n {
        p += binomial(n, k) * 0.5f64.powi(n as i32);
    }
    p
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Prints a single criterion verdict line and returns whether it passed.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {id:>2}] {verdict} {name}: {detail}");
    pass
}
