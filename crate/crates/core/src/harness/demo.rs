//! Synthetic Pareto-front demonstrations in the unit cube.
//!
//! Points are drawn uniformly from `[0, 1]³` and kept when they fall inside
//! the region below the chosen surface:
//!
//! * `convex`: `x² + y² + z² ≤ 1` (inside the unit-sphere octant),
//! * `plane`: `x + y + z ≤ 1.5`,
//! * `concave`: `(1 − x)² + (1 − y)² + (1 − z)² ≥ 1` (outside the unit
//!   sphere centred at the far corner).
//!
//! These generators reproduce the qualitative shapes only.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use super::output::{ensure_dir, write_csv, POINTS_SCHEMA};
use super::rng::{stream, Stream};
use super::{HarnessError, Result};
use crate::csv_row;
use crate::pareto::{nondominated_indices, ObjectiveVector};

pub const POINTS_FILE: &str = "points.csv";
pub const FRONT_FILE: &str = "front.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoShape {
    Convex,
    Plane,
    Concave,
}

impl DemoShape {
    pub const ALL: [DemoShape; 3] = [DemoShape::Convex, DemoShape::Plane, DemoShape::Concave];

    pub fn contains(self, p: &ObjectiveVector) -> bool {
        let (x, y, z) = (p.evade, p.reach, p.avoid);
        match self {
            DemoShape::Convex => x * x + y * y + z * z <= 1.0,
            DemoShape::Plane => x + y + z <= 1.5,
            DemoShape::Concave => {
                (1.0 - x).powi(2) + (1.0 - y).powi(2) + (1.0 - z).powi(2) >= 1.0
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DemoShape::Convex => "convex",
            DemoShape::Plane => "plane",
            DemoShape::Concave => "concave",
        }
    }
}

impl fmt::Display for DemoShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DemoShape {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convex" => Ok(DemoShape::Convex),
            "plane" => Ok(DemoShape::Plane),
            "concave" => Ok(DemoShape::Concave),
            other => Err(HarnessError::Config(format!(
                "unknown shape {other:?} (expected convex, plane or concave)"
            ))),
        }
    }
}

/// Rejection-samples `n` points of `shape`.
pub fn sample_shape<R: Rng + ?Sized>(shape: DemoShape, n: usize, rng: &mut R) -> Vec<ObjectiveVector> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = ObjectiveVector::new(rng.gen(), rng.gen(), rng.gen());
        if shape.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Quadratic reference filter: indices of points no other point dominates,
/// keeping only the first of any exact duplicates.
pub fn brute_force_front(points: &[ObjectiveVector]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points.iter().enumerate().any(|(j, q)| {
                q.dominates(&points[i]) || (j < i && *q == points[i])
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutput {
    pub points: Vec<ObjectiveVector>,
    /// Front indices into `points`, ascending.
    pub front: Vec<usize>,
}

/// Samples a cloud, extracts its front and checks it against the quadratic
/// filter and for pairwise non-dominance.
pub fn pareto_demo(shape: DemoShape, n: usize, seed: u64) -> Result<DemoOutput> {
    if n == 0 {
        return Err(HarnessError::Config("demo needs at least one point".into()));
    }
    let mut rng = stream(seed, Stream::Demo);
    let points = sample_shape(shape, n, &mut rng);
    let mut front = nondominated_indices(&points);
    front.sort_unstable();
    let oracle = brute_force_front(&points);
    if front != oracle {
        return Err(HarnessError::FrontMismatch(format!(
            "{shape}: fast filter kept {} points, reference kept {}",
            front.len(),
            oracle.len()
        )));
    }
    for &i in &front {
        for &j in &front {
            if points[i].dominates(&points[j]) {
                return Err(HarnessError::FrontMismatch(format!("{shape}: point {i} dominates {j}")));
            }
        }
    }
    Ok(DemoOutput { points, front })
}

/// Writes `points.csv` (every sample with a front flag) and `front.csv`.
pub fn cmd_pareto_demo(shape: DemoShape, n: usize, seed: u64, out: &Path) -> Result<DemoOutput> {
    let demo = pareto_demo(shape, n, seed)?;
    ensure_dir(out)?;
    let mut on_front = vec![false; demo.points.len()];
    for &i in &demo.front {
        on_front[i] = true;
    }
    write_csv(
        &out.join(POINTS_FILE),
        POINTS_SCHEMA,
        &["index", "x", "y", "z", "on_front"],
        demo.points
            .iter()
            .enumerate()
            .map(|(i, p)| csv_row![i, p.evade, p.reach, p.avoid, u8::from(on_front[i])]),
    )?;
    write_csv(
        &out.join(FRONT_FILE),
        POINTS_SCHEMA,
        &["index", "x", "y", "z"],
        demo.front.iter().map(|&i| {
            let p = demo.points[i];
            csv_row![i, p.evade, p.reach, p.avoid]
        }),
    )?;
    Ok(demo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_shape_matches_reference() {
        for shape in DemoShape::ALL {
            let d = pareto_demo(shape, 500, 11).unwrap();
            assert_eq!(d.points.len(), 500);
            assert!(!d.front.is_empty());
            assert!(d.points.iter().all(|p| shape.contains(p)));
        }
    }

    #[test]
    fn single_point_is_its_own_front() {
        let d = pareto_demo(DemoShape::Plane, 1, 0).unwrap();
        assert_eq!(d.front, vec![0]);
    }

    #[test]
    fn zero_points_and_unknown_shape_fail() {
        assert!(pareto_demo(DemoShape::Convex, 0, 0).is_err());
        assert!("saddle".parse::<DemoShape>().is_err());
        assert_eq!("concave".parse::<DemoShape>().unwrap(), DemoShape::Concave);
    }

    #[test]
    fn csvs_are_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        cmd_pareto_demo(DemoShape::Convex, 200, 4, a.path()).unwrap();
        cmd_pareto_demo(DemoShape::Convex, 200, 4, b.path()).unwrap();
        for f in [POINTS_FILE, FRONT_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn brute_force_drops_later_duplicates() {
        let p = ObjectiveVector::new(1.0, 1.0, 1.0);
        assert_eq!(brute_force_front(&[p, p, ObjectiveVector::ZERO]), vec![0]);
    }
}
