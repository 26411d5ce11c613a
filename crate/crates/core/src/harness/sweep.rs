//! H × τ × γ parameter sweeps.

use std::path::Path;

use rayon::prelude::*;

use super::config::RunConfig;
use super::output::{ensure_dir, write_csv, SWEEP_SCHEMA};
use super::train::train;
use super::{HarnessError, Result};
use crate::csv_row;
use crate::pareto::RaySpec;

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub ray_counts: Vec<usize>,
    pub taus: Vec<f64>,
    pub gammas: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.ray_counts.is_empty() || self.taus.is_empty() || self.gammas.is_empty() || self.seeds.is_empty() {
            return Err(HarnessError::Config("sweep grids and seed list must be non-empty".into()));
        }
        Ok(())
    }

    /// Cells in row-major order: ray count, then τ, then γ.
    pub fn cells(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for &h in &self.ray_counts {
            for &t in &self.taus {
                for &g in &self.gammas {
                    out.push((h, t, g));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rays: usize,
    pub tau: f64,
    pub gamma: f64,
    /// Final global hypervolume of each seed, in seed order.
    pub final_hypervolumes: Vec<f64>,
    /// Mean per-episode wall time of each seed (ms).
    pub episode_times_ms: Vec<f64>,
}

impl SweepRow {
    pub fn mean_final_hypervolume(&self) -> f64 {
        mean(&self.final_hypervolumes)
    }

    pub fn mean_episode_time_ms(&self) -> f64 {
        mean(&self.episode_times_ms)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// The config used for one cell and seed. Trajectory logging is off and
/// the prune limit follows the cell's ray count.
pub fn cell_config(base: &RunConfig, rays: usize, tau: f64, gamma: f64, seed: u64) -> RunConfig {
    RunConfig {
        seed,
        tau,
        gamma,
        rays: RaySpec::Count(rays),
        prune_limit: None,
        trajectory_every: 0,
        ..base.clone()
    }
}

/// Runs every (cell, seed) pair in parallel. Each run is single-threaded
/// and owns its store, so results do not depend on scheduling.
pub fn run_sweep(base: &RunConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| grid.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let (h, tau, gamma) = cells[c];
            let out = train(&cell_config(base, h, tau, gamma, seed))?;
            Ok((out.final_global_hypervolume(), out.mean_wall_time_ms()))
        })
        .collect::<Result<_>>()?;

    let per_cell = grid.seeds.len();
    Ok(cells
        .iter()
        .zip(results.chunks(per_cell))
        .map(|(&(rays, tau, gamma), chunk)| SweepRow {
            rays,
            tau,
            gamma,
            final_hypervolumes: chunk.iter().map(|r| r.0).collect(),
            episode_times_ms: chunk.iter().map(|r| r.1).collect(),
        })
        .collect())
}

/// Runs the sweep and writes `sweep.csv`. Timing columns are measurements
/// and vary between runs; every other column is deterministic.
pub fn cmd_sweep(base: &RunConfig, grid: &SweepGrid, out: &Path) -> Result<Vec<SweepRow>> {
    base.validate()?;
    ensure_dir(out)?;
    let rows = run_sweep(base, grid)?;
    write_csv(
        &out.join(SWEEP_FILE),
        SWEEP_SCHEMA,
        &["rays", "tau", "gamma", "seeds", "episodes", "mean_final_return_window_hypervolume", "mean_episode_ms"],
        rows.iter().map(|r| {
            csv_row![
                r.rays,
                r.tau,
                r.gamma,
                r.final_hypervolumes.len(),
                base.episodes,
                r.mean_final_hypervolume(),
                r.mean_episode_time_ms(),
            ]
        }),
    )?;
    Ok(rows)
}
