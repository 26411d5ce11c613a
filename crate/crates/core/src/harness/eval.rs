//! Greedy per-preference evaluation and the random-steering baseline.

use std::path::{Path, PathBuf};

use rand::Rng;

use super::config::{eval_grid, RunConfig};
use super::output::{ensure_dir, write_csv, EVAL_SCHEMA};
use super::rng::{stream, Stream};
use super::train::{load_store, run_episode, write_trajectories, Controller, TrajectoryRow};
use super::{HarnessError, Result};
use crate::csv_row;
use crate::env::{Outcome, PegEnv, PSI_LIMIT};
use crate::fuzzy::FiringStrengths;
use crate::learner::MoqStore;
use crate::pareto::{ObjectiveVector, Ray};

pub const EVAL_FILE: &str = "eval.csv";

/// Per rule, the action with the largest hypervolume along a fixed ray.
struct Greedy<'a> {
    store: &'a MoqStore,
    actions: &'a [f64],
    ray: Ray,
}

impl Controller for Greedy<'_> {
    fn act(&mut self, phi: &FiringStrengths) -> Result<f64> {
        Ok(phi
            .iter()
            .map(|act| act.strength * self.actions[self.store.greedy_action(act.rule, &self.ray)])
            .sum())
    }
}

/// Uniform steering in `[-PSI_LIMIT, PSI_LIMIT]`, ignoring the observation.
struct RandomSteering<R> {
    rng: R,
}

impl<R: Rng> Controller for RandomSteering<R> {
    fn act(&mut self, _phi: &FiringStrengths) -> Result<f64> {
        Ok(self.rng.gen_range(-PSI_LIMIT..=PSI_LIMIT))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub outcome: Outcome,
    pub steps: usize,
    pub returns: ObjectiveVector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalSummary {
    pub episodes: Vec<EpisodeOutcome>,
    /// Trajectory of the first episode.
    pub trajectory: Vec<TrajectoryRow>,
}

impl EvalSummary {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.episodes.iter().filter(|e| e.outcome == outcome).count()
    }

    pub fn rate(&self, outcome: Outcome) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.count(outcome) as f64 / self.episodes.len() as f64
    }
}

fn evaluate<C: Controller>(config: &RunConfig, episodes: usize, controller: &mut C) -> Result<EvalSummary> {
    let rules = config.rule_base()?;
    let mut env = PegEnv::new(config.env.clone());
    let mut env_rng = stream(config.seed, Stream::Env);
    let mut summary = EvalSummary::default();
    for i in 0..episodes {
        let log = (i == 0).then_some(&mut summary.trajectory);
        let s = run_episode(&mut env, &rules, &mut env_rng, controller, i, log)?;
        summary.episodes.push(EpisodeOutcome {
            outcome: s.outcome,
            steps: s.steps,
            returns: s.returns,
        });
    }
    Ok(summary)
}

fn check_shape(store: &MoqStore, config: &RunConfig) -> Result<()> {
    let rules = config.rule_base()?.rule_count();
    if store.rules() != rules || store.actions() != config.actions.len() {
        return Err(HarnessError::Config(format!(
            "store has {} rules x {} actions but the config implies {} x {}",
            store.rules(),
            store.actions(),
            rules,
            config.actions.len()
        )));
    }
    Ok(())
}

/// Runs the greedy policy for `ray`. Start poses follow the config's env
/// stream, so two evaluations with the same seed see the same starts.
pub fn evaluate_greedy(store: &MoqStore, config: &RunConfig, ray: Ray, episodes: usize) -> Result<EvalSummary> {
    check_shape(store, config)?;
    let mut greedy = Greedy {
        store,
        actions: &config.actions,
        ray,
    };
    evaluate(config, episodes, &mut greedy)
}

pub fn evaluate_random(config: &RunConfig, episodes: usize) -> Result<EvalSummary> {
    let mut policy = RandomSteering {
        rng: stream(config.seed, Stream::Baseline),
    };
    evaluate(config, episodes, &mut policy)
}

fn trajectory_name(theta: f64, phi: f64) -> String {
    // angles in milliradians keep file names short and unambiguous
    format!(
        "trajectory_t{}_p{}.csv",
        (theta * 1e3).round() as i64,
        (phi * 1e3).round() as i64
    )
}

/// Evaluates the stored policy for one angle pair, or for the full 5×5
/// evaluation grid when `angles` is `None`. Writes one trajectory file per
/// pair plus `eval.csv` with the outcomes.
pub fn cmd_eval(
    store_path: &Path,
    config: &RunConfig,
    angles: Option<(f64, f64)>,
    out: &Path,
) -> Result<Vec<(f64, f64, EpisodeOutcome, PathBuf)>> {
    config.validate()?;
    let store = load_store(store_path)?;
    let pairs = match angles {
        Some(p) => vec![p],
        None => eval_grid(),
    };
    let rays = pairs
        .iter()
        .map(|&(t, p)| Ray::new(t, p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    ensure_dir(out)?;
    let mut results = Vec::with_capacity(pairs.len());
    for (&(theta, phi), ray) in pairs.iter().zip(rays) {
        let summary = evaluate_greedy(&store, config, ray, 1)?;
        let path = out.join(trajectory_name(theta, phi));
        write_trajectories(&path, &summary.trajectory)?;
        let episode = summary.episodes.into_iter().next().expect("one episode");
        results.push((theta, phi, episode, path));
    }
    write_csv(
        &out.join(EVAL_FILE),
        EVAL_SCHEMA,
        &["theta", "phi", "outcome", "steps", "return_evade", "return_reach", "return_avoid", "trajectory"],
        results.iter().map(|(t, p, e, path)| {
            csv_row![
                t,
                p,
                e.outcome,
                e.steps,
                e.returns.evade,
                e.returns.reach,
                e.returns.avoid,
                path.file_name().unwrap_or_default().to_string_lossy(),
            ]
        }),
    )?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::train::{cmd_train, STORE_FILE};
    use crate::pareto::RaySpec;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn small() -> RunConfig {
        let mut cfg = RunConfig {
            episodes: 1,
            rays: RaySpec::Count(4),
            ..Default::default()
        };
        cfg.env.arena.max_steps = 40;
        cfg
    }

    #[test]
    fn single_pair_smoke() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        cmd_train(&cfg, dir.path()).unwrap();
        let res = cmd_eval(&dir.path().join(STORE_FILE), &cfg, Some((FRAC_PI_4, FRAC_PI_2)), dir.path()).unwrap();
        assert_eq!(res.len(), 1);
        assert!(res[0].2.outcome.is_done());
        assert!(res[0].3.exists());
        assert!(dir.path().join(EVAL_FILE).exists());
    }

    #[test]
    fn full_grid_writes_25_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        cmd_train(&cfg, dir.path()).unwrap();
        let eval_dir = dir.path().join("eval");
        let res = cmd_eval(&dir.path().join(STORE_FILE), &cfg, None, &eval_dir).unwrap();
        assert_eq!(res.len(), 25);
        let files = std::fs::read_dir(&eval_dir)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("trajectory_"))
            .count();
        assert_eq!(files, 25);
    }

    #[test]
    fn corrupt_store_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "# not-a-store v9\n").unwrap();
        assert!(cmd_eval(&path, &small(), Some((0.0, 0.0)), dir.path()).is_err());
        assert!(cmd_eval(&dir.path().join("missing"), &small(), Some((0.0, 0.0)), dir.path()).is_err());
    }

    #[test]
    fn random_baseline_is_seeded() {
        let cfg = small();
        assert_eq!(evaluate_random(&cfg, 3).unwrap(), evaluate_random(&cfg, 3).unwrap());
    }
}
