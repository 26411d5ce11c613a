//! Training loop and the `train` command.

use std::path::Path;
use std::time::Instant;

use rand::Rng;

use super::config::RunConfig;
use super::output::{
    ensure_dir, write_csv, EPISODES_SCHEMA, TIMING_SCHEMA, TRAJECTORY_SCHEMA,
};
use super::rng::{stream, Stream};
use super::{HarnessError, Result};
use crate::csv_row;
use crate::env::{Observation, Outcome, PegEnv, StepResult};
use crate::fuzzy::{FiringStrengths, FuzzyRuleBase};
use crate::learner::{global_hypervolume_metric, MoqStore};
use crate::pareto::ObjectiveVector;

pub const STORE_FILE: &str = "store.txt";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const TIMING_FILE: &str = "timing.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub index: usize,
    pub outcome: Outcome,
    pub steps: usize,
    pub returns: ObjectiveVector,
    pub global_hypervolume: f64,
    pub wall_time_ms: f64,
}

/// One logged simulation step. Step 0 is the start pose with a zero reward.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub episode: usize,
    pub step: usize,
    pub evader: (f64, f64, f64),
    pub pursuer: (f64, f64, f64),
    pub psi: f64,
    pub observation: Observation,
    pub reward: ObjectiveVector,
    pub outcome: Outcome,
}

pub const TRAJECTORY_HEADER: [&str; 17] = [
    "episode", "step", "evader_x", "evader_y", "evader_heading", "pursuer_x", "pursuer_y",
    "pursuer_heading", "steer", "d_target", "d_pursuer", "d_obstacle", "r_evade", "r_reach",
    "r_avoid", "outcome", "done",
];

impl TrajectoryRow {
    fn capture(env: &PegEnv, episode: usize, psi: f64, reward: ObjectiveVector) -> Self {
        let (e, p) = (env.evader(), env.pursuer());
        Self {
            episode,
            step: env.steps(),
            evader: (e.x, e.y, e.beta),
            pursuer: (p.x, p.y, p.beta),
            psi,
            observation: env.observation(),
            reward,
            outcome: env.outcome(),
        }
    }

    pub fn to_csv(&self) -> Vec<String> {
        csv_row![
            self.episode,
            self.step,
            self.evader.0,
            self.evader.1,
            self.evader.2,
            self.pursuer.0,
            self.pursuer.1,
            self.pursuer.2,
            self.psi,
            self.observation.d_et,
            self.observation.d_ep,
            self.observation.d_eo,
            self.reward.evade,
            self.reward.reach,
            self.reward.avoid,
            self.outcome,
            u8::from(self.outcome.is_done()),
        ]
    }
}

/// Something that steers the evader from its firing strengths.
pub(crate) trait Controller {
    fn act(&mut self, phi: &FiringStrengths) -> Result<f64>;

    fn learn(
        &mut self,
        _phi: &FiringStrengths,
        _step: &StepResult,
        _phi_next: &FiringStrengths,
    ) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EpisodeSummary {
    pub outcome: Outcome,
    pub steps: usize,
    pub returns: ObjectiveVector,
}

/// Plays one episode from a fresh reset.
pub(crate) fn run_episode<R: Rng + ?Sized, C: Controller>(
    env: &mut PegEnv,
    rules: &FuzzyRuleBase,
    env_rng: &mut R,
    controller: &mut C,
    episode: usize,
    mut log: Option<&mut Vec<TrajectoryRow>>,
) -> Result<EpisodeSummary> {
    let obs = env.reset(env_rng);
    if let Some(log) = log.as_deref_mut() {
        log.push(TrajectoryRow::capture(env, episode, 0.0, ObjectiveVector::ZERO));
    }
    let mut phi = rules.firing_strengths(&obs.to_inputs())?;
    let mut returns = ObjectiveVector::ZERO;
    loop {
        let psi = controller.act(&phi)?;
        let step = env.step(psi);
        let phi_next = rules.firing_strengths(&step.observation.to_inputs())?;
        controller.learn(&phi, &step, &phi_next)?;
        returns = returns + step.reward;
        if let Some(log) = log.as_deref_mut() {
            log.push(TrajectoryRow::capture(env, episode, psi, step.reward));
        }
        if step.outcome.is_done() {
            return Ok(EpisodeSummary {
                outcome: step.outcome,
                steps: env.steps(),
                returns,
            });
        }
        phi = phi_next;
    }
}

/// Softmax-over-hypervolume exploration with learning after each step.
struct Learner<'a, R> {
    store: &'a mut MoqStore,
    actions: &'a [f64],
    rng: R,
    chosen: Vec<usize>,
}

impl<R: Rng> Controller for Learner<'_, R> {
    fn act(&mut self, phi: &FiringStrengths) -> Result<f64> {
        self.chosen.clear();
        let mut psi = 0.0;
        for act in phi.iter() {
            let a = self.store.select_action_hv(act.rule, &mut self.rng)?;
            self.chosen.push(a);
            psi += act.strength * self.actions[a];
        }
        Ok(psi)
    }

    fn learn(
        &mut self,
        phi: &FiringStrengths,
        step: &StepResult,
        phi_next: &FiringStrengths,
    ) -> Result<()> {
        self.store.train_step(
            phi,
            &self.chosen,
            step.reward,
            phi_next,
            step.outcome.is_terminal(),
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub store: MoqStore,
    pub records: Vec<EpisodeRecord>,
    pub trajectories: Vec<TrajectoryRow>,
}

impl TrainOutput {
    pub fn final_global_hypervolume(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.global_hypervolume)
    }

    pub fn mean_wall_time_ms(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.wall_time_ms).sum::<f64>() / self.records.len() as f64
    }
}

pub fn initial_store(config: &RunConfig) -> Result<MoqStore> {
    let rules = config.rule_base()?;
    Ok(MoqStore::new(
        rules.rule_count(),
        config.actions.len(),
        config.ray_list()?,
        config.learner_params(),
    )?)
}

/// Runs `config.episodes` training episodes.
pub fn train(config: &RunConfig) -> Result<TrainOutput> {
    config.validate()?;
    let rules = config.rule_base()?;
    let mut store = initial_store(config)?;
    let mut env = PegEnv::new(config.env.clone());
    let mut env_rng = stream(config.seed, Stream::Env);
    let mut learner = Learner {
        store: &mut store,
        actions: &config.actions,
        rng: stream(config.seed, Stream::Selection),
        chosen: Vec::new(),
    };

    let mut records = Vec::with_capacity(config.episodes);
    let mut history = Vec::with_capacity(config.episodes);
    let mut trajectories = Vec::new();
    for index in 0..config.episodes {
        let logged = config.trajectory_every > 0 && index % config.trajectory_every == 0;
        let start = Instant::now();
        let summary = run_episode(
            &mut env,
            &rules,
            &mut env_rng,
            &mut learner,
            index,
            logged.then_some(&mut trajectories),
        )?;
        let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        history.push(summary.returns);
        records.push(EpisodeRecord {
            index,
            outcome: summary.outcome,
            steps: summary.steps,
            returns: summary.returns,
            global_hypervolume: global_hypervolume_metric(&history, config.metric_window)?,
            wall_time_ms,
        });
    }
    Ok(TrainOutput {
        store,
        records,
        trajectories,
    })
}

pub fn write_episodes(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    write_csv(
        path,
        EPISODES_SCHEMA,
        &["episode", "outcome", "steps", "return_evade", "return_reach", "return_avoid", "return_window_hypervolume"],
        records.iter().map(|r| {
            csv_row![
                r.index,
                r.outcome,
                r.steps,
                r.returns.evade,
                r.returns.reach,
                r.returns.avoid,
                r.global_hypervolume,
            ]
        }),
    )
}

pub fn write_trajectories(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_csv(path, TRAJECTORY_SCHEMA, &TRAJECTORY_HEADER, rows.iter().map(TrajectoryRow::to_csv))
}

/// Wall-clock times live apart from `episodes.csv`, which stays
/// byte-identical for a given config and seed.
pub fn write_timing(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    write_csv(
        path,
        TIMING_SCHEMA,
        &["episode", "wall_time_ms"],
        records.iter().map(|r| csv_row![r.index, r.wall_time_ms]),
    )
}

pub fn save_store(path: &Path, store: &MoqStore) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    store.write_to(std::io::BufWriter::new(file))?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<MoqStore> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(MoqStore::read_from(std::io::BufReader::new(file))?)
}

/// Trains and writes `store.txt`, `episodes.csv`, `trajectories.csv` and
/// `timing.csv` into `out`.
pub fn cmd_train(config: &RunConfig, out: &Path) -> Result<TrainOutput> {
    ensure_dir(out)?;
    let output = train(config)?;
    save_store(&out.join(STORE_FILE), &output.store)?;
    write_episodes(&out.join(EPISODES_FILE), &output.records)?;
    write_trajectories(&out.join(TRAJECTORIES_FILE), &output.trajectories)?;
    write_timing(&out.join(TIMING_FILE), &output.records)?;
    Ok(output)
}
