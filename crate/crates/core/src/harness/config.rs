//! Run configuration and its key-value (TOML) file form.
//!
//! Every key is optional; missing keys keep their defaults. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `seed` | master seed | 0 |
//! | `episodes` | training episodes | 1000 |
//! | `alpha` | learning rate | 0.01 |
//! | `gamma` | discount factor | 0.9 |
//! | `tau` | softmax inverse temperature | 2.0 |
//! | `ray_count` | number of lattice rays (count mode) | — |
//! | `ray_angles` | explicit `[[theta, phi], ...]` list | 5×5 evaluation grid |
//! | `prune_limit` | rows kept per Q-set | ray count |
//! | `distance_max`, `distance_mfs` | distance inputs on `[0, max]` | 10, 6 |
//! | `angle_limit`, `angle_mfs` | heading input on `[-limit, limit]` | π/4, 5 |
//! | `actions` | steering set (rad) | `[-π/3, -π/6, 0, π/6, π/3]` |
//! | `metric_window` | episodes in the global hypervolume window | 50 |
//! | `trajectory_every` | log every n-th training episode (0 = none) | 100 |
//! | `dt`, `max_steps` | integration step, step limit | 0.1, 500 |
//! | `capture_radius`, `obstacle_radius`, `target_radius` | radii (m) | 0.5, 1.0, 2.0 |
//! | `evader_speed`, `pursuer_speed`, `wheelbase` | agent constants | 1.0, 1.1, 0.5 |
//! | `evader_start`, `pursuer_start` | `[x, y, heading]` | `[0.5, 5, 0]`, `[0.5, 1, 0]` |
//! | `start_jitter` | uniform start-position jitter (m) | 0 |
//! | `pursuer_gain` | pure-pursuit gain | 2.0 |
//! | `exit_ends_episode` | leaving the arena ends the episode | true |
//! | `reach_bonus`, `capture_penalty`, `collision_penalty` | terminal shaping | 0 |

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::HarnessError;
use crate::env::EnvConfig;
use crate::fuzzy::{FuzzyRuleBase, InputSpec};
use crate::learner::LearnerParams;
use crate::pareto::{sample_rays, Ray, RaySpec};

/// Heading offsets from the avoid axis used for per-preference evaluation.
pub const EVAL_THETAS: [f64; 5] = [
    FRAC_PI_4,
    3.0 * std::f64::consts::PI / 16.0,
    std::f64::consts::PI / 8.0,
    std::f64::consts::PI / 16.0,
    0.0,
];

/// Azimuths inside the evade/reach plane used for evaluation.
pub const EVAL_PHIS: [f64; 5] = [
    std::f64::consts::FRAC_PI_2,
    3.0 * std::f64::consts::PI / 8.0,
    FRAC_PI_4,
    std::f64::consts::PI / 8.0,
    0.0,
];

/// All 25 `(theta, phi)` evaluation pairs, theta-major.
pub fn eval_grid() -> Vec<(f64, f64)> {
    EVAL_THETAS
        .iter()
        .flat_map(|&t| EVAL_PHIS.iter().map(move |&p| (t, p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub rays: RaySpec,
    pub prune_limit: Option<usize>,
    pub distance_max: f64,
    pub distance_mfs: usize,
    pub angle_limit: f64,
    pub angle_mfs: usize,
    pub actions: Vec<f64>,
    pub metric_window: usize,
    pub trajectory_every: usize,
    pub env: EnvConfig,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            episodes: 1000,
            alpha: 0.01,
            gamma: 0.9,
            tau: 2.0,
            rays: RaySpec::Explicit(eval_grid()),
            prune_limit: None,
            distance_max: 10.0,
            distance_mfs: 6,
            angle_limit: FRAC_PI_4,
            angle_mfs: 5,
            actions: vec![-FRAC_PI_3, -FRAC_PI_6, 0.0, FRAC_PI_6, FRAC_PI_3],
            metric_window: 50,
            trajectory_every: 100,
            env: EnvConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn rule_base(&self) -> Result<FuzzyRuleBase, HarnessError> {
        let dist = |name: &str| InputSpec::new(name, 0.0, self.distance_max, self.distance_mfs);
        Ok(FuzzyRuleBase::new(vec![
            dist("d_et")?,
            dist("d_ep")?,
            dist("d_eo")?,
            InputSpec::new("beta_e", -self.angle_limit, self.angle_limit, self.angle_mfs)?,
        ]))
    }

    pub fn ray_list(&self) -> Result<Vec<Ray>, HarnessError> {
        Ok(sample_rays(&self.rays)?)
    }

    pub fn learner_params(&self) -> LearnerParams {
        LearnerParams {
            alpha: self.alpha,
            gamma: self.gamma,
            tau: self.tau,
            prune_limit: self.prune_limit,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.actions.is_empty() {
            return bad("action set is empty".into());
        }
        if self.actions.iter().any(|a| !a.is_finite()) {
            return bad("action set has a non-finite angle".into());
        }
        if self.metric_window == 0 {
            return bad("metric_window must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.prune_limit == Some(0) {
            return bad("prune_limit must be at least 1".into());
        }
        self.env.validate().map_err(HarnessError::Config)?;
        self.rule_base()?;
        self.ray_list()?;
        Ok(())
    }

    /// Reads a config file and layers it over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut cfg = Self::default();
        file.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    episodes: Option<usize>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    tau: Option<f64>,
    ray_count: Option<usize>,
    ray_angles: Option<Vec<[f64; 2]>>,
    prune_limit: Option<usize>,
    distance_max: Option<f64>,
    distance_mfs: Option<usize>,
    angle_limit: Option<f64>,
    angle_mfs: Option<usize>,
    actions: Option<Vec<f64>>,
    metric_window: Option<usize>,
    trajectory_every: Option<usize>,
    out: Option<PathBuf>,
    dt: Option<f64>,
    max_steps: Option<usize>,
    capture_radius: Option<f64>,
    obstacle_radius: Option<f64>,
    target_radius: Option<f64>,
    evader_speed: Option<f64>,
    pursuer_speed: Option<f64>,
    wheelbase: Option<f64>,
    evader_start: Option<[f64; 3]>,
    pursuer_start: Option<[f64; 3]>,
    start_jitter: Option<f64>,
    pursuer_gain: Option<f64>,
    exit_ends_episode: Option<bool>,
    reach_bonus: Option<f64>,
    capture_penalty: Option<f64>,
    collision_penalty: Option<f64>,
}

macro_rules! set {
    ($src:expr, $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl ConfigFile {
    fn apply(self, cfg: &mut RunConfig) -> Result<(), HarnessError> {
        set!(self.seed, cfg.seed);
        set!(self.episodes, cfg.episodes);
        set!(self.alpha, cfg.alpha);
        set!(self.gamma, cfg.gamma);
        set!(self.tau, cfg.tau);
        match (self.ray_count, self.ray_angles) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config(
                    "set either ray_count or ray_angles, not both".into(),
                ))
            }
            (Some(h), None) => cfg.rays = RaySpec::Count(h),
            (None, Some(a)) => cfg.rays = RaySpec::Explicit(a.into_iter().map(|[t, p]| (t, p)).collect()),
            (None, None) => {}
        }
        if self.prune_limit.is_some() {
            cfg.prune_limit = self.prune_limit;
        }
        set!(self.distance_max, cfg.distance_max);
        set!(self.distance_mfs, cfg.distance_mfs);
        set!(self.angle_limit, cfg.angle_limit);
        set!(self.angle_mfs, cfg.angle_mfs);
        set!(self.actions, cfg.actions);
        set!(self.metric_window, cfg.metric_window);
        set!(self.trajectory_every, cfg.trajectory_every);
        set!(self.out, cfg.out);

        let env = &mut cfg.env;
        set!(self.dt, env.arena.dt);
        set!(self.max_steps, env.arena.max_steps);
        set!(self.capture_radius, env.arena.capture_radius);
        set!(self.obstacle_radius, env.arena.obstacle_radius);
        set!(self.target_radius, env.arena.target_radius);
        set!(self.evader_speed, env.evader_speed);
        set!(self.pursuer_speed, env.pursuer_speed);
        set!(self.wheelbase, env.wheelbase);
        if let Some([x, y, h]) = self.evader_start {
            env.evader_start = (x, y, h);
        }
        if let Some([x, y, h]) = self.pursuer_start {
            env.pursuer_start = (x, y, h);
        }
        set!(self.start_jitter, env.start_jitter);
        set!(self.pursuer_gain, env.pursuer_gain);
        set!(self.exit_ends_episode, env.exit_ends_episode);
        set!(self.reach_bonus, env.reach_bonus);
        set!(self.capture_penalty, env.capture_penalty);
        set!(self.collision_penalty, env.collision_penalty);
        Ok(())
    }
}
