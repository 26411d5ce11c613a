//! One-evader, one-pursuer game on a square arena with a circular target
//! region and a static circular obstacle. Both agents follow kinematic
//! bicycle dynamics integrated with explicit Euler steps.

use std::f64::consts::{FRAC_PI_3, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::pareto::ObjectiveVector;

/// Steering magnitude bound for both agents.
pub const PSI_LIMIT: f64 = FRAC_PI_3;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub beta: f64,
    pub speed: f64,
    pub wheelbase: f64,
}

impl AgentState {
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Explicit Euler step of the bicycle model with the steering angle clamped
/// to `±π/3`.
pub fn step_kinematics(s: &AgentState, psi: f64, dt: f64) -> AgentState {
    let psi = psi.clamp(-PSI_LIMIT, PSI_LIMIT);
    let (sin_b, cos_b) = s.beta.sin_cos();
    AgentState {
        x: s.x + s.speed * cos_b * dt,
        y: s.y + s.speed * sin_b * dt,
        beta: wrap_angle(s.beta + s.speed * psi / s.wheelbase * dt),
        ..*s
    }
}

/// Arena geometry and episode limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
    pub target: (f64, f64),
    pub target_radius: f64,
    pub obstacle: (f64, f64),
    pub obstacle_radius: f64,
    pub capture_radius: f64,
    pub dt: f64,
    pub max_steps: usize,
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            width: 10.0,
            height: 10.0,
            target: (10.0, 5.0),
            target_radius: 2.0,
            obstacle: (5.0, 5.0),
            obstacle_radius: 1.0,
            capture_radius: 0.5,
            dt: 0.1,
            max_steps: 500,
        }
    }
}

impl Arena {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

/// Full environment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub arena: Arena,
    pub evader_speed: f64,
    pub pursuer_speed: f64,
    pub wheelbase: f64,
    /// Evader start `(x, y, heading)`.
    pub evader_start: (f64, f64, f64),
    pub pursuer_start: (f64, f64, f64),
    /// Half-width of the uniform jitter applied to both start positions.
    pub start_jitter: f64,
    pub pursuer_gain: f64,
    /// Leaving the arena ends the episode as a timeout.
    pub exit_ends_episode: bool,
    pub reach_bonus: f64,
    pub capture_penalty: f64,
    pub collision_penalty: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            arena: Arena::default(),
            evader_speed: 1.0,
            pursuer_speed: 1.1,
            wheelbase: 0.5,
            evader_start: (0.5, 5.0, 0.0),
            pursuer_start: (0.5, 1.0, 0.0),
            start_jitter: 0.0,
            pursuer_gain: 2.0,
            exit_ends_episode: true,
            reach_bonus: 0.0,
            capture_penalty: 0.0,
            collision_penalty: 0.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        let a = &self.arena;
        let positive = [
            ("target_radius", a.target_radius),
            ("obstacle_radius", a.obstacle_radius),
            ("capture_radius", a.capture_radius),
            ("dt", a.dt),
            ("width", a.width),
            ("height", a.height),
            ("evader_speed", self.evader_speed),
            ("pursuer_speed", self.pursuer_speed),
            ("wheelbase", self.wheelbase),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if a.max_steps == 0 {
            return Err("max_steps must be at least 1".into());
        }
        if !(self.start_jitter.is_finite() && self.start_jitter >= 0.0) {
            return Err(format!("start_jitter must be non-negative, got {}", self.start_jitter));
        }
        Ok(())
    }
}

/// Network inputs `[d_ET, d_EP, d_EO, β_E]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub d_et: f64,
    pub d_ep: f64,
    pub d_eo: f64,
    pub beta_e: f64,
}

impl Observation {
    pub fn to_inputs(&self) -> [f64; 4] {
        [self.d_et, self.d_ep, self.d_eo, self.beta_e]
    }
}

pub fn observe(evader: &AgentState, pursuer: &AgentState, arena: &Arena) -> Observation {
    Observation {
        d_et: evader.distance_to(arena.target.0, arena.target.1),
        d_ep: evader.distance_to(pursuer.x, pursuer.y),
        d_eo: evader.distance_to(arena.obstacle.0, arena.obstacle.1),
        beta_e: wrap_angle(evader.beta),
    }
}

/// Potential-difference rewards: growing the pursuer gap, closing on the
/// target and growing the obstacle gap are all positive.
pub fn reward_vector(before: &Observation, after: &Observation) -> ObjectiveVector {
    ObjectiveVector::new(
        after.d_ep - before.d_ep,
        before.d_et - after.d_et,
        after.d_eo - before.d_eo,
    )
}

/// Pure-pursuit steering: `clamp(gain · wrap(bearing - heading), ±π/3)`.
pub fn pursuer_policy(pursuer: &AgentState, evader: &AgentState, gain: f64) -> f64 {
    let bearing = (evader.y - pursuer.y).atan2(evader.x - pursuer.x);
    (gain * wrap_angle(bearing - pursuer.beta)).clamp(-PSI_LIMIT, PSI_LIMIT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Running,
    Reached,
    Captured,
    Collided,
    Timeout,
}

impl Outcome {
    pub fn is_done(self) -> bool {
        self != Outcome::Running
    }

    /// Whether the episode ended in an absorbing state (no bootstrap).
    pub fn is_terminal(self) -> bool {
        matches!(self, Outcome::Reached | Outcome::Captured | Outcome::Collided)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::Reached => "reached",
            Outcome::Captured => "captured",
            Outcome::Collided => "collided",
            Outcome::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "running" => Outcome::Running,
            "reached" => Outcome::Reached,
            "captured" => Outcome::Captured,
            "collided" => Outcome::Collided,
            "timeout" => Outcome::Timeout,
            other => return Err(format!("unknown outcome `{other}`")),
        })
    }
}

/// Precedence when several conditions hold: captured, collided, reached,
/// timeout.
pub fn check_termination(obs: &Observation, step: usize, arena: &Arena) -> Outcome {
    if obs.d_ep <= arena.capture_radius {
        Outcome::Captured
    } else if obs.d_eo <= arena.obstacle_radius {
        Outcome::Collided
    } else if obs.d_et <= arena.target_radius {
        Outcome::Reached
    } else if step >= arena.max_steps {
        Outcome::Timeout
    } else {
        Outcome::Running
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: ObjectiveVector,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct PegEnv {
    config: EnvConfig,
    evader: AgentState,
    pursuer: AgentState,
    steps: usize,
    outcome: Outcome,
}

impl PegEnv {
    pub fn new(config: EnvConfig) -> Self {
        let mut env = Self {
            evader: agent(config.evader_start, config.evader_speed, config.wheelbase),
            pursuer: agent(config.pursuer_start, config.pursuer_speed, config.wheelbase),
            config,
            steps: 0,
            outcome: Outcome::Running,
        };
        env.reset_to_start();
        env
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn evader(&self) -> &AgentState {
        &self.evader
    }

    pub fn pursuer(&self) -> &AgentState {
        &self.pursuer
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    fn reset_to_start(&mut self) -> Observation {
        let c = &self.config;
        self.evader = agent(c.evader_start, c.evader_speed, c.wheelbase);
        self.pursuer = agent(c.pursuer_start, c.pursuer_speed, c.wheelbase);
        self.steps = 0;
        self.outcome = Outcome::Running;
        self.observation()
    }

    /// Resets to the configured start poses, jittered by `start_jitter`. The
    /// random source is only consumed when jitter is enabled.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Observation {
        self.reset_to_start();
        let j = self.config.start_jitter;
        if j > 0.0 {
            for s in [&mut self.evader, &mut self.pursuer] {
                s.x += rng.gen_range(-j..=j);
                s.y += rng.gen_range(-j..=j);
            }
        }
        self.observation()
    }

    pub fn observation(&self) -> Observation {
        observe(&self.evader, &self.pursuer, &self.config.arena)
    }

    /// Advances both agents by one step with the evader steering `psi`.
    pub fn step(&mut self, psi: f64) -> StepResult {
        let before = self.observation();
        let dt = self.config.arena.dt;
        let pursuer_psi = pursuer_policy(&self.pursuer, &self.evader, self.config.pursuer_gain);
        self.evader = step_kinematics(&self.evader, psi, dt);
        self.pursuer = step_kinematics(&self.pursuer, pursuer_psi, dt);
        self.steps += 1;

        let after = self.observation();
        let mut outcome = check_termination(&after, self.steps, &self.config.arena);
        if outcome == Outcome::Running
            && self.config.exit_ends_episode
            && !self.config.arena.contains(self.evader.x, self.evader.y)
        {
            outcome = Outcome::Timeout;
        }
        self.outcome = outcome;

        let mut reward = reward_vector(&before, &after);
        match outcome {
            Outcome::Reached => reward.reach += self.config.reach_bonus,
            Outcome::Captured => reward.evade -= self.config.capture_penalty,
            Outcome::Collided => reward.avoid -= self.config.collision_penalty,
            _ => {}
        }
        StepResult {
            observation: after,
            reward,
            outcome,
        }
    }
}

fn agent(pose: (f64, f64, f64), speed: f64, wheelbase: f64) -> AgentState {
    AgentState {
        x: pose.0,
        y: pose.1,
        beta: wrap_angle(pose.2),
        speed,
        wheelbase,
    }
}
