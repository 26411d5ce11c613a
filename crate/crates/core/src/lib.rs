//! Three-objective fuzzy Q-learning for a pursuit-evasion game.
//!
//! The crate is layered bottom-up:
//!
//! - [`pareto`]: dominance, non-dominated filtering, set operators, 3-D
//!   hypervolume, preference rays and the set-valued Bellman backup.
//! - [`fuzzy`]: triangular membership functions and the rule lattice.
//! - [`fql`]: scalar fuzzy Q-learning, used as a baseline and as an oracle.
//! - [`learner`]: the multi-objective learner built on Pareto Q-sets.
//! - [`env`]: bicycle-model pursuit-evasion environment.
//! - [`harness`]: configuration, training and evaluation loops, sweeps,
//!   the synthetic Pareto-front demo and CSV output.

pub mod env;
pub mod fql;
pub mod fuzzy;
pub mod harness;
pub mod learner;
pub mod pareto;

pub use learner::{GlobalPolicySnapshot, LearnerParams, MoqStore};
pub use pareto::{NdSet, ObjectiveVector, Ray, RaySpec};
