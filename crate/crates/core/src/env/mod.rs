//! Discrete-time environments: continuous Mountain Car and Pendulum.
//!
//! Both environments clamp out-of-range actions before use and are pure
//! functions of (state, action); the structs implementing [`Env`] only carry
//! the current state and step counter.

mod mountain_car;
mod pendulum;

pub use mountain_car::{
    mc_reset, mc_rollout, mc_step, rollout_from, try_rollout_from, write_mc_trajectory_csv,
    McParams, McState, MountainCar, StepResult, Trajectory, START_HI, START_LO,
};
pub use pendulum::{
    angle_normalize, pendulum_rollout, pendulum_step, try_pendulum_rollout,
    write_pendulum_trajectory_csv, Pendulum, PendulumParams, PendulumState, PendulumStep,
    PendulumTrajectory,
};

use crate::{rng::Rng, Result};

/// Outcome of a single [`Env::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// Common interface the trainers and the evaluation harness drive.
pub trait Env: Send {
    /// Dimension of the observation vector handed to policies.
    fn obs_dim(&self) -> usize;
    /// Box bounds of the observation, used as Chebyshev input scaling.
    fn obs_bounds(&self) -> Vec<(f64, f64)>;
    /// Scale from the policy's raw output to the environment's action units.
    fn action_gain(&self) -> f64 {
        1.0
    }
    /// Draws a start state from the environment's start distribution.
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;
    fn step(&mut self, action: f64) -> Result<Transition>;
    fn observation(&self) -> Vec<f64>;
}

/// Which environment a policy or run belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    #[serde(rename = "mountaincar")]
    MountainCar,
    Pendulum,
}

impl EnvKind {
    pub fn make(self) -> Box<dyn Env> {
        match self {
            EnvKind::MountainCar => Box::new(MountainCar::new(McParams::default())),
            EnvKind::Pendulum => Box::new(Pendulum::new(PendulumParams::default())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::MountainCar => "mountaincar",
            EnvKind::Pendulum => "pendulum",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mountaincar" => Ok(EnvKind::MountainCar),
            "pendulum" => Ok(EnvKind::Pendulum),
            other => Err(crate::Error::Config(format!(
                "unknown environment '{other}'"
            ))),
        }
    }
}
