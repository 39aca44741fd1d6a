use std::f64::consts::PI;
use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Env, Transition};
use crate::error::ensure_finite;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub max_torque: f64,
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_speed: f64,
    pub horizon: u32,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            max_torque: 2.0,
            dt: 0.05,
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            max_speed: 8.0,
            horizon: 200,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.max_torque,
            self.dt,
            self.gravity,
            self.mass,
            self.length,
            self.max_speed,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.horizon == 0 {
            return Err(Error::Config("pendulum parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn angle_normalize(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    theta - two_pi * ((theta - PI) / two_pi).ceil()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
    pub t: u32,
}

impl PendulumState {
    pub fn new(theta: f64, theta_dot: f64) -> Self {
        Self {
            theta: angle_normalize(theta),
            theta_dot,
            t: 0,
        }
    }

    /// `(cos theta, sin theta, theta_dot / max_speed)`, every channel in `[-1, 1]`.
    pub fn observation(&self, params: &PendulumParams) -> [f64; 3] {
        [
            self.theta.cos(),
            self.theta.sin(),
            self.theta_dot / params.max_speed,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumStep {
    pub next: PendulumState,
    pub reward: f64,
    pub truncated: bool,
}

/// Explicit-Euler pendulum step with clipped torque and speed.
pub fn pendulum_step(
    state: &PendulumState,
    torque: f64,
    params: &PendulumParams,
) -> Result<PendulumStep> {
    ensure_finite(torque, "torque")?;
    ensure_finite(state.theta, "theta")?;
    ensure_finite(state.theta_dot, "theta_dot")?;
    let u = torque.clamp(-params.max_torque, params.max_torque);
    let th = state.theta;
    let thdot = state.theta_dot;
    let wrapped = angle_normalize(th);
    let cost = wrapped * wrapped + 0.1 * thdot * thdot + 0.001 * u * u;
    let (g, m, l, dt) = (params.gravity, params.mass, params.length, params.dt);
    let accel = 3.0 * g / (2.0 * l) * th.sin() + 3.0 / (m * l * l) * u;
    let new_thdot = (thdot + accel * dt).clamp(-params.max_speed, params.max_speed);
    let new_th = th + new_thdot * dt;
    let t = state.t + 1;
    Ok(PendulumStep {
        next: PendulumState {
            theta: angle_normalize(new_th),
            theta_dot: new_thdot,
            t,
        },
        reward: -cost,
        truncated: t >= params.horizon,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumTrajectory {
    pub states: Vec<PendulumState>,
    pub torques: Vec<f64>,
    pub rewards: Vec<f64>,
}

impl PendulumTrajectory {
    pub fn ret(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Runs a torque policy for the full horizon.
pub fn pendulum_rollout<P>(
    mut policy: P,
    start: PendulumState,
    params: &PendulumParams,
) -> Result<PendulumTrajectory>
where
    P: FnMut(&PendulumState) -> f64,
{
    try_pendulum_rollout(|s| Ok(policy(s)), start, params)
}

/// Like [`pendulum_rollout`] for policies that can fail.
pub fn try_pendulum_rollout<P>(
    mut policy: P,
    start: PendulumState,
    params: &PendulumParams,
) -> Result<PendulumTrajectory>
where
    P: FnMut(&PendulumState) -> Result<f64>,
{
    let h = params.horizon as usize;
    let mut traj = PendulumTrajectory {
        states: Vec::with_capacity(h + 1),
        torques: Vec::with_capacity(h),
        rewards: Vec::with_capacity(h),
    };
    let mut state = PendulumState { t: 0, ..start };
    traj.states.push(state);
    loop {
        let torque = ensure_finite(policy(&state)?, "policy output")?;
        let step = pendulum_step(&state, torque, params)?;
        traj.torques
            .push(torque.clamp(-params.max_torque, params.max_torque));
        traj.rewards.push(step.reward);
        traj.states.push(step.next);
        state = step.next;
        if step.truncated {
            break;
        }
    }
    Ok(traj)
}

/// Writes `t,theta,theta_dot,torque,reward`, one row per step.
pub fn write_pendulum_trajectory_csv<W: Write>(
    traj: &PendulumTrajectory,
    mut out: W,
) -> Result<()> {
    writeln!(out, "t,theta,theta_dot,torque,reward")?;
    for (i, ((s, u), r)) in traj
        .states
        .iter()
        .zip(&traj.torques)
        .zip(&traj.rewards)
        .enumerate()
    {
        writeln!(out, "{i},{},{},{u},{r}", s.theta, s.theta_dot)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    pub params: PendulumParams,
    pub state: PendulumState,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Self {
        Self {
            params,
            state: PendulumState::new(PI, 0.0),
        }
    }

    pub fn reset_to(&mut self, theta: f64, theta_dot: f64) -> Vec<f64> {
        self.state = PendulumState::new(theta, theta_dot);
        self.observation()
    }
}

impl Env for Pendulum {
    fn obs_dim(&self) -> usize {
        3
    }

    fn obs_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); 3]
    }

    fn action_gain(&self) -> f64 {
        self.params.max_torque
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        let theta = rng.gen_range(-PI..=PI);
        let theta_dot = rng.gen_range(-1.0..=1.0);
        self.reset_to(theta, theta_dot)
    }

    fn step(&mut self, action: f64) -> Result<Transition> {
        let step = pendulum_step(&self.state, action, &self.params)?;
        self.state = step.next;
        Ok(Transition {
            obs: self.observation(),
            reward: step.reward,
            terminated: false,
            truncated: step.truncated,
        })
    }

    fn observation(&self) -> Vec<f64> {
        self.state.observation(&self.params).to_vec()
    }
}
