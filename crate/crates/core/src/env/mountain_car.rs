use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Env, Transition};
use crate::error::ensure_finite;
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Lower end of the start-position distribution.
pub const START_LO: f64 = -0.6;
/// Upper end of the start-position distribution.
pub const START_HI: f64 = -0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub a_max: f64,
    pub g: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub v_max: f64,
    pub x_goal: f64,
    pub v_goal: f64,
    pub t_max: u32,
    pub goal_bonus: f64,
    pub action_cost_coeff: f64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            a_max: 0.0015,
            g: 0.0025,
            x_min: -1.2,
            x_max: 0.6,
            v_max: 0.07,
            x_goal: 0.45,
            v_goal: 0.0,
            t_max: 999,
            goal_bonus: 100.0,
            action_cost_coeff: 0.1,
        }
    }
}

impl McParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a_max,
            self.g,
            self.x_min,
            self.x_max,
            self.v_max,
            self.x_goal,
            self.v_goal,
            self.goal_bonus,
            self.action_cost_coeff,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "mountain car parameters must be finite".into(),
            ));
        }
        if !(self.x_min < self.x_goal && self.x_goal <= self.x_max) {
            return Err(Error::Config(format!(
                "need x_min < x_goal <= x_max, got {} / {} / {}",
                self.x_min, self.x_goal, self.x_max
            )));
        }
        if self.a_max <= 0.0 || self.g <= 0.0 || self.v_max <= 0.0 {
            return Err(Error::Config("a_max, g and v_max must be positive".into()));
        }
        Ok(())
    }

    /// Observation box of the environment: `[x_min, x_max] x [-v_max, v_max]`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(self.x_min, self.x_max), (-self.v_max, self.v_max)]
    }

    fn goal_reached(&self, x: f64, v: f64) -> bool {
        x >= self.x_goal && v >= self.v_goal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McState {
    pub x: f64,
    pub v: f64,
    pub t: u32,
}

impl McState {
    pub fn at_rest(x: f64) -> Self {
        Self { x, v: 0.0, t: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub next: McState,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub wall_hit: bool,
}

/// One step of the discrete dynamics
/// `v' = v + a_max * alpha - g * cos(3x)`, `x' = x + v'` with box clamping and an
/// inelastic left wall.
pub fn mc_step(state: &McState, action: f64, params: &McParams) -> Result<StepResult> {
    ensure_finite(action, "action")?;
    ensure_finite(state.x, "position")?;
    ensure_finite(state.v, "velocity")?;
    let alpha = action.clamp(-1.0, 1.0);
    let mut v = state.v + params.a_max * alpha - params.g * (3.0 * state.x).cos();
    v = v.clamp(-params.v_max, params.v_max);
    let raw_x = state.x + v;
    let x = raw_x.clamp(params.x_min, params.x_max);
    let wall_hit = raw_x <= params.x_min && v < 0.0;
    if wall_hit {
        v = 0.0;
    }
    let t = state.t + 1;
    let terminated = params.goal_reached(x, v);
    let truncated = t >= params.t_max;
    let mut reward = -params.action_cost_coeff * alpha * alpha;
    if terminated {
        reward += params.goal_bonus;
    }
    Ok(StepResult {
        next: McState { x, v, t },
        reward,
        terminated,
        truncated,
        wall_hit,
    })
}

/// Start state drawn from `U([-0.6, -0.4])` using the seed's reset stream, or
/// the override position when given.
pub fn mc_reset(seed: u64, x0_override: Option<f64>, params: &McParams) -> Result<McState> {
    match x0_override {
        Some(x0) => {
            ensure_finite(x0, "x0")?;
            if x0 < params.x_min || x0 > params.x_max {
                return Err(Error::Domain(format!(
                    "x0 = {x0} outside [{}, {}]",
                    params.x_min, params.x_max
                )));
            }
            Ok(McState::at_rest(x0))
        }
        None => {
            let mut rng = rng::seeded(seed, rng::stream::RESET);
            Ok(McState::at_rest(draw_start(&mut rng)))
        }
    }
}

fn draw_start(rng: &mut Rng) -> f64 {
    rng.gen_range(START_LO..=START_HI)
}

/// Full record of a deterministic rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// States `s_0 .. s_n`; one more than the number of actions.
    pub states: Vec<McState>,
    /// Clamped actions actually applied.
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Step indices (0-based, of the action) at which the left wall was hit.
    pub wall_events: Vec<usize>,
    pub terminated: bool,
}

impl Trajectory {
    pub fn x0(&self) -> f64 {
        self.states[0].x
    }

    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    /// Sum of squared actions.
    pub fn loss(&self) -> f64 {
        self.actions.iter().map(|a| a * a).sum()
    }

    pub fn ret(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Step count at which the goal was reached.
    pub fn t_star(&self) -> Option<usize> {
        self.terminated.then(|| self.steps())
    }

    /// Velocity on the terminating step.
    pub fn v_star(&self) -> Option<f64> {
        self.terminated
            .then(|| self.states.last().map(|s| s.v).unwrap_or(0.0))
    }

    pub fn final_state(&self) -> McState {
        *self
            .states
            .last()
            .expect("trajectory holds its start state")
    }
}

/// Runs `policy` from `(x0, 0)` until the goal is reached or `t_max` steps pass.
pub fn mc_rollout<P>(policy: P, x0: f64, params: &McParams) -> Result<Trajectory>
where
    P: FnMut(&McState) -> f64,
{
    rollout_from(policy, McState::at_rest(x0), params)
}

pub fn rollout_from<P>(mut policy: P, start: McState, params: &McParams) -> Result<Trajectory>
where
    P: FnMut(&McState) -> f64,
{
    try_rollout_from(|s| Ok(policy(s)), start, params)
}

/// Like [`rollout_from`] for policies that can fail.
pub fn try_rollout_from<P>(mut policy: P, start: McState, params: &McParams) -> Result<Trajectory>
where
    P: FnMut(&McState) -> Result<f64>,
{
    let cap = params.t_max as usize;
    let mut traj = Trajectory {
        states: Vec::with_capacity(cap + 1),
        actions: Vec::with_capacity(cap),
        rewards: Vec::with_capacity(cap),
        wall_events: Vec::new(),
        terminated: false,
    };
    traj.states.push(start);
    let mut state = start;
    while state.t < params.t_max {
        let action = ensure_finite(policy(&state)?, "policy output")?;
        let step = mc_step(&state, action, params)?;
        if step.wall_hit {
            traj.wall_events.push(traj.actions.len());
        }
        traj.actions.push(action.clamp(-1.0, 1.0));
        traj.rewards.push(step.reward);
        traj.states.push(step.next);
        state = step.next;
        if step.terminated {
            traj.terminated = true;
            break;
        }
    }
    Ok(traj)
}

/// Writes `t,x,v,action,reward`, one row per step, state taken before the step.
pub fn write_mc_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    writeln!(out, "t,x,v,action,reward")?;
    for (i, ((s, a), r)) in traj
        .states
        .iter()
        .zip(&traj.actions)
        .zip(&traj.rewards)
        .enumerate()
    {
        writeln!(out, "{i},{},{},{a},{r}", s.x, s.v)?;
    }
    Ok(())
}

/// Stateful wrapper used by the trainers.
#[derive(Debug, Clone)]
pub struct MountainCar {
    pub params: McParams,
    pub state: McState,
}

impl MountainCar {
    pub fn new(params: McParams) -> Self {
        Self {
            params,
            state: McState::at_rest(-0.5),
        }
    }

    pub fn reset_to(&mut self, x0: f64) -> Vec<f64> {
        self.state = McState::at_rest(x0);
        self.observation()
    }
}

impl Env for MountainCar {
    fn obs_dim(&self) -> usize {
        2
    }

    fn obs_bounds(&self) -> Vec<(f64, f64)> {
        self.params.bounds()
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.state = McState::at_rest(draw_start(rng));
        self.observation()
    }

    fn step(&mut self, action: f64) -> Result<Transition> {
        let step = mc_step(&self.state, action, &self.params)?;
        self.state = step.next;
        Ok(Transition {
            obs: self.observation(),
            reward: step.reward,
            terminated: step.terminated,
            truncated: step.truncated && !step.terminated,
        })
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.state.x, self.state.v]
    }
}
