//! Optimal control of the continuous Mountain Car by proportional thrust
//! `alpha = C * v`.
//!
//! The searches run on the discrete environment. Continuous-time tools (the
//! elliptic-integral period and an RK4 integrator of `x'' = a_max alpha - g cos 3x`)
//! exist for validating the energy picture only.

mod feasibility;
mod period;
mod policy;
mod solve;

pub use feasibility::{benchmark_variant, infeasible_wall_interval, wall_feasibility, McVariant};
pub use period::{complete_elliptic_k, ode_zero_action, oscillation_period, rk4_period, OdeSample};
pub use policy::{
    pi_ana_policy, proportional_policy, BangPolicy, PhaseBoundary, TwoPhasePolicy, WorstCaseParams,
};
pub use solve::{
    pi_opt_x0, probe, solve_phase_two, solve_single_phase, solve_two_phase, solve_two_phase_with,
    AnalyticSolution, PhaseTwo, Probe, SearchConfig, SolutionKind, Stop,
};

use serde::Serialize;

use crate::env::{McParams, Trajectory};
use crate::{Error, Result};

/// Gravity potential relative to the start, `U_g(x) = (g/3)(sin 3x - sin 3x0)`,
/// and the action potential accumulated along the unrolled coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialModel {
    pub x0: f64,
    pub g: f64,
    pub a_max: f64,
}

impl PotentialModel {
    pub fn new(x0: f64, params: &McParams) -> Self {
        Self {
            x0,
            g: params.g,
            a_max: params.a_max,
        }
    }

    pub fn u_g(&self, x: f64) -> f64 {
        self.g / 3.0 * ((3.0 * x).sin() - (3.0 * self.x0).sin())
    }

    /// `1/2 v^2 + U_g(x) + U_a`.
    pub fn energy(&self, x: f64, v: f64, u_a: f64) -> f64 {
        0.5 * v * v + self.u_g(x) + u_a
    }

    /// Samples of `(xi, U_a)` along a discrete trajectory, with
    /// `U_a(xi) = -a_max * sum |alpha_t v_{t+1}|`.
    pub fn action_potential(&self, traj: &Trajectory) -> Vec<(f64, f64)> {
        let mut xi = 0.0;
        let mut u_a = 0.0;
        let mut out = Vec::with_capacity(traj.states.len());
        out.push((xi, u_a));
        for (t, a) in traj.actions.iter().enumerate() {
            let (s, next) = (traj.states[t], traj.states[t + 1]);
            xi += (next.x - s.x).abs();
            u_a -= self.a_max * (a * next.v).abs();
            out.push((xi, u_a));
        }
        out
    }
}

/// Boundaries of the maximal monotone pieces of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrokeDecomposition {
    /// Step indices `t_0 .. t_k`.
    pub times: Vec<usize>,
    pub positions: Vec<f64>,
    /// Unrolled coordinate at each boundary.
    pub xi: Vec<f64>,
    /// Direction of motion on each stroke (+1 / -1, 0 for a stroke with no motion).
    pub directions: Vec<i8>,
    /// Indices into `times` of boundaries caused by a wall reset.
    pub wall_resets: Vec<usize>,
}

impl StrokeDecomposition {
    pub fn k(&self) -> usize {
        self.directions.len()
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Splits a trajectory at the reversals of `v` and at wall resets.
///
/// `x_{t+1} = x_t + v_{t+1}`, so a sign change of `v_{t+1}` against the current
/// stroke's direction puts the turning point at `t`.
pub fn stroke_decompose(traj: &Trajectory) -> Result<StrokeDecomposition> {
    if traj.actions.is_empty() {
        return Err(Error::Domain("cannot decompose an empty trajectory".into()));
    }
    let states = &traj.states;
    let mut xi_at = Vec::with_capacity(states.len());
    let mut xi = 0.0;
    xi_at.push(0.0);
    for w in states.windows(2) {
        xi += (w[1].x - w[0].x).abs();
        xi_at.push(xi);
    }
    let mut dec = StrokeDecomposition {
        times: vec![0],
        positions: vec![states[0].x],
        xi: vec![0.0],
        directions: Vec::new(),
        wall_resets: Vec::new(),
    };
    let close = |dec: &mut StrokeDecomposition, t: usize, dir: i8| {
        dec.times.push(t);
        dec.positions.push(states[t].x);
        dec.xi.push(xi_at[t]);
        dec.directions.push(dir);
    };
    let mut dir = 0i8;
    let mut walls = traj.wall_events.iter().peekable();
    for t in 1..states.len() {
        if walls.peek().is_some_and(|&&w| w + 1 == t) {
            walls.next();
            close(&mut dec, t, if dir == 0 { -1 } else { dir });
            dec.wall_resets.push(dec.times.len() - 1);
            dir = 0;
            continue;
        }
        let s = sign(states[t].v);
        if s == 0 {
            continue;
        }
        if dir == 0 {
            dir = s;
        } else if s != dir {
            close(&mut dec, t - 1, dir);
            dir = s;
        }
    }
    let last = states.len() - 1;
    if *dec.times.last().unwrap() != last {
        close(&mut dec, last, dir);
    }
    Ok(dec)
}

/// Action work along the path minus what the goal requires:
/// `a_max * sum |alpha_t v_{t+1}| - U_g(x_*) - v_goal^2 / 2`.
///
/// Non-negative up to discretization (a few 1e-6) for every goal-reaching
/// trajectory and close to zero when the thrust is just sufficient. Surplus
/// speed at the goal and energy lost at the wall both show up as a positive
/// residual.
pub fn goal_energy_residual(traj: &Trajectory, params: &McParams) -> Result<f64> {
    if !traj.terminated {
        return Err(Error::Domain("trajectory does not reach the goal".into()));
    }
    let pot = PotentialModel::new(traj.x0(), params);
    let work: f64 = traj
        .actions
        .iter()
        .zip(&traj.states[1..])
        .map(|(a, s)| params.a_max * (a * s.v).abs())
        .sum();
    let end = traj.final_state();
    let v0 = traj.states[0].v;
    Ok(work + 0.5 * v0 * v0 - pot.u_g(end.x) - 0.5 * params.v_goal * params.v_goal)
}

/// Loss as a path integral, `sum alpha_t^2 |dx_t| / |v_bar_t|` with the
/// step's mean velocity; steps with `|v_bar| < 1e-9` contribute `alpha_t^2`.
pub fn loss_spatial(traj: &Trajectory) -> f64 {
    traj.actions
        .iter()
        .zip(traj.states.windows(2))
        .map(|(a, w)| {
            let v_bar = 0.5 * (w[0].v + w[1].v);
            if v_bar.abs() < 1e-9 {
                a * a
            } else {
                a * a * (w[1].x - w[0].x).abs() / v_bar.abs()
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{mc_rollout, mc_step, McState};
    use std::f64::consts::PI;

    fn params() -> McParams {
        McParams::default()
    }

    #[test]
    fn gravity_potential_zero_at_start() {
        let pot = PotentialModel::new(-0.55, &params());
        assert_eq!(pot.u_g(-0.55), 0.0);
        let top = pot.u_g(PI / 6.0);
        assert!((top - 0.0025 / 3.0 * (1.0 - (-1.65f64).sin())).abs() < 1e-15);
    }

    #[test]
    fn zero_action_strokes_reflect_about_minimum() {
        let p = params();
        let x0 = -0.6;
        let traj = mc_rollout(|_| 0.0, x0, &p).unwrap();
        let dec = stroke_decompose(&traj).unwrap();
        let x_hat = -PI / 6.0;
        let reflection = 2.0 * x_hat - x0;
        assert!(dec.k() >= 10);
        for (i, &x) in dec.positions.iter().enumerate().take(8) {
            let expected = if i % 2 == 0 { x0 } else { reflection };
            // Discrete turning points land within one step of the continuous ones.
            assert!(
                (x - expected).abs() < 2e-3,
                "boundary {i}: {x} vs {expected}"
            );
        }
        for w in dec.directions.windows(2) {
            assert_eq!(w[0], -w[1]);
        }
        assert!(dec.xi.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn strokes_are_monotone() {
        let p = params();
        let traj = mc_rollout(|s| if s.v >= 0.0 { 1.0 } else { -1.0 }, -0.5, &p).unwrap();
        let dec = stroke_decompose(&traj).unwrap();
        for (i, &dir) in dec.directions.iter().enumerate() {
            let (a, b) = (dec.times[i], dec.times[i + 1]);
            for t in a..b {
                let dx = traj.states[t + 1].x - traj.states[t].x;
                assert!(dx * f64::from(dir) >= 0.0, "stroke {i} step {t}");
            }
        }
    }

    #[test]
    fn single_reversal_adds_a_stroke() {
        let p = params();
        let start = McState {
            x: -0.3,
            v: 0.0005,
            t: 0,
        };
        let step = mc_step(&start, -1.0, &p).unwrap();
        assert!(step.next.v < 0.0);
        let traj = Trajectory {
            states: vec![
                McState {
                    x: -0.3005,
                    v: 0.0005,
                    t: 0,
                },
                start,
                step.next,
            ],
            actions: vec![0.0, -1.0],
            rewards: vec![0.0, -0.1],
            wall_events: vec![],
            terminated: false,
        };
        assert_eq!(stroke_decompose(&traj).unwrap().k(), 2);
    }

    #[test]
    fn empty_trajectory_rejected() {
        let traj = Trajectory {
            states: vec![McState::at_rest(-0.5)],
            actions: vec![],
            rewards: vec![],
            wall_events: vec![],
            terminated: false,
        };
        assert!(stroke_decompose(&traj).is_err());
    }

    #[test]
    fn zero_action_loss_is_zero() {
        let traj = mc_rollout(|_| 0.0, -0.5, &params()).unwrap();
        assert_eq!(loss_spatial(&traj), 0.0);
        assert_eq!(traj.loss(), 0.0);
    }

    #[test]
    fn residual_requires_goal() {
        let traj = mc_rollout(|_| 0.0, -0.5, &params()).unwrap();
        assert!(goal_energy_residual(&traj, &params()).is_err());
    }

    #[test]
    fn phase_two_residual_small_and_grows_with_c() {
        let p = params();
        let two = solve_phase_two(&p).unwrap();
        let run = |c: f64| {
            let start = McState::at_rest(p.x_min);
            crate::env::rollout_from(|s| c * s.v, start, &p).unwrap()
        };
        let opt = goal_energy_residual(&run(two.c2), &p).unwrap();
        let doubled = goal_energy_residual(&run(2.0 * two.c2), &p).unwrap();
        assert!(opt.abs() < 1e-3, "{opt}");
        assert!(doubled > opt && doubled > 0.0);
    }

    #[test]
    fn goal_reaching_residuals_nonnegative() {
        let p = params();
        for c in [5.0, 8.0, 20.0, 100.0] {
            for x0 in [-1.2, -1.0] {
                let start = McState::at_rest(x0);
                let traj = crate::env::rollout_from(|s| c * s.v, start, &p).unwrap();
                if traj.terminated && traj.wall_events.is_empty() {
                    let r = goal_energy_residual(&traj, &p).unwrap();
                    assert!(r >= -2e-6, "C={c} x0={x0}: {r}");
                }
            }
        }
    }

    #[test]
    fn action_potential_is_monotone() {
        let p = params();
        let pol = pi_ana_policy(&WorstCaseParams::default(), &p).unwrap();
        let traj = mc_rollout(|s| pol.action(s.x, s.v), -0.55, &p).unwrap();
        let samples = PotentialModel::new(-0.55, &p).action_potential(&traj);
        assert!(samples
            .windows(2)
            .all(|w| w[1].0 >= w[0].0 && w[1].1 <= w[0].1));
    }
}
