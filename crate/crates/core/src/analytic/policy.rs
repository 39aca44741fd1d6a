use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{rollout_from, McParams, McState};
use crate::policy::DeterministicPolicy;
use crate::{Error, Result};

/// Constants of the analytical worst-case policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseParams {
    pub c_phase2: f64,
    pub c_phase1: f64,
    pub x_hat: f64,
    pub boot_radius: f64,
    pub boot_action: f64,
}

impl Default for WorstCaseParams {
    fn default() -> Self {
        Self {
            c_phase2: 4.8358,
            c_phase1: 4.3346,
            x_hat: -PI / 6.0,
            boot_radius: 0.01,
            boot_action: 0.1,
        }
    }
}

/// `alpha = clamp(C v, -1, 1)`.
pub fn proportional_policy(c: f64) -> impl Fn(&McState) -> f64 + Copy + Sync {
    move |s: &McState| (c * s.v).clamp(-1.0, 1.0)
}

/// The final stroke from the wall at rest to the goal, as a polyline `v_b(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseBoundary {
    points: Vec<(f64, f64)>,
}

impl PhaseBoundary {
    /// Polyline through the states of a strictly rightward trajectory.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain("boundary needs at least two points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain(
                "boundary x must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Rolls out `alpha = C v` from `(x_min, 0)` and keeps every state.
    pub fn simulate(c: f64, params: &McParams) -> Result<Self> {
        let traj = rollout_from(
            proportional_policy(c),
            McState::at_rest(params.x_min),
            params,
        )?;
        if !traj.terminated {
            return Err(Error::Domain(format!(
                "C = {c} does not reach the goal from the wall"
            )));
        }
        Self::from_points(traj.states.iter().map(|s| (s.x, s.v)).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation of the polyline; `None` outside its x-range.
    pub fn v_at(&self, x: f64) -> Option<f64> {
        let first = self.points[0].0;
        let last = self.points[self.points.len() - 1];
        if !(x >= first && x <= last.0) {
            return None;
        }
        let i = self.points.partition_point(|p| p.0 <= x) - 1;
        if i + 1 == self.points.len() {
            return Some(last.1);
        }
        let (x0, v0) = self.points[i];
        let (x1, v1) = self.points[i + 1];
        Some(v0 + (x - x0) / (x1 - x0) * (v1 - v0))
    }

    /// On or above the polyline with non-negative velocity.
    pub fn contains(&self, x: f64, v: f64) -> bool {
        v >= 0.0 && self.v_at(x).is_some_and(|vb| v >= vb)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,v_boundary")?;
        for (x, v) in &self.points {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }
}

/// `sign(v) * max(C(x, v) |v|, alpha_boot(x))`, clamped to `[-1, 1]`, with
/// `C = c_phase2` inside the phase-2 region and `c_phase1` elsewhere.
///
/// At `v = 0` inside the boot band the kick is applied with positive sign, so
/// a car resting at the potential minimum still leaves it.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhasePolicy {
    pub c_phase1: f64,
    pub c_phase2: f64,
    pub boundary: Option<Arc<PhaseBoundary>>,
    pub x_hat: f64,
    pub boot_radius: f64,
    pub boot_action: f64,
}

impl TwoPhasePolicy {
    /// Single gain everywhere, bootstrap kept.
    pub fn single(c: f64, worst: &WorstCaseParams) -> Self {
        Self {
            c_phase1: c,
            c_phase2: c,
            boundary: None,
            x_hat: worst.x_hat,
            boot_radius: worst.boot_radius,
            boot_action: worst.boot_action,
        }
    }

    pub fn in_phase_two(&self, x: f64, v: f64) -> bool {
        self.boundary.as_ref().is_some_and(|b| b.contains(x, v))
    }

    pub fn action(&self, x: f64, v: f64) -> f64 {
        let c = if self.in_phase_two(x, v) {
            self.c_phase2
        } else {
            self.c_phase1
        };
        let boot = if (x - self.x_hat).abs() <= self.boot_radius {
            self.boot_action
        } else {
            0.0
        };
        let s = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else if boot > 0.0 {
            1.0
        } else {
            0.0
        };
        (s * (c * v.abs()).max(boot)).clamp(-1.0, 1.0)
    }
}

impl DeterministicPolicy for TwoPhasePolicy {
    fn act(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.action(obs[0], obs[1]))
    }
}

/// The analytical worst-case policy; its boundary is the wall-to-goal stroke
/// at `c_phase2`.
pub fn pi_ana_policy(worst: &WorstCaseParams, params: &McParams) -> Result<TwoPhasePolicy> {
    let boundary = PhaseBoundary::simulate(worst.c_phase2, params)?;
    Ok(TwoPhasePolicy {
        c_phase1: worst.c_phase1,
        c_phase2: worst.c_phase2,
        boundary: Some(Arc::new(boundary)),
        x_hat: worst.x_hat,
        boot_radius: worst.boot_radius,
        boot_action: worst.boot_action,
    })
}

/// `alpha = sign(v)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BangPolicy;

impl DeterministicPolicy for BangPolicy {
    fn act(&self, obs: &[f64]) -> Result<f64> {
        Ok(if obs[1] >= 0.0 { 1.0 } else { -1.0 })
    }
}
