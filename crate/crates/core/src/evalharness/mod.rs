//! Deterministic evaluation: the 100-start Mountain Car grid, the 50 x 50
//! Pendulum grid, distances between policies and action heatmaps.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::env::{
    try_pendulum_rollout, try_rollout_from, McParams, McState, PendulumParams, PendulumState,
    Trajectory,
};
use crate::policy::DeterministicPolicy;
use crate::rng;
use crate::Result;

/// Domain of the action heatmaps and of the policy distance.
pub const HEATMAP_X: (f64, f64) = (-1.2, 0.45);
pub const HEATMAP_V: (f64, f64) = (-0.07, 0.07);

/// `n` evenly spaced points including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Population statistics; all zero for an empty sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StartResult {
    pub x0: f64,
    #[serde(rename = "R")]
    pub ret: f64,
    /// `t_max + 1` when the goal was not reached.
    pub t_star: usize,
    /// Velocity on the terminating step; `NaN` when the goal was not reached.
    pub v_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub returns: Stats,
    /// `mean R(pi_ana) - mean R(pi)` on the same grid.
    pub regret: Option<f64>,
    /// Over goal-reaching starts only.
    pub t_star: Stats,
    pub v_star: Stats,
    pub l2_to_ana: Option<f64>,
    pub failures: usize,
    pub starts: Vec<StartResult>,
}

impl EvalReport {
    pub fn from_starts(starts: Vec<StartResult>, t_max: u32) -> Self {
        let rets: Vec<f64> = starts.iter().map(|s| s.ret).collect();
        let done: Vec<&StartResult> = starts
            .iter()
            .filter(|s| s.t_star <= t_max as usize)
            .collect();
        let ts: Vec<f64> = done.iter().map(|s| s.t_star as f64).collect();
        let vs: Vec<f64> = done.iter().map(|s| s.v_star).collect();
        Self {
            returns: Stats::of(&rets),
            regret: None,
            t_star: Stats::of(&ts),
            v_star: Stats::of(&vs),
            l2_to_ana: None,
            failures: starts.len() - done.len(),
            starts,
        }
    }

    pub fn with_regret(mut self, reference: &EvalReport) -> Self {
        self.regret = Some(reference.returns.mean - self.returns.mean);
        self
    }

    pub fn with_l2(mut self, dist: f64) -> Self {
        self.l2_to_ana = Some(dist);
        self
    }

    /// `x0,R,t_star,v_star`; an unreached goal leaves `v_star` empty.
    pub fn write_starts_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x0,R,t_star,v_star")?;
        for s in &self.starts {
            if s.v_star.is_nan() {
                writeln!(out, "{},{},{},", s.x0, s.ret, s.t_star)?;
            } else {
                writeln!(out, "{},{},{},{}", s.x0, s.ret, s.t_star, s.v_star)?;
            }
        }
        Ok(())
    }
}

pub fn start_result(traj: &Trajectory, t_max: u32) -> StartResult {
    StartResult {
        x0: traj.x0(),
        ret: traj.ret(),
        t_star: traj.t_star().unwrap_or(t_max as usize + 1),
        v_star: traj.v_star().unwrap_or(f64::NAN),
    }
}

/// Mountain Car rollout of a deterministic policy fed `[x, v]`.
pub fn rollout_policy<P: DeterministicPolicy + ?Sized>(
    policy: &P,
    x0: f64,
    params: &McParams,
) -> Result<Trajectory> {
    try_rollout_from(
        |s: &McState| policy.act(&[s.x, s.v]),
        McState::at_rest(x0),
        params,
    )
}

/// Evaluates per-start rollouts produced by `run` over the given starts.
pub fn eval_mc_with<F>(starts: &[f64], params: &McParams, run: F) -> Result<EvalReport>
where
    F: Fn(f64) -> Result<Trajectory> + Sync,
{
    let rows = starts
        .par_iter()
        .map(|&x0| run(x0).map(|t| start_result(&t, params.t_max)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_starts(rows, params.t_max))
}

/// `n_points` starts evenly spaced over `[-0.6, -0.4]`, both ends included.
pub fn eval_mc<P: DeterministicPolicy>(
    policy: &P,
    n_points: usize,
    params: &McParams,
) -> Result<EvalReport> {
    let starts = linspace(crate::env::START_LO, crate::env::START_HI, n_points);
    eval_mc_with(&starts, params, |x0| rollout_policy(policy, x0, params))
}

/// Monte-Carlo estimate of the expected return over uniform starts.
pub fn sampled_mean_return<P: DeterministicPolicy>(
    policy: &P,
    samples: usize,
    seed: u64,
    params: &McParams,
) -> Result<f64> {
    let mut r = rng::seeded(seed, rng::stream::EVAL);
    let starts: Vec<f64> = (0..samples)
        .map(|_| r.gen_range(crate::env::START_LO..=crate::env::START_HI))
        .collect();
    Ok(
        eval_mc_with(&starts, params, |x0| rollout_policy(policy, x0, params))?
            .returns
            .mean,
    )
}

/// Root-mean-square difference of the (clamped) actions over an
/// `nx x nv` grid on the heatmap domain.
pub fn policy_l2_distance<A, B>(a: &A, b: &B, nx: usize, nv: usize) -> Result<f64>
where
    A: DeterministicPolicy + ?Sized,
    B: DeterministicPolicy + ?Sized,
{
    let xs = linspace(HEATMAP_X.0, HEATMAP_X.1, nx);
    let vs = linspace(HEATMAP_V.0, HEATMAP_V.1, nv);
    let mut sum = 0.0;
    for &x in &xs {
        for &v in &vs {
            let d = a.act(&[x, v])?.clamp(-1.0, 1.0) - b.act(&[x, v])?.clamp(-1.0, 1.0);
            sum += d * d;
        }
    }
    Ok((sum / (nx * nv) as f64).sqrt())
}

/// Actions on a grid of the heatmap domain, `x` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
    pub actions: Vec<f64>,
    pub overlay: Option<Trajectory>,
}

impl HeatmapGrid {
    pub fn action(&self, ix: usize, iv: usize) -> f64 {
        self.actions[ix * self.vs.len() + iv]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,v,action")?;
        for (ix, x) in self.xs.iter().enumerate() {
            for (iv, v) in self.vs.iter().enumerate() {
                writeln!(out, "{x},{v},{}", self.action(ix, iv))?;
            }
        }
        Ok(())
    }
}

pub fn heatmap_export<P: DeterministicPolicy>(
    policy: &P,
    nx: usize,
    nv: usize,
    overlay_x0: Option<f64>,
    params: &McParams,
) -> Result<HeatmapGrid> {
    let xs = linspace(HEATMAP_X.0, HEATMAP_X.1, nx);
    let vs = linspace(HEATMAP_V.0, HEATMAP_V.1, nv);
    let mut actions = Vec::with_capacity(nx * nv);
    for &x in &xs {
        for &v in &vs {
            actions.push(policy.act(&[x, v])?);
        }
    }
    let overlay = overlay_x0
        .map(|x0| rollout_policy(policy, x0, params))
        .transpose()?;
    Ok(HeatmapGrid {
        xs,
        vs,
        actions,
        overlay,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendulumStart {
    pub theta0: f64,
    pub theta_dot0: f64,
    #[serde(rename = "R")]
    pub ret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendulumReport {
    pub returns: Stats,
    pub starts: Vec<PendulumStart>,
}

impl PendulumReport {
    /// `bins` equal-width bins spanning the observed returns.
    pub fn density(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        let (lo, hi) = (self.returns.min, self.returns.max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let mut counts = vec![0usize; bins];
        for s in &self.starts {
            let i = (((s.ret - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
            .collect()
    }

    pub fn write_density_csv<W: Write>(&self, bins: usize, mut out: W) -> Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (lo, hi, c) in self.density(bins) {
            writeln!(out, "{lo},{hi},{c}")?;
        }
        Ok(())
    }
}

/// Rollouts from an `n x n` grid of angles in `[-pi, pi]` and angular
/// velocities in `[-1, 1]`; the policy sees the environment observation.
pub fn eval_pendulum<P: DeterministicPolicy>(
    policy: &P,
    n: usize,
    params: &PendulumParams,
) -> Result<PendulumReport> {
    let thetas = linspace(-PI, PI, n);
    let dots = linspace(-1.0, 1.0, n);
    let grid: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&t| dots.iter().map(move |&d| (t, d)))
        .collect();
    let starts = grid
        .par_iter()
        .map(|&(theta0, theta_dot0)| {
            let start = PendulumState {
                theta: theta0,
                theta_dot: theta_dot0,
                t: 0,
            };
            let traj = try_pendulum_rollout(|s| policy.act(&s.observation(params)), start, params)?;
            Ok(PendulumStart {
                theta0,
                theta_dot0,
                ret: traj.ret(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rets: Vec<f64> = starts.iter().map(|s| s.ret).collect();
    Ok(PendulumReport {
        returns: Stats::of(&rets),
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{pi_ana_policy, WorstCaseParams};

    fn zero(_: &[f64]) -> f64 {
        0.0
    }

    #[test]
    fn linspace_endpoints() {
        let xs = linspace(-0.6, -0.4, 100);
        assert_eq!(xs.len(), 100);
        assert_eq!(xs[0], -0.6);
        assert_eq!(xs[99], -0.4);
    }

    #[test]
    fn zero_policy_report() {
        let p = McParams::default();
        let r = eval_mc(&zero, 100, &p).unwrap();
        assert_eq!(r.returns.mean, 0.0);
        assert_eq!(r.failures, 100);
        assert!(r
            .starts
            .iter()
            .all(|s| s.t_star == 1000 && s.v_star.is_nan()));
    }

    #[test]
    fn report_is_deterministic_and_ordered() {
        let p = McParams::default();
        let ana = pi_ana_policy(&WorstCaseParams::default(), &p).unwrap();
        let a = eval_mc(&ana, 20, &p).unwrap();
        let b = eval_mc(&ana, 20, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.returns.min <= a.returns.mean && a.returns.mean <= a.returns.max);
        assert_eq!(a.clone().with_regret(&a).regret, Some(0.0));
        let mut csv = Vec::new();
        a.write_starts_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("x0,R,t_star,v_star\n-0.6,"));
        assert_eq!(text.lines().count(), 21);
    }

    #[test]
    fn distance_examples() {
        let p = McParams::default();
        let ana = pi_ana_policy(&WorstCaseParams::default(), &p).unwrap();
        assert_eq!(policy_l2_distance(&ana, &ana, 50, 50).unwrap(), 0.0);
        let c = |_: &[f64]| 0.3;
        let d = policy_l2_distance(&zero, &c, 200, 200).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn pi_ana_heatmap_sign_structure() {
        let p = McParams::default();
        let worst = WorstCaseParams::default();
        let ana = pi_ana_policy(&worst, &p).unwrap();
        let h = heatmap_export(&ana, 101, 41, Some(-0.55), &p).unwrap();
        for (ix, &x) in h.xs.iter().enumerate() {
            for (iv, &v) in h.vs.iter().enumerate() {
                let a = h.action(ix, iv);
                let boot = (x - worst.x_hat).abs() <= worst.boot_radius;
                if v != 0.0 {
                    assert_eq!(a.signum(), v.signum());
                } else if !boot {
                    assert_eq!(a, 0.0);
                }
            }
        }
        let overlay = h.overlay.unwrap();
        assert!(overlay.terminated && overlay.final_state().x >= 0.45);
        let z = heatmap_export(&zero, 10, 10, None, &p).unwrap();
        assert!(z.actions.iter().all(|&a| a == 0.0));
        let mut csv = Vec::new();
        z.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 101);
    }

    #[test]
    fn upright_pendulum_at_rest_scores_zero() {
        let params = PendulumParams::default();
        let traj =
            try_pendulum_rollout(|_| Ok(0.0), PendulumState::new(0.0, 0.0), &params).unwrap();
        assert_eq!(traj.ret(), 0.0);
    }

    #[test]
    fn pendulum_grid_and_density() {
        let params = PendulumParams::default();
        let r = eval_pendulum(&zero, 10, &params).unwrap();
        assert_eq!(r.starts.len(), 100);
        assert!(r.returns.max <= 0.0);
        let bins = r.density(7);
        assert_eq!(bins.iter().map(|b| b.2).sum::<usize>(), 100);
        assert_eq!(bins[0].0, r.returns.min);
    }
}
