use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::policy::{proportional_policy, PhaseBoundary, TwoPhasePolicy, WorstCaseParams};
use crate::env::{mc_rollout, mc_step, McParams, McState, Trajectory};
use crate::{Error, Result};

/// How a probe rollout ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stop {
    Wall,
    Goal,
    /// Horizon exhausted or too many strokes.
    Horizon,
}

/// Summary of a rollout used by the C-searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub stop: Stop,
    pub strokes: usize,
    pub steps: usize,
    pub loss: f64,
    /// Velocity after the last step.
    pub v_end: f64,
    /// Velocity on the step into the wall, before the reset.
    pub v_wall: f64,
    pub min_x: f64,
    pub hit_v_max: bool,
}

impl Probe {
    pub fn label(&self) -> (Stop, usize) {
        (self.stop, self.strokes)
    }
}

/// Rolls out until wall contact, goal, `horizon` steps or more than
/// `k_max` strokes, counting reversals of `v`.
pub fn probe<P>(
    policy: P,
    start: McState,
    params: &McParams,
    horizon: usize,
    k_max: usize,
) -> Result<Probe>
where
    P: Fn(&McState) -> f64,
{
    let mut state = start;
    let mut out = Probe {
        stop: Stop::Horizon,
        strokes: 1,
        steps: 0,
        loss: 0.0,
        v_end: start.v,
        v_wall: 0.0,
        min_x: start.x,
        hit_v_max: false,
    };
    let mut dir = 0.0f64;
    for _ in 0..horizon {
        let a = policy(&state).clamp(-1.0, 1.0);
        let v_free = state.v + params.a_max * a - params.g * (3.0 * state.x).cos();
        let step = mc_step(&state, a, params)?;
        out.loss += a * a;
        out.steps += 1;
        out.hit_v_max |= v_free.abs() >= params.v_max;
        state = step.next;
        out.v_end = state.v;
        out.min_x = out.min_x.min(state.x);
        if step.wall_hit {
            out.stop = Stop::Wall;
            out.v_wall = v_free.max(-params.v_max);
            return Ok(out);
        }
        if step.terminated {
            out.stop = Stop::Goal;
            return Ok(out);
        }
        let s = if state.v > 0.0 {
            1.0
        } else if state.v < 0.0 {
            -1.0
        } else {
            0.0
        };
        if s != 0.0 {
            if dir != 0.0 && s != dir {
                out.strokes += 1;
                if out.strokes > k_max {
                    return Ok(out);
                }
            }
            dir = s;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Gain range scanned on a log grid before bisecting each label change.
    pub c_lo: f64,
    pub c_hi: f64,
    pub scan_points: usize,
    /// Bisection tolerance on C.
    pub tol: f64,
    pub k_max: usize,
    /// Probe horizon; longer than `t_max` so that slow solutions are still found.
    pub horizon: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c_lo: 0.5,
            c_hi: 40.0,
            scan_points: 2000,
            tol: 1e-8,
            k_max: 60,
            horizon: 3000,
        }
    }
}

impl SearchConfig {
    fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.c_lo.ln(), self.c_hi.ln());
        let n = self.scan_points;
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// The wall-to-goal stroke at the smallest sufficient gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTwo {
    pub c2: f64,
    pub steps: usize,
    pub loss: f64,
    pub v_star: f64,
    #[serde(skip)]
    pub boundary: Arc<PhaseBoundary>,
}

/// Smallest `C` such that `alpha = C v` from `(x_min, 0)` reaches the goal
/// without reversing.
pub fn solve_phase_two(params: &McParams) -> Result<PhaseTwo> {
    params.validate()?;
    let start = McState::at_rest(params.x_min);
    let horizon = 10 * params.t_max as usize;
    let ok = |c: f64| -> Result<bool> {
        let p = probe(proportional_policy(c), start, params, horizon, 1)?;
        Ok(p.stop == Stop::Goal && p.strokes == 1)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    if ok(lo)? {
        return Err(Error::Domain(
            "zero thrust already reaches the goal from the wall".into(),
        ));
    }
    while !ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain(
                "no gain reaches the goal from the wall".into(),
            ));
        }
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = probe(proportional_policy(hi), start, params, horizon, 1)?;
    Ok(PhaseTwo {
        c2: hi,
        steps: p.steps,
        loss: p.loss,
        v_star: p.v_end,
        boundary: Arc::new(PhaseBoundary::simulate(hi, params)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    SinglePhase,
    TwoPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticSolution {
    pub kind: SolutionKind,
    pub x0: f64,
    pub k: usize,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    pub v_wall: f64,
    pub loss: f64,
    #[serde(rename = "R")]
    pub ret: f64,
    pub t_star: usize,
    pub v_star: f64,
    #[serde(skip)]
    pub policy: TwoPhasePolicy,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

impl AnalyticSolution {
    pub fn boundary(&self) -> Option<&PhaseBoundary> {
        self.policy.boundary.as_deref()
    }
}

struct Candidate {
    c: f64,
    probe: Probe,
}

/// Appends the left end (to `tol`) of every label run strictly inside `(a, b]`.
/// Both halves are followed whenever their end labels differ, so runs that the
/// coarse scan stepped over are still found.
fn refine<E>(
    tol: f64,
    eval: &E,
    a: (f64, Probe),
    b: (f64, Probe),
    out: &mut Vec<(f64, Probe)>,
) -> Result<()>
where
    E: Fn(f64) -> Result<Probe>,
{
    if a.1.label() == b.1.label() {
        return Ok(());
    }
    if b.0 - a.0 <= tol {
        out.push(b);
        return Ok(());
    }
    let m = 0.5 * (a.0 + b.0);
    let mid = (m, eval(m)?);
    refine(tol, eval, a, mid, out)?;
    refine(tol, eval, mid, b, out)
}

/// Left ends of every run of outcome labels over the gain range that `want`
/// accepts, pushed right inside the run until `fits` holds where needed.
fn scan_and_bisect<E, W, F>(cfg: &SearchConfig, eval: E, want: W, fits: F) -> Result<Vec<Candidate>>
where
    E: Fn(f64) -> Result<Probe> + Sync,
    W: Fn(&Probe) -> bool,
    F: Fn(&Probe) -> bool,
{
    let grid = cfg.grid();
    let probes = grid
        .par_iter()
        .map(|&c| eval(c))
        .collect::<Result<Vec<_>>>()?;
    let pieces = (0..grid.len() - 1)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            refine(
                cfg.tol,
                &eval,
                (grid[i], probes[i]),
                (grid[i + 1], probes[i + 1]),
                &mut out,
            )?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut runs = vec![(grid[0], probes[0])];
    runs.extend(pieces.into_iter().flatten());

    let mut out = Vec::new();
    for (idx, &(c, p)) in runs.iter().enumerate() {
        if idx == 0 || !want(&p) {
            continue;
        }
        if fits(&p) {
            out.push(Candidate { c, probe: p });
            continue;
        }
        // Within a run the constraint is assumed to switch on at most once.
        let target = p.label();
        let ok = |q: &Probe| q.label() == target && fits(q);
        let right = runs.get(idx + 1).map_or(cfg.c_hi, |r| r.0 - cfg.tol);
        if right <= c || !ok(&eval(right)?) {
            continue;
        }
        let (mut lo, mut hi) = (c, right);
        while hi - lo > cfg.tol {
            let mid = 0.5 * (lo + hi);
            if ok(&eval(mid)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(Candidate {
            c: hi,
            probe: eval(hi)?,
        });
    }
    Ok(out)
}

fn check_start(x0: f64, params: &McParams) -> Result<()> {
    params.validate()?;
    if !(crate::env::START_LO..=crate::env::START_HI).contains(&x0) {
        return Err(Error::Domain(format!(
            "x0 = {x0} outside the start range [-0.6, -0.4]"
        )));
    }
    Ok(())
}

fn finish(
    kind: SolutionKind,
    x0: f64,
    k: usize,
    gains: (Option<f64>, Option<f64>, Option<f64>),
    v_wall: f64,
    policy: TwoPhasePolicy,
    params: &McParams,
) -> Result<Option<AnalyticSolution>> {
    let traj = mc_rollout(|s| policy.action(s.x, s.v), x0, params)?;
    let (Some(t_star), Some(v_star)) = (traj.t_star(), traj.v_star()) else {
        return Ok(None);
    };
    Ok(Some(AnalyticSolution {
        kind,
        x0,
        k,
        c: gains.0,
        c1: gains.1,
        c2: gains.2,
        v_wall,
        loss: traj.loss(),
        ret: traj.ret(),
        t_star,
        v_star,
        policy,
        trajectory: traj,
    }))
}

fn best(cands: Vec<AnalyticSolution>) -> Option<AnalyticSolution> {
    cands
        .into_iter()
        .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.k.cmp(&b.k)))
}

/// Best `alpha = C v` (with the bootstrap kick) that reaches the goal without
/// touching the wall. `Ok(None)` when no stroke count is feasible.
pub fn solve_single_phase(
    x0: f64,
    params: &McParams,
    cfg: &SearchConfig,
) -> Result<Option<AnalyticSolution>> {
    check_start(x0, params)?;
    let worst = WorstCaseParams::default();
    let start = McState::at_rest(x0);
    let t_max = params.t_max as usize;
    let eval = |c: f64| {
        probe(
            |s: &McState| TwoPhasePolicy::single(c, &worst).action(s.x, s.v),
            start,
            params,
            cfg.horizon,
            cfg.k_max,
        )
    };
    let cands = scan_and_bisect(cfg, eval, |p| p.stop == Stop::Goal, |p| p.steps <= t_max)?;
    let mut sols = Vec::new();
    for cand in cands {
        let policy = TwoPhasePolicy::single(cand.c, &worst);
        let gains = (Some(cand.c), None, None);
        if let Some(sol) = finish(
            SolutionKind::SinglePhase,
            x0,
            cand.probe.strokes,
            gains,
            0.0,
            policy,
            params,
        )? {
            sols.push(sol);
        }
    }
    Ok(best(sols))
}

/// Phase 1 brings the car to the wall as slowly as possible, phase 2 is the
/// single wall-to-goal stroke at `C2`. `Ok(None)` when no stroke count fits
/// the horizon.
pub fn solve_two_phase(
    x0: f64,
    params: &McParams,
    cfg: &SearchConfig,
) -> Result<Option<AnalyticSolution>> {
    check_start(x0, params)?;
    let two = solve_phase_two(params)?;
    solve_two_phase_with(x0, params, cfg, &two)
}

pub fn solve_two_phase_with(
    x0: f64,
    params: &McParams,
    cfg: &SearchConfig,
    two: &PhaseTwo,
) -> Result<Option<AnalyticSolution>> {
    check_start(x0, params)?;
    let worst = WorstCaseParams::default();
    let make = |c1: f64| TwoPhasePolicy {
        c_phase1: c1,
        c_phase2: two.c2,
        boundary: Some(two.boundary.clone()),
        x_hat: worst.x_hat,
        boot_radius: worst.boot_radius,
        boot_action: worst.boot_action,
    };
    let start = McState::at_rest(x0);
    let budget = params.t_max as usize;
    let eval = |c: f64| {
        let pol = make(c);
        probe(
            |s: &McState| pol.action(s.x, s.v),
            start,
            params,
            cfg.horizon,
            cfg.k_max,
        )
    };
    let cands = scan_and_bisect(
        cfg,
        eval,
        |p| p.stop == Stop::Wall,
        |p| p.steps + two.steps <= budget,
    )?;
    let mut sols = Vec::new();
    for cand in cands {
        let gains = (None, Some(cand.c), Some(two.c2));
        let k = cand.probe.strokes + 1;
        let v_wall = cand.probe.v_wall.abs();
        if let Some(sol) = finish(
            SolutionKind::TwoPhase,
            x0,
            k,
            gains,
            v_wall,
            make(cand.c),
            params,
        )? {
            sols.push(sol);
        }
    }
    Ok(best(sols))
}

/// Per-start optimal policy when `x0` is known in advance.
pub fn pi_opt_x0(x0: f64, params: &McParams, cfg: &SearchConfig) -> Result<TwoPhasePolicy> {
    solve_two_phase(x0, params, cfg)?
        .map(|s| s.policy)
        .ok_or_else(|| Error::Domain(format!("no two-phase solution from x0 = {x0}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::stroke_decompose;

    #[test]
    fn phase_two_constant() {
        let two = solve_phase_two(&McParams::default()).unwrap();
        assert!((two.c2 - 4.8358).abs() < 2e-3, "{}", two.c2);
        assert!(two.v_star >= 0.0 && two.v_star < 1e-3);
    }

    #[test]
    fn single_phase_gain_raises_loss_within_stroke_count() {
        let params = McParams::default();
        let cfg = SearchConfig {
            scan_points: 400,
            ..SearchConfig::default()
        };
        let sol = solve_single_phase(-0.5, &params, &cfg).unwrap().unwrap();
        let c = sol.c.unwrap();
        let worst = WorstCaseParams::default();
        let run = |c: f64| {
            probe(
                |s: &McState| TwoPhasePolicy::single(c, &worst).action(s.x, s.v),
                McState::at_rest(-0.5),
                &params,
                3000,
                60,
            )
            .unwrap()
        };
        let base = run(c);
        let above = run(c * 1.0005);
        if above.label() == base.label() {
            assert!(above.loss > base.loss);
        }
        assert!(sol.trajectory.wall_events.is_empty());
        assert!(!run(c).hit_v_max);
    }

    #[test]
    fn two_phase_shape() {
        let params = McParams::default();
        let sol = solve_two_phase(-0.55, &params, &SearchConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(sol.kind, SolutionKind::TwoPhase);
        assert_eq!(sol.trajectory.wall_events.len(), 1);
        let dec = stroke_decompose(&sol.trajectory).unwrap();
        assert_eq!(dec.k(), sol.k);
        // Last stroke runs from the wall at rest to the goal.
        let wall_idx = *dec.wall_resets.last().unwrap();
        assert_eq!(wall_idx, dec.times.len() - 2);
        assert_eq!(dec.positions[wall_idx], params.x_min);
        assert!(sol.v_star >= 0.0 && sol.v_star < 1e-3);
        assert!(sol.t_star <= 999);
        assert!((sol.ret - (100.0 - 0.1 * sol.loss)).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_start() {
        let params = McParams::default();
        assert!(solve_single_phase(-0.2, &params, &SearchConfig::default()).is_err());
        assert!(solve_two_phase(-0.7, &params, &SearchConfig::default()).is_err());
    }
}
