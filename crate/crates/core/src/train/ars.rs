use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{deterministic_episode, divergence, Progress, TrainRun, TrainSpec};
use crate::env::EnvKind;
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArsConfig {
    /// Environment interactions, summed over all perturbation rollouts.
    pub total_steps: u64,
    pub directions: usize,
    pub top: usize,
    /// Perturbation scale in coefficient space.
    pub noise: f64,
    pub step_size: f64,
}

impl Default for ArsConfig {
    fn default() -> Self {
        Self::for_env(EnvKind::MountainCar)
    }
}

impl ArsConfig {
    pub fn for_env(env: EnvKind) -> Self {
        match env {
            EnvKind::MountainCar => Self {
                total_steps: 80_000,
                directions: 8,
                top: 4,
                // Small perturbations never reach the goal from a near-zero
                // start, leaving only the action-cost signal.
                noise: 0.2,
                step_size: 0.01,
            },
            EnvKind::Pendulum => Self {
                total_steps: 1_000_000,
                directions: 8,
                top: 4,
                noise: 0.1,
                step_size: 0.02,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions == 0 || self.top == 0 || self.top > self.directions {
            return Err(Error::Config("ARS needs 1 <= top <= directions".into()));
        }
        if !(self.noise > 0.0 && self.step_size > 0.0) {
            return Err(Error::Config("ARS noise and step size must be > 0".into()));
        }
        Ok(())
    }
}

/// `alpha / (b sigma_R) * sum_{top b} (R+ - R-) delta`, directions ranked by
/// `max(R+, R-)`. `None` when the used returns have zero spread.
pub fn ars_update(
    deltas: &[Vec<f64>],
    r_plus: &[f64],
    r_minus: &[f64],
    top: usize,
    step_size: f64,
) -> Option<Vec<f64>> {
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&i, &j| {
        r_plus[j]
            .max(r_minus[j])
            .total_cmp(&r_plus[i].max(r_minus[i]))
            .then(i.cmp(&j))
    });
    let used = &order[..top];
    let rets: Vec<f64> = used.iter().flat_map(|&i| [r_plus[i], r_minus[i]]).collect();
    let mean = rets.iter().sum::<f64>() / rets.len() as f64;
    let std = (rets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rets.len() as f64).sqrt();
    if !(std > 1e-12) {
        return None;
    }
    let scale = step_size / (top as f64 * std);
    let mut step = vec![0.0; deltas[0].len()];
    for &i in used {
        let w = scale * (r_plus[i] - r_minus[i]);
        for (s, d) in step.iter_mut().zip(&deltas[i]) {
            *s += w * d;
        }
    }
    Some(step)
}

fn draw_deltas(rng: &mut Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

/// Basic random search on an arbitrary objective; `f` gets the parameters
/// and the direction index.
pub fn ars_optimize<F>(
    theta: &mut [f64],
    cfg: &ArsConfig,
    iterations: usize,
    seed: u64,
    f: F,
) -> Result<()>
where
    F: Fn(&[f64], usize) -> f64 + Sync,
{
    let mut rng = rng::seeded(seed, rng::stream::PERTURB);
    for _ in 0..iterations {
        let deltas = draw_deltas(&mut rng, cfg.directions, theta.len());
        let (rp, rm) = evaluate_pairs(theta, &deltas, cfg.noise, |p, i| Ok(f(p, i)))?;
        if let Some(step) = ars_update(&deltas, &rp, &rm, cfg.top, cfg.step_size) {
            theta.iter_mut().zip(&step).for_each(|(t, s)| *t += s);
        }
    }
    Ok(())
}

fn evaluate_pairs<F>(
    theta: &[f64],
    deltas: &[Vec<f64>],
    noise: f64,
    f: F,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64], usize) -> Result<f64> + Sync,
{
    let pairs = deltas
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let plus: Vec<f64> = theta.iter().zip(d).map(|(t, d)| t + noise * d).collect();
            let minus: Vec<f64> = theta.iter().zip(d).map(|(t, d)| t - noise * d).collect();
            Ok((f(&plus, i)?, f(&minus, i)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Augmented random search on the mean head; sigma is not used.
pub fn train_ars(spec: &TrainSpec, cfg: &ArsConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let started = Instant::now();
    let mut policy = spec.initial_policy()?;
    policy.critic = None;
    let mut theta = policy.mu.coeffs().to_vec();
    let mut perturb = rng::seeded(spec.seed, rng::stream::PERTURB);
    let mut reset_rng = rng::seeded(spec.seed, rng::stream::RESET);
    let mut progress = Progress::new();
    let mut update = 0;
    while progress.steps < cfg.total_steps {
        let deltas = draw_deltas(&mut perturb, cfg.directions, theta.len());
        // Both members of a pair share a start state; each pair gets its own.
        let mut starts = Vec::with_capacity(cfg.directions);
        for _ in 0..cfg.directions {
            starts.push(reset_rng.clone());
            spec.env.make().reset(&mut reset_rng);
        }
        let steps = std::sync::atomic::AtomicU64::new(0);
        let eval = |coeffs: &[f64], i: usize| -> Result<f64> {
            let mut p = policy.clone();
            p.mu.coeffs_mut().copy_from_slice(coeffs);
            let mut env = spec.env.make();
            let (ret, n) = deterministic_episode(&p, env.as_mut(), &mut starts[i].clone())?;
            steps.fetch_add(n, std::sync::atomic::Ordering::Relaxed);
            if !ret.is_finite() {
                return Err(Error::Diverged("non-finite return".into()));
            }
            Ok(ret)
        };
        let Some((rp, rm)) = divergence(evaluate_pairs(&theta, &deltas, cfg.noise, eval))? else {
            return Ok(progress.finish(spec, None, started));
        };
        progress.steps += steps.into_inner();
        let all: Vec<f64> = rp.iter().chain(&rm).copied().collect();
        progress.episode_returns.extend_from_slice(&all);
        progress
            .curve
            .push((update, all.iter().sum::<f64>() / all.len() as f64));
        if let Some(step) = ars_update(&deltas, &rp, &rm, cfg.top, cfg.step_size) {
            theta.iter_mut().zip(&step).for_each(|(t, s)| *t += s);
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Ok(progress.finish(spec, None, started));
        }
        update += 1;
    }
    policy.mu.coeffs_mut().copy_from_slice(&theta);
    Ok(progress.finish(spec, Some(policy), started))
}
