use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::optim::{Optimizer, OptimizerConfig};
use super::{divergence, Progress, TrainRun, TrainSpec};
use crate::env::Env;
use crate::policy::GaussianChebyPolicy;
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// When the optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// After every time step, re-scoring the stored action under the current
    /// parameters (the textbook loop).
    PerStep,
    /// Once per episode on the summed gradient.
    PerEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReinforceConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub optimizer: OptimizerConfig,
    pub update: UpdateMode,
    /// Multiply step `t`'s term by `gamma^t`.
    pub discount_weighting: bool,
    /// Standardize the returns-to-go within each episode.
    pub normalize_returns: bool,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            gamma: 0.9,
            optimizer: OptimizerConfig::default(),
            update: UpdateMode::PerStep,
            discount_weighting: true,
            normalize_returns: false,
        }
    }
}

impl ReinforceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config("discount must lie in [0, 1]".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("need at least one episode".into()));
        }
        self.optimizer.validate()
    }
}

/// A sampled episode: observations, unclamped policy-unit actions, rewards.
pub(crate) struct Episode {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
}

pub(crate) fn sample_episode(
    policy: &GaussianChebyPolicy,
    env: &mut dyn Env,
    reset_rng: &mut Rng,
    act_rng: &mut Rng,
) -> Result<Episode> {
    let mut ep = Episode {
        obs: Vec::new(),
        actions: Vec::new(),
        rewards: Vec::new(),
    };
    let mut obs = env.reset(reset_rng);
    loop {
        let s = policy.act_stochastic(&obs, act_rng)?;
        let tr = env.step(s.env_action)?;
        ep.obs.push(obs);
        ep.actions.push(s.action);
        ep.rewards.push(tr.reward);
        obs = tr.obs;
        if tr.terminated || tr.truncated {
            return Ok(ep);
        }
    }
}

/// Discounted returns-to-go `G_t = r_t + gamma G_{t+1}`.
pub fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut g = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        g[t] = acc;
    }
    g
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-12 { std } else { 1.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) / scale);
}

/// Per-step weights `w_t` so that the ascent direction is
/// `sum_t w_t * d log p(a_t | s_t)`.
pub fn step_weights(rewards: &[f64], cfg: &ReinforceConfig) -> Vec<f64> {
    let mut g = returns_to_go(rewards, cfg.gamma);
    if cfg.normalize_returns && g.len() > 1 {
        standardize(&mut g);
    }
    if cfg.discount_weighting {
        let mut d = 1.0;
        for w in g.iter_mut() {
            *w *= d;
            d *= cfg.gamma;
        }
    }
    g
}

/// `sum_t w_t * d log p / d theta` over mu and sigma, at fixed parameters.
pub(crate) fn episode_gradient(
    policy: &GaussianChebyPolicy,
    ep: &Episode,
    weights: &[f64],
) -> Result<Vec<f64>> {
    let (a, b) = (policy.mu.len(), policy.sigma.len());
    let mut grad = vec![0.0; a + b];
    for t in 0..ep.actions.len() {
        let g = policy.logprob_grad(&ep.obs[t], ep.actions[t])?;
        for (acc, v) in grad.iter_mut().zip(g.mu.iter().chain(&g.sigma)) {
            *acc += weights[t] * v;
        }
    }
    Ok(grad)
}

fn apply(policy: &mut GaussianChebyPolicy, opt: &mut Optimizer, ascent: &[f64]) -> Result<()> {
    let descent: Vec<f64> = ascent.iter().map(|g| -g).collect();
    let mut params = policy.flat_params();
    opt.step(&mut params, &descent);
    policy.set_flat_params(&params);
    if !policy.all_finite() {
        return Err(Error::Diverged("non-finite coefficients".into()));
    }
    Ok(())
}

fn episode_update(
    policy: &mut GaussianChebyPolicy,
    opt: &mut Optimizer,
    ep: &Episode,
    cfg: &ReinforceConfig,
) -> Result<()> {
    let w = step_weights(&ep.rewards, cfg);
    match cfg.update {
        UpdateMode::PerEpisode => {
            let grad = episode_gradient(policy, ep, &w)?;
            apply(policy, opt, &grad)
        }
        UpdateMode::PerStep => {
            for t in 0..ep.actions.len() {
                let g = policy.logprob_grad(&ep.obs[t], ep.actions[t])?;
                let grad: Vec<f64> = g.mu.iter().chain(&g.sigma).map(|v| w[t] * v).collect();
                apply(policy, opt, &grad)?;
            }
            Ok(())
        }
    }
}

/// Monte-Carlo policy gradient over `cfg.episodes` sampled episodes.
pub fn train_reinforce(spec: &TrainSpec, cfg: &ReinforceConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let started = Instant::now();
    let mut policy = spec.initial_policy()?;
    policy.critic = None;
    let mut env = spec.env.make();
    let mut reset_rng = rng::seeded(spec.seed, rng::stream::RESET);
    let mut act_rng = rng::seeded(spec.seed, rng::stream::ACTION);
    let mut opt = Optimizer::new(cfg.optimizer, policy.mu.len() + policy.sigma.len());
    let mut progress = Progress::new();
    for episode in 0..cfg.episodes {
        let Some(ep) = divergence(sample_episode(
            &policy,
            env.as_mut(),
            &mut reset_rng,
            &mut act_rng,
        ))?
        else {
            return Ok(progress.finish(spec, None, started));
        };
        let ret: f64 = ep.rewards.iter().sum();
        progress.steps += ep.actions.len() as u64;
        progress.episode_returns.push(ret);
        progress.curve.push((episode, ret));
        if !ret.is_finite()
            || divergence(episode_update(&mut policy, &mut opt, &ep, cfg))?.is_none()
        {
            return Ok(progress.finish(spec, None, started));
        }
    }
    Ok(progress.finish(spec, Some(policy), started))
}
