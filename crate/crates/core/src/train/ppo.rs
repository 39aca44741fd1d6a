use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::{clip_grad_norm, Optimizer, OptimizerConfig, OptimizerKind};
use super::{divergence, Progress, TrainRun, TrainSpec};
use crate::env::EnvKind;
use crate::policy::{gaussian_log_prob, score, GaussianChebyPolicy};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub total_steps: u64,
    pub rollout: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub clip: f64,
    pub gae_lambda: f64,
    pub gamma: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub optimizer: OptimizerConfig,
    /// Global gradient-norm clip per minibatch step.
    pub max_grad_norm: Option<f64>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self::for_env(EnvKind::MountainCar)
    }
}

impl PpoConfig {
    pub fn for_env(env: EnvKind) -> Self {
        let base = Self {
            total_steps: 70_000,
            rollout: 2048,
            epochs: 10,
            minibatch: 64,
            clip: 0.2,
            gae_lambda: 0.95,
            gamma: 0.99,
            // With a joint norm clip, value errors of order 100 would otherwise
            // crowd out the policy-head gradient.
            value_coef: 0.05,
            entropy_coef: 0.0,
            optimizer: OptimizerConfig {
                kind: OptimizerKind::Adam,
                weight_decay: 0.0,
                ..OptimizerConfig::default()
            },
            max_grad_norm: Some(0.5),
        };
        match env {
            EnvKind::MountainCar => base,
            EnvKind::Pendulum => Self {
                total_steps: 500_000,
                gamma: 0.9,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::Config("clip range must lie in (0, 1)".into()));
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return Err(Error::Config("GAE lambda must lie in (0, 1]".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config("discount must lie in (0, 1]".into()));
        }
        if self.rollout == 0 || self.minibatch == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "rollout, minibatch and epochs must be positive".into(),
            ));
        }
        self.optimizer.validate()
    }
}

/// One stored transition; bases are cached so re-scoring needs no re-evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub basis_mu: Vec<f64>,
    pub basis_sigma: Vec<f64>,
    pub action: f64,
    pub log_prob_old: f64,
    pub advantage: f64,
    pub value_target: f64,
}

/// Gradient of the minibatch loss `-clipped surrogate + c_v * MSE - c_e * entropy`
/// over `[mu, sigma, critic]`. Advantages are used as given.
pub fn ppo_minibatch_gradient(
    policy: &GaussianChebyPolicy,
    batch: &[PpoSample],
    cfg: &PpoConfig,
) -> Vec<f64> {
    let (a, b) = (policy.mu.len(), policy.sigma.len());
    let critic = policy.critic.as_ref().expect("PPO needs a critic");
    let mut grad = vec![0.0; a + b + critic.len()];
    let n = batch.len() as f64;
    for s in batch {
        let mu = policy.mu.eval_basis(&s.basis_mu);
        let raw_sigma = policy.sigma.eval_basis(&s.basis_sigma);
        let floored = raw_sigma < policy.sigma_floor;
        let sigma = if floored {
            policy.sigma_floor
        } else {
            raw_sigma
        };
        let ratio = (gaussian_log_prob(s.action, mu, sigma) - s.log_prob_old).exp();
        let adv = s.advantage;
        let clipped =
            (adv > 0.0 && ratio > 1.0 + cfg.clip) || (adv < 0.0 && ratio < 1.0 - cfg.clip);
        if !clipped {
            let g = score(s.action, mu, sigma, floored, &s.basis_mu, &s.basis_sigma);
            let w = -ratio * adv / n;
            for (acc, v) in grad[..a + b].iter_mut().zip(g.mu.iter().chain(&g.sigma)) {
                *acc += w * v;
            }
        }
        if cfg.entropy_coef != 0.0 && !floored {
            // Entropy is ln(sigma) + const.
            for (acc, bs) in grad[a..a + b].iter_mut().zip(&s.basis_sigma) {
                *acc -= cfg.entropy_coef * bs / sigma / n;
            }
        }
        let v = critic.eval_basis(&s.basis_mu);
        let w = cfg.value_coef * 2.0 * (v - s.value_target) / n;
        for (acc, bm) in grad[a + b..].iter_mut().zip(&s.basis_mu) {
            *acc += w * bm;
        }
    }
    grad
}

/// Generalized advantage estimates. `bootstrap[t]` is the value that follows
/// step `t` when the episode was cut there by the time limit.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    terminated: &[bool],
    truncated_value: &[Option<f64>],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let (nv, carry) = if terminated[t] {
            (0.0, 0.0)
        } else if let Some(v) = truncated_value[t] {
            (v, 0.0)
        } else {
            (next_value, 1.0)
        };
        let delta = rewards[t] + gamma * nv - values[t];
        adv[t] = delta + gamma * lambda * carry * next_adv;
        next_adv = adv[t];
        next_value = values[t];
    }
    adv
}

fn normalize(batch: &mut [PpoSample]) {
    if batch.len() < 2 {
        return;
    }
    let n = batch.len() as f64;
    let mean = batch.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = batch
        .iter()
        .map(|s| (s.advantage - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let std = var.sqrt() + 1e-8;
    batch
        .iter_mut()
        .for_each(|s| s.advantage = (s.advantage - mean) / std);
}

/// Clipped-surrogate policy optimization with a Chebyshev critic.
pub fn train_ppo(spec: &TrainSpec, cfg: &PpoConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let started = Instant::now();
    let mut policy = spec.initial_policy()?;
    if policy
        .critic
        .as_ref()
        .is_none_or(|c| c.degree() != policy.mu.degree())
    {
        return Err(Error::Config(
            "PPO needs a critic of the mean head's degree".into(),
        ));
    }
    let mut env = spec.env.make();
    let mut reset_rng = rng::seeded(spec.seed, rng::stream::RESET);
    let mut act_rng = rng::seeded(spec.seed, rng::stream::ACTION);
    let mut shuffle_rng = rng::seeded(spec.seed, rng::stream::SHUFFLE);
    let mut opt = Optimizer::new(cfg.optimizer, policy.flat_params().len());
    let mut progress = Progress::new();
    let mut obs = env.reset(&mut reset_rng);
    let mut ep_ret = 0.0;
    let mut update = 0;
    while progress.steps < cfg.total_steps {
        let mut samples = Vec::with_capacity(cfg.rollout);
        let mut rewards = Vec::with_capacity(cfg.rollout);
        let mut values = Vec::with_capacity(cfg.rollout);
        let mut terminated = Vec::with_capacity(cfg.rollout);
        let mut truncated_value = Vec::with_capacity(cfg.rollout);
        let mut finished = Vec::new();
        for _ in 0..cfg.rollout {
            let Some(s) = divergence(policy.act_stochastic(&obs, &mut act_rng))? else {
                return Ok(progress.finish(spec, None, started));
            };
            let value = policy.critic.as_ref().unwrap().eval_basis(&s.basis_mu);
            let Some(tr) = divergence(env.step(s.env_action))? else {
                return Ok(progress.finish(spec, None, started));
            };
            progress.steps += 1;
            ep_ret += tr.reward;
            rewards.push(tr.reward);
            values.push(value);
            terminated.push(tr.terminated);
            truncated_value.push(if tr.truncated && !tr.terminated {
                Some(policy.critic_value(&tr.obs)?)
            } else {
                None
            });
            samples.push(PpoSample {
                basis_mu: s.basis_mu,
                basis_sigma: s.basis_sigma,
                action: s.action,
                log_prob_old: s.log_prob,
                advantage: 0.0,
                value_target: 0.0,
            });
            if tr.terminated || tr.truncated {
                finished.push(ep_ret);
                progress.episode_returns.push(ep_ret);
                ep_ret = 0.0;
                obs = env.reset(&mut reset_rng);
            } else {
                obs = tr.obs;
            }
        }
        let last_value = policy.critic_value(&obs)?;
        let adv = gae(
            &rewards,
            &values,
            &terminated,
            &truncated_value,
            last_value,
            cfg.gamma,
            cfg.gae_lambda,
        );
        for (i, s) in samples.iter_mut().enumerate() {
            s.advantage = adv[i];
            s.value_target = adv[i] + values[i];
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut shuffle_rng);
            for chunk in order.chunks(cfg.minibatch) {
                let mut batch: Vec<PpoSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
                normalize(&mut batch);
                let mut grad = ppo_minibatch_gradient(&policy, &batch, cfg);
                if let Some(max) = cfg.max_grad_norm {
                    // The heads and the critic share no coefficients; clipping them
                    // jointly lets the critic's large value errors starve the policy.
                    clip_grad_norm(&mut grad, max);
                }
                let mut params = policy.flat_params();
                opt.step(&mut params, &grad);
                policy.set_flat_params(&params);
                if !policy.all_finite() {
                    return Ok(progress.finish(spec, None, started));
                }
            }
        }
        if !finished.is_empty() {
            progress
                .curve
                .push((update, finished.iter().sum::<f64>() / finished.len() as f64));
        }
        update += 1;
    }
    Ok(progress.finish(spec, Some(policy), started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{init_policy, PolicyInit};

    fn policy() -> GaussianChebyPolicy {
        let init = PolicyInit {
            seed: 3,
            amplitude: 0.2,
            sigma_const: 0.8,
            with_critic: true,
        };
        init_policy(2, 1, vec![(-1.2, 0.6), (-0.07, 0.07)], init).unwrap()
    }

    fn sample(
        p: &GaussianChebyPolicy,
        obs: [f64; 2],
        action: f64,
        adv: f64,
        shift: f64,
    ) -> PpoSample {
        let (mu, sigma, _, bm, bs) = p.heads(&obs).unwrap();
        PpoSample {
            basis_mu: bm,
            basis_sigma: bs,
            action,
            log_prob_old: gaussian_log_prob(action, mu, sigma) - shift,
            advantage: adv,
            value_target: 0.0,
        }
    }

    #[test]
    fn unclipped_gradient_is_advantage_times_score() {
        let p = policy();
        let cfg = PpoConfig {
            value_coef: 0.0,
            ..PpoConfig::default()
        };
        let s = sample(&p, [-0.5, 0.01], 0.3, 1.7, 0.0);
        let g = ppo_minibatch_gradient(&p, std::slice::from_ref(&s), &cfg);
        let sc = p.logprob_grad(&[-0.5, 0.01], 0.3).unwrap();
        for (got, want) in g.iter().zip(sc.mu.iter().chain(&sc.sigma)) {
            assert!((got + 1.7 * want).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_clipped_batch_leaves_policy_heads_alone() {
        let p = policy();
        let cfg = PpoConfig::default();
        // log_prob_old lowered by 1 => ratio = e > 1.2 with positive advantages.
        let batch: Vec<PpoSample> = [[-0.5, 0.01], [0.1, -0.03], [-1.0, 0.05]]
            .iter()
            .map(|&o| sample(&p, o, 0.2, 1.0, 1.0))
            .collect();
        let g = ppo_minibatch_gradient(&p, &batch, &cfg);
        let heads = p.mu.len() + p.sigma.len();
        assert!(g[..heads].iter().all(|&v| v == 0.0));
        assert!(g[heads..].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn gae_reduces_to_td_and_mc() {
        let r = [1.0, 1.0, 1.0];
        let v = [0.5, 0.5, 0.5];
        let term = [false, false, true];
        let trunc = [None, None, None];
        let td = gae(&r, &v, &term, &trunc, 0.0, 0.9, 1e-12);
        assert!((td[0] - (1.0 + 0.9 * 0.5 - 0.5)).abs() < 1e-9);
        let mc = gae(&r, &v, &term, &trunc, 0.0, 0.9, 1.0);
        assert!((mc[0] - (1.0 + 0.9 + 0.81 - 0.5)).abs() < 1e-12);
        let cut = gae(
            &r,
            &v,
            &[false; 3],
            &[None, Some(10.0), None],
            7.0,
            0.5,
            1.0,
        );
        assert!((cut[1] - (1.0 + 5.0 - 0.5)).abs() < 1e-12);
        assert!((cut[2] - (1.0 + 3.5 - 0.5)).abs() < 1e-12);
    }
}
