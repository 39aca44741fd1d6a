//! Gaussian stochastic policies whose mean and standard deviation (and, for
//! PPO, the critic) are Chebyshev expansions of the observation.
//!
//! Both heads are linear in their coefficients, so the score function has a
//! closed form: with `B` the basis vector at the state,
//! `d log p / d theta_mu = (a - mu) / sigma^2 * B` and
//! `d log p / d theta_sigma = ((a - mu)^2 / sigma^3 - 1 / sigma) * B_sigma`.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cheby::ChebyModel;
use crate::env::EnvKind;
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Floor applied to the sigma head's output.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-4;
/// Largest max-degree allowed for the sigma head.
pub const MAX_SIGMA_DEGREE: usize = 3;

/// A deterministic state -> action map in environment units.
pub trait DeterministicPolicy: Sync {
    fn act(&self, obs: &[f64]) -> Result<f64>;
}

impl<F> DeterministicPolicy for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn act(&self, obs: &[f64]) -> Result<f64> {
        Ok(self(obs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyInit {
    pub seed: u64,
    /// Half-width of the uniform init range for mu/critic and non-constant sigma terms.
    pub amplitude: f64,
    /// Constant term of the sigma head.
    pub sigma_const: f64,
    pub with_critic: bool,
}

impl Default for PolicyInit {
    fn default() -> Self {
        Self {
            seed: 0,
            amplitude: 1e-3,
            sigma_const: 1.0,
            with_critic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChebyPolicy {
    pub mu: ChebyModel,
    pub sigma: ChebyModel,
    pub critic: Option<ChebyModel>,
    pub sigma_floor: f64,
    /// Multiplies the mean (and samples) to obtain environment actions.
    pub output_gain: f64,
}

/// One stochastic action with everything needed for the score function.
#[derive(Debug, Clone, PartialEq)]
pub struct ActSample {
    /// Unclamped Gaussian sample in policy units.
    pub action: f64,
    /// `output_gain * action`; the environment clamps it.
    pub env_action: f64,
    pub log_prob: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Whether the sigma floor was active.
    pub floored: bool,
    pub basis_mu: Vec<f64>,
    pub basis_sigma: Vec<f64>,
}

/// Gradients of `log p(a | s)` with respect to both coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbGrad {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn gaussian_log_prob(a: f64, mu: f64, sigma: f64) -> f64 {
    let z = (a - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

fn uniform_coeffs(rng: &mut Rng, len: usize, amplitude: f64) -> Vec<f64> {
    if amplitude == 0.0 {
        return vec![0.0; len];
    }
    (0..len)
        .map(|_| rng.gen_range(-amplitude..=amplitude))
        .collect()
}

/// Builds a policy with small uniform coefficients and the sigma head's
/// constant term set to `init.sigma_const`.
pub fn init_policy(
    d_mu: usize,
    d_sigma: usize,
    bounds: Vec<(f64, f64)>,
    init: PolicyInit,
) -> Result<GaussianChebyPolicy> {
    if d_mu < 1 {
        return Err(Error::Config("mean head needs max-degree >= 1".into()));
    }
    if d_sigma > MAX_SIGMA_DEGREE {
        return Err(Error::Config(format!(
            "sigma head max-degree must be <= {MAX_SIGMA_DEGREE}, got {d_sigma}"
        )));
    }
    if !(init.amplitude >= 0.0 && init.amplitude.is_finite()) {
        return Err(Error::Config("init amplitude must be >= 0".into()));
    }
    let n = bounds.len();
    let mut rng = rng::seeded(init.seed, rng::stream::INIT);
    let mu_len = crate::cheby::coeff_count(n, d_mu);
    let sigma_len = crate::cheby::coeff_count(n, d_sigma);
    let mu = ChebyModel::new(
        d_mu,
        bounds.clone(),
        uniform_coeffs(&mut rng, mu_len, init.amplitude),
    )?;
    let mut sigma_coeffs = uniform_coeffs(&mut rng, sigma_len, init.amplitude);
    sigma_coeffs[0] = init.sigma_const;
    let sigma = ChebyModel::new(d_sigma, bounds.clone(), sigma_coeffs)?;
    let critic = if init.with_critic {
        Some(ChebyModel::new(
            d_mu,
            bounds,
            uniform_coeffs(&mut rng, mu_len, init.amplitude),
        )?)
    } else {
        None
    };
    Ok(GaussianChebyPolicy {
        mu,
        sigma,
        critic,
        sigma_floor: DEFAULT_SIGMA_FLOOR,
        output_gain: 1.0,
    })
}

impl GaussianChebyPolicy {
    pub fn with_output_gain(mut self, gain: f64) -> Self {
        self.output_gain = gain;
        self
    }

    pub fn n(&self) -> usize {
        self.mu.n()
    }

    /// Mean, effective deviation and the two basis vectors at `obs`.
    pub fn heads(&self, obs: &[f64]) -> Result<(f64, f64, bool, Vec<f64>, Vec<f64>)> {
        let basis_mu = self.mu.basis(obs)?;
        let basis_sigma =
            if self.sigma.degree() == self.mu.degree() && self.sigma.bounds() == self.mu.bounds() {
                basis_mu.clone()
            } else {
                self.sigma.basis(obs)?
            };
        let mu = self.mu.eval_basis(&basis_mu);
        let raw_sigma = self.sigma.eval_basis(&basis_sigma);
        if !mu.is_finite() || !raw_sigma.is_finite() {
            return Err(Error::Diverged(format!(
                "policy output mu={mu}, sigma={raw_sigma}"
            )));
        }
        let floored = raw_sigma < self.sigma_floor;
        let sigma = if floored { self.sigma_floor } else { raw_sigma };
        Ok((mu, sigma, floored, basis_mu, basis_sigma))
    }

    pub fn act_stochastic(&self, obs: &[f64], rng: &mut Rng) -> Result<ActSample> {
        let (mu, sigma, floored, basis_mu, basis_sigma) = self.heads(obs)?;
        let z: f64 = StandardNormal.sample(rng);
        let action = mu + sigma * z;
        if !action.is_finite() {
            return Err(Error::Diverged(format!("sampled action {action}")));
        }
        Ok(ActSample {
            action,
            env_action: self.output_gain * action,
            log_prob: gaussian_log_prob(action, mu, sigma),
            mu,
            sigma,
            floored,
            basis_mu,
            basis_sigma,
        })
    }

    /// Mean action in environment units (sigma treated as zero).
    pub fn act_deterministic(&self, obs: &[f64]) -> Result<f64> {
        let mu = self.mu.eval(obs)?;
        if !mu.is_finite() {
            return Err(Error::Diverged(format!("policy mean {mu}")));
        }
        Ok(self.output_gain * mu)
    }

    pub fn log_prob(&self, obs: &[f64], action: f64) -> Result<f64> {
        let (mu, sigma, ..) = self.heads(obs)?;
        Ok(gaussian_log_prob(action, mu, sigma))
    }

    pub fn logprob_grad(&self, obs: &[f64], action: f64) -> Result<LogProbGrad> {
        let (mu, sigma, floored, basis_mu, basis_sigma) = self.heads(obs)?;
        Ok(score(action, mu, sigma, floored, &basis_mu, &basis_sigma))
    }

    pub fn critic_value(&self, obs: &[f64]) -> Result<f64> {
        match &self.critic {
            Some(c) => c.eval(obs),
            None => Err(Error::Config("policy has no critic".into())),
        }
    }

    /// `mu`, then `sigma`, then the critic if present.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.mu.coeffs().to_vec();
        out.extend_from_slice(self.sigma.coeffs());
        if let Some(c) = &self.critic {
            out.extend_from_slice(c.coeffs());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let (a, b) = (self.mu.len(), self.sigma.len());
        let c = self.critic.as_ref().map_or(0, |c| c.len());
        assert_eq!(flat.len(), a + b + c, "flat parameter length mismatch");
        self.mu.coeffs_mut().copy_from_slice(&flat[..a]);
        self.sigma.coeffs_mut().copy_from_slice(&flat[a..a + b]);
        if let Some(critic) = &mut self.critic {
            critic.coeffs_mut().copy_from_slice(&flat[a + b..]);
        }
    }

    pub fn all_finite(&self) -> bool {
        let heads = [Some(&self.mu), Some(&self.sigma), self.critic.as_ref()];
        heads
            .iter()
            .flatten()
            .all(|m| m.coeffs().iter().all(|c| c.is_finite()))
    }
}

/// Closed-form score given cached heads and basis vectors.
pub fn score(
    action: f64,
    mu: f64,
    sigma: f64,
    floored: bool,
    basis_mu: &[f64],
    basis_sigma: &[f64],
) -> LogProbGrad {
    let diff = action - mu;
    let g_mu = diff / (sigma * sigma);
    let g_sigma = if floored {
        0.0
    } else {
        diff * diff / (sigma * sigma * sigma) - 1.0 / sigma
    };
    LogProbGrad {
        mu: basis_mu.iter().map(|b| g_mu * b).collect(),
        sigma: basis_sigma.iter().map(|b| g_sigma * b).collect(),
    }
}

impl ActSample {
    pub fn score(&self) -> LogProbGrad {
        score(
            self.action,
            self.mu,
            self.sigma,
            self.floored,
            &self.basis_mu,
            &self.basis_sigma,
        )
    }
}

impl DeterministicPolicy for GaussianChebyPolicy {
    fn act(&self, obs: &[f64]) -> Result<f64> {
        self.act_deterministic(obs)
    }
}

/// On-disk policy: `{"env", "algo", "seed", "output_gain", "mu", "sigma", "critic"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub env: EnvKind,
    pub algo: String,
    pub seed: u64,
    pub output_gain: f64,
    pub mu: ChebyModel,
    pub sigma: ChebyModel,
    pub critic: Option<ChebyModel>,
}

impl PolicyFile {
    pub fn new(env: EnvKind, algo: &str, seed: u64, policy: &GaussianChebyPolicy) -> Self {
        Self {
            env,
            algo: algo.to_string(),
            seed,
            output_gain: policy.output_gain,
            mu: policy.mu.clone(),
            sigma: policy.sigma.clone(),
            critic: policy.critic.clone(),
        }
    }

    pub fn into_policy(self) -> Result<GaussianChebyPolicy> {
        if self.mu.n() != self.sigma.n() {
            return Err(Error::Config(
                "mu and sigma heads disagree on input dimension".into(),
            ));
        }
        if self.sigma.degree() > MAX_SIGMA_DEGREE {
            return Err(Error::Config("sigma head degree exceeds 3".into()));
        }
        if !self.output_gain.is_finite() {
            return Err(Error::Config("output_gain must be finite".into()));
        }
        Ok(GaussianChebyPolicy {
            mu: self.mu,
            sigma: self.sigma,
            critic: self.critic,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            output_gain: self.output_gain,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
