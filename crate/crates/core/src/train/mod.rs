//! Trainers for Chebyshev policies: REINFORCE, ARS and PPO, plus the
//! best-of-n protocol that selects a run by deterministic evaluation.

mod ars;
pub mod optim;
mod ppo;
mod reinforce;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ars::{ars_optimize, ars_update, train_ars, ArsConfig};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use ppo::{gae, ppo_minibatch_gradient, train_ppo, PpoConfig, PpoSample};
pub use reinforce::{returns_to_go, step_weights, train_reinforce, ReinforceConfig, UpdateMode};

use crate::env::{Env, EnvKind};
use crate::evalharness::Stats;
use crate::policy::{init_policy, GaussianChebyPolicy, PolicyInit, MAX_SIGMA_DEGREE};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Reinforce,
    Ars,
    Ppo,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Reinforce => "reinforce",
            Algo::Ars => "ars",
            Algo::Ppo => "ppo",
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reinforce" => Ok(Algo::Reinforce),
            "ars" => Ok(Algo::Ars),
            "ppo" => Ok(Algo::Ppo),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum AlgoConfig {
    Reinforce(ReinforceConfig),
    Ars(ArsConfig),
    Ppo(PpoConfig),
}

impl AlgoConfig {
    pub fn algo(&self) -> Algo {
        match self {
            AlgoConfig::Reinforce(_) => Algo::Reinforce,
            AlgoConfig::Ars(_) => Algo::Ars,
            AlgoConfig::Ppo(_) => Algo::Ppo,
        }
    }

    /// Defaults for `algo` on `env`.
    pub fn default_for(algo: Algo, env: EnvKind) -> Self {
        match algo {
            Algo::Reinforce => AlgoConfig::Reinforce(ReinforceConfig::default()),
            Algo::Ars => AlgoConfig::Ars(ArsConfig::for_env(env)),
            Algo::Ppo => AlgoConfig::Ppo(PpoConfig::for_env(env)),
        }
    }
}

/// Everything that determines one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub env: EnvKind,
    pub degree: usize,
    pub sigma_degree: usize,
    pub seed: u64,
    pub init: InitConfig,
    pub config: AlgoConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub amplitude: f64,
    pub sigma_const: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        let d = PolicyInit::default();
        Self {
            amplitude: d.amplitude,
            sigma_const: d.sigma_const,
        }
    }
}

impl TrainSpec {
    pub fn new(env: EnvKind, algo: Algo, degree: usize, seed: u64) -> Self {
        Self {
            env,
            degree,
            sigma_degree: degree.min(MAX_SIGMA_DEGREE),
            seed,
            init: InitConfig::default(),
            config: AlgoConfig::default_for(algo, env),
        }
    }

    pub fn algo(&self) -> Algo {
        self.config.algo()
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::Config("degree must be >= 1".into()));
        }
        if self.sigma_degree > MAX_SIGMA_DEGREE {
            return Err(Error::Config(format!(
                "sigma degree must be <= {MAX_SIGMA_DEGREE}, got {}",
                self.sigma_degree
            )));
        }
        match &self.config {
            AlgoConfig::Reinforce(c) => c.validate(),
            AlgoConfig::Ars(c) => c.validate(),
            AlgoConfig::Ppo(c) => c.validate(),
        }
    }

    pub fn initial_policy(&self) -> Result<GaussianChebyPolicy> {
        let env = self.env.make();
        let init = PolicyInit {
            seed: self.seed,
            amplitude: self.init.amplitude,
            sigma_const: self.init.sigma_const,
            with_critic: self.algo() == Algo::Ppo,
        };
        Ok(
            init_policy(self.degree, self.sigma_degree, env.obs_bounds(), init)?
                .with_output_gain(env.action_gain()),
        )
    }
}

/// Outcome of one training run. Diverged runs keep their return history but
/// no policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub spec: TrainSpec,
    /// Return of every completed training episode.
    pub episode_returns: Vec<f64>,
    /// `(update index, mean return)`; ARS and PPO use the rollouts of the update.
    pub curve: Vec<(usize, f64)>,
    pub steps: u64,
    pub diverged: bool,
    pub policy: Option<GaussianChebyPolicy>,
    pub wall_clock_s: f64,
}

/// Run artifact: everything in [`TrainRun`] that is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunArtifact<'a> {
    pub spec: &'a TrainSpec,
    pub episode_returns: &'a [f64],
    pub curve: &'a [(usize, f64)],
    pub steps: u64,
    pub diverged: bool,
}

impl TrainRun {
    pub fn artifact(&self) -> RunArtifact<'_> {
        RunArtifact {
            spec: &self.spec,
            episode_returns: &self.episode_returns,
            curve: &self.curve,
            steps: self.steps,
            diverged: self.diverged,
        }
    }

    /// `update,mean_return`.
    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "update,mean_return")?;
        for (u, r) in &self.curve {
            writeln!(out, "{u},{r}")?;
        }
        Ok(())
    }
}

/// Shared bookkeeping for the trainers.
pub(crate) struct Progress {
    pub episode_returns: Vec<f64>,
    pub curve: Vec<(usize, f64)>,
    pub steps: u64,
}

impl Progress {
    pub fn new() -> Self {
        Self {
            episode_returns: Vec::new(),
            curve: Vec::new(),
            steps: 0,
        }
    }

    pub fn finish(
        self,
        spec: &TrainSpec,
        policy: Option<GaussianChebyPolicy>,
        started: Instant,
    ) -> TrainRun {
        let diverged = policy.is_none();
        TrainRun {
            spec: spec.clone(),
            episode_returns: self.episode_returns,
            curve: self.curve,
            steps: self.steps,
            diverged,
            policy,
            wall_clock_s: started.elapsed().as_secs_f64(),
        }
    }
}

/// Non-finite values or divergence errors end a run; anything else propagates.
pub(crate) fn divergence<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Diverged(_)) | Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains according to `spec`.
pub fn train(spec: &TrainSpec) -> Result<TrainRun> {
    spec.validate()?;
    match &spec.config {
        AlgoConfig::Reinforce(c) => train_reinforce(spec, c),
        AlgoConfig::Ars(c) => train_ars(spec, c),
        AlgoConfig::Ppo(c) => train_ppo(spec, c),
    }
}

/// One deterministic episode (sigma = 0) from the environment's start
/// distribution.
pub fn deterministic_episode(
    policy: &GaussianChebyPolicy,
    env: &mut dyn Env,
    rng: &mut Rng,
) -> Result<(f64, u64)> {
    let mut obs = env.reset(rng);
    let mut ret = 0.0;
    let mut steps = 0;
    loop {
        let a = policy.act_deterministic(&obs)?;
        let tr = env.step(a)?;
        ret += tr.reward;
        steps += 1;
        obs = tr.obs;
        if tr.terminated || tr.truncated {
            return Ok((ret, steps));
        }
    }
}

/// Returns of `episodes` deterministic episodes with starts drawn from the
/// evaluation stream of `seed`.
pub fn eval_episodes(
    policy: &GaussianChebyPolicy,
    env: EnvKind,
    episodes: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut e = env.make();
    let mut r = rng::seeded(seed, rng::stream::EVAL);
    (0..episodes)
        .map(|_| deterministic_episode(policy, e.as_mut(), &mut r).map(|x| x.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub diverged: bool,
    /// Deterministic evaluation over the protocol's episodes.
    pub eval: Option<Stats>,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub runs: Vec<TrainRun>,
    pub summaries: Vec<RunSummary>,
    /// Index of the selected run; `None` when every run diverged.
    pub best: Option<usize>,
}

impl ProtocolResult {
    pub fn best_run(&self) -> Option<&TrainRun> {
        self.best.map(|i| &self.runs[i])
    }

    pub fn best_summary(&self) -> Option<&RunSummary> {
        self.best.map(|i| &self.summaries[i])
    }
}

/// Trains `n_runs` copies of `base` with seeds `base.seed + i`, evaluates each
/// surviving policy on `eval_episodes` deterministic episodes and selects the
/// highest mean (lowest index on ties).
pub fn train_protocol(
    base: &TrainSpec,
    n_runs: usize,
    eval_episodes_n: usize,
) -> Result<ProtocolResult> {
    if n_runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    base.validate()?;
    let results = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let spec = TrainSpec {
                seed: base.seed.wrapping_add(i as u64),
                ..base.clone()
            };
            let run = train(&spec)?;
            let eval = match &run.policy {
                Some(p) => divergence(eval_episodes(p, spec.env, eval_episodes_n, spec.seed))?
                    .map(|r| Stats::of(&r)),
                None => None,
            };
            let summary = RunSummary {
                index: i,
                seed: spec.seed,
                diverged: run.diverged || eval.is_none(),
                eval,
                steps: run.steps,
            };
            Ok((run, summary))
        })
        .collect::<Result<Vec<_>>>()?;
    let (runs, summaries): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let best = select_best(&summaries);
    Ok(ProtocolResult {
        runs,
        summaries,
        best,
    })
}

fn select_best(summaries: &[RunSummary]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for s in summaries {
        if let Some(e) = s.eval {
            let better = best.is_none_or(|(i, m)| e.mean > m || (e.mean == m && s.index < i));
            if better {
                best = Some((s.index, e.mean));
            }
        }
    }
    best.map(|b| b.0)
}
