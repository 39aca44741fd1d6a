//! First-order optimizers on flat parameter vectors. All of them minimize.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    AdamW,
    Adam,
    Sgd,
    RmsProp,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adamw" => Ok(Self::AdamW),
            "adam" => Ok(Self::Adam),
            "sgd" => Ok(Self::Sgd),
            "rmsprop" => Ok(Self::RmsProp),
            other => Err(Error::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    /// Decoupled for AdamW, ignored otherwise.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// RMSProp smoothing constant.
    pub alpha: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::AdamW,
            lr: 3e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            alpha: 0.99,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("step size must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("betas must lie in [0, 1)".into()));
        }
        if !(self.weight_decay >= 0.0 && self.eps > 0.0) {
            return Err(Error::Config(
                "weight decay must be >= 0 and eps > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, len: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    /// One descent step on `params` with gradient `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len(), "gradient length mismatch");
        assert_eq!(
            params.len(),
            self.m.len(),
            "optimizer was built for another size"
        );
        let c = self.cfg;
        self.t += 1;
        match c.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= c.lr * g;
                }
            }
            OptimizerKind::RmsProp => {
                for ((p, g), v) in params.iter_mut().zip(grad).zip(&mut self.v) {
                    *v = c.alpha * *v + (1.0 - c.alpha) * g * g;
                    *p -= c.lr * g / (v.sqrt() + c.eps);
                }
            }
            OptimizerKind::Adam | OptimizerKind::AdamW => {
                let bc1 = 1.0 - c.beta1.powi(self.t);
                let bc2 = 1.0 - c.beta2.powi(self.t);
                for (i, (p, g)) in params.iter_mut().zip(grad).enumerate() {
                    if c.kind == OptimizerKind::AdamW {
                        *p -= c.lr * c.weight_decay * *p;
                    }
                    self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
                    self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                }
            }
        }
    }
}

/// Rescales `grad` in place so that its Euclidean norm is at most `max_norm`.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: OptimizerKind, lr: f64) -> OptimizerConfig {
        OptimizerConfig {
            kind,
            lr,
            ..Default::default()
        }
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut opt = Optimizer::new(cfg(OptimizerKind::Adam, 0.1), 2);
        let mut p = vec![1.0, -1.0];
        opt.step(&mut p, &[3.0, -0.5]);
        assert!(
            (p[0] - 0.9).abs() < 1e-7 && (p[1] + 0.9).abs() < 1e-7,
            "{p:?}"
        );
    }

    #[test]
    fn adamw_decays_weights_without_gradient() {
        let mut opt = Optimizer::new(cfg(OptimizerKind::AdamW, 0.1), 1);
        let mut p = vec![2.0];
        opt.step(&mut p, &[0.0]);
        assert!((p[0] - 2.0 * (1.0 - 0.1 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn sgd_and_rmsprop_steps() {
        let mut sgd = Optimizer::new(cfg(OptimizerKind::Sgd, 0.5), 1);
        let mut p = vec![1.0];
        sgd.step(&mut p, &[2.0]);
        assert_eq!(p[0], 0.0);
        let mut rms = Optimizer::new(cfg(OptimizerKind::RmsProp, 0.01), 1);
        let mut q = vec![0.0];
        rms.step(&mut q, &[1.0]);
        assert!((q[0] + 0.01 / (0.01f64.sqrt() + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn all_minimize_a_quadratic() {
        for kind in [
            OptimizerKind::AdamW,
            OptimizerKind::Adam,
            OptimizerKind::Sgd,
            OptimizerKind::RmsProp,
        ] {
            let mut opt = Optimizer::new(
                OptimizerConfig {
                    weight_decay: 0.0,
                    ..cfg(kind, 0.01)
                },
                2,
            );
            let mut p = vec![1.0, -2.0];
            for _ in 0..5000 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * (x - 0.5)).collect();
                opt.step(&mut p, &g);
            }
            assert!(p.iter().all(|x| (x - 0.5).abs() < 1e-2), "{kind:?}: {p:?}");
        }
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        clip_grad_norm(&mut g, 1.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.1];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.1]);
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "AdamW".parse::<OptimizerKind>().unwrap(),
            OptimizerKind::AdamW
        );
        assert!("lbfgs".parse::<OptimizerKind>().is_err());
    }
}
