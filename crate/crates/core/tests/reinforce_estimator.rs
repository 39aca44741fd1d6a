//! The REINFORCE weighting used by the trainer, checked on a tabular problem
//! whose exact gradient is available by enumeration.
//!
//! Two states, two actions, two steps: start in state 0, the action picks the
//! next state, a softmax policy with one logit per (state, action).

use chebycar::train::{step_weights, ReinforceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.9;
const REWARD: [[f64; 2]; 2] = [[1.0, -0.5], [0.3, 2.0]];
const THETA: [f64; 4] = [0.2, -0.4, 0.7, 0.1];

fn probs(theta: &[f64; 4], s: usize) -> [f64; 2] {
    let (a, b) = (theta[2 * s], theta[2 * s + 1]);
    let m = a.max(b);
    let (ea, eb) = ((a - m).exp(), (b - m).exp());
    [ea / (ea + eb), eb / (ea + eb)]
}

/// `J = E[r_0 + gamma r_1]` by enumerating the four trajectories.
fn objective(theta: &[f64; 4]) -> f64 {
    let p0 = probs(theta, 0);
    let mut j = 0.0;
    for a0 in 0..2 {
        let p1 = probs(theta, a0);
        for a1 in 0..2 {
            j += p0[a0] * p1[a1] * (REWARD[0][a0] + GAMMA * REWARD[a0][a1]);
        }
    }
    j
}

fn exact_gradient() -> [f64; 4] {
    let mut g = [0.0; 4];
    for (i, gi) in g.iter_mut().enumerate() {
        let h = 1e-6;
        let mut up = THETA;
        up[i] += h;
        let mut down = THETA;
        down[i] -= h;
        *gi = (objective(&up) - objective(&down)) / (2.0 * h);
    }
    g
}

fn score(theta: &[f64; 4], s: usize, a: usize) -> [f64; 4] {
    let p = probs(theta, s);
    let mut g = [0.0; 4];
    for b in 0..2 {
        g[2 * s + b] = f64::from(u8::from(a == b)) - p[b];
    }
    g
}

#[test]
fn sampled_gradient_matches_exact_within_three_standard_errors() {
    let cfg = ReinforceConfig {
        gamma: GAMMA,
        ..ReinforceConfig::default()
    };
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sum = [0.0; 4];
    let mut sum_sq = [0.0; 4];
    for _ in 0..n {
        let a0 = usize::from(rng.gen::<f64>() >= probs(&THETA, 0)[0]);
        let a1 = usize::from(rng.gen::<f64>() >= probs(&THETA, a0)[0]);
        let w = step_weights(&[REWARD[0][a0], REWARD[a0][a1]], &cfg);
        let (g0, g1) = (score(&THETA, 0, a0), score(&THETA, a0, a1));
        for i in 0..4 {
            let est = w[0] * g0[i] + w[1] * g1[i];
            sum[i] += est;
            sum_sq[i] += est * est;
        }
    }
    let exact = exact_gradient();
    for i in 0..4 {
        let mean = sum[i] / n as f64;
        let var = sum_sq[i] / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - exact[i]).abs() <= 3.0 * se,
            "component {i}: sampled {mean} exact {} se {se}",
            exact[i]
        );
    }
}
