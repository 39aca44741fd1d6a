use chebycar::analytic::{ode_zero_action, pi_ana_policy, WorstCaseParams};
use chebycar::cheby::ChebyModel;
use chebycar::env::EnvKind;
use chebycar::env::{mc_rollout, mc_step, McParams, McState};
use chebycar::evalharness::eval_mc;
use chebycar::policy::{gaussian_log_prob, init_policy, PolicyFile, PolicyInit};
use chebycar::train::{ars_update, ppo_minibatch_gradient, PpoConfig, PpoSample};
use proptest::prelude::*;

fn mc_bounds() -> Vec<(f64, f64)> {
    McParams::default().bounds()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mc_step_stays_in_the_box(x in -1.2f64..0.6, v in -0.07f64..0.07, a in -3.0f64..3.0) {
        let p = McParams::default();
        let s = mc_step(&McState { x, v, t: 0 }, a, &p).unwrap();
        prop_assert!(s.next.x >= p.x_min && s.next.x <= p.x_max);
        prop_assert!(s.next.v.abs() <= p.v_max);
        if s.wall_hit {
            prop_assert_eq!(s.next.v, 0.0);
        }
    }

    #[test]
    fn reward_accounting_identity(x0 in -0.6f64..-0.4, c in 0.0f64..40.0, bias in -0.3f64..0.3) {
        let p = McParams::default();
        let t = mc_rollout(|s: &McState| c * s.v + bias, x0, &p).unwrap();
        let bonus = if t.terminated { p.goal_bonus } else { 0.0 };
        prop_assert!((t.ret() - (bonus - p.action_cost_coeff * t.loss())).abs() < 1e-12);
    }

    #[test]
    fn rollouts_replay_bit_identically(x0 in -0.6f64..-0.4, c in 0.0f64..20.0) {
        let p = McParams::default();
        let a = mc_rollout(|s: &McState| c * s.v, x0, &p).unwrap();
        let b = mc_rollout(|s: &McState| c * s.v, x0, &p).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn zero_action_energy_is_conserved(x0 in -1.0f64..-0.1) {
        let p = McParams::default();
        let e = |x: f64, v: f64| 0.5 * v * v + p.g / 3.0 * (3.0 * x).sin();
        let path = ode_zero_action(x0, &p, 0.01, 200.0);
        let e0 = e(path[0].x, path[0].v);
        for s in &path {
            prop_assert!((e(s.x, s.v) - e0).abs() <= 1e-8);
        }
    }

    #[test]
    fn horner_agrees_with_recurrence(
        seed in 0u64..1000,
        d in 1usize..8,
        x in -1.2f64..0.6,
        v in -0.07f64..0.07,
    ) {
        let init = PolicyInit { seed, amplitude: 1.0, sigma_const: 1.0, with_critic: false };
        let pol = init_policy(d, 1, mc_bounds(), init).unwrap();
        let m: &ChebyModel = &pol.mu;
        let a = m.eval(&[x, v]).unwrap();
        let (b, _) = m.eval_horner(&[x, v]).unwrap();
        let scale = m.coeffs().iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        prop_assert!((a - b).abs() <= 1e-10 * scale);
    }

    #[test]
    fn score_matches_finite_differences(
        seed in 0u64..1000,
        x in -1.2f64..0.6,
        v in -0.07f64..0.07,
        z in -2.0f64..2.0,
    ) {
        let init = PolicyInit { seed, amplitude: 0.2, sigma_const: 0.9, with_critic: false };
        let pol = init_policy(3, 2, mc_bounds(), init).unwrap();
        let (mu, sigma, floored, _, _) = pol.heads(&[x, v]).unwrap();
        prop_assume!(!floored && sigma > 0.2);
        let a = mu + z * sigma;
        let g = pol.logprob_grad(&[x, v], a).unwrap();
        let h = 1e-6;
        let n_mu = pol.mu.len();
        for (i, want) in g.mu.iter().chain(&g.sigma).enumerate() {
            let mut p = pol.clone();
            let coeffs = if i < n_mu { p.mu.coeffs_mut() } else { p.sigma.coeffs_mut() };
            let j = if i < n_mu { i } else { i - n_mu };
            coeffs[j] += h;
            let up = p.log_prob(&[x, v], a).unwrap();
            let coeffs = if i < n_mu { p.mu.coeffs_mut() } else { p.sigma.coeffs_mut() };
            coeffs[j] -= 2.0 * h;
            let down = p.log_prob(&[x, v], a).unwrap();
            let fd = (up - down) / (2.0 * h);
            prop_assert!((fd - want).abs() <= 1e-4 * want.abs().max(1e-2), "{} vs {}", fd, want);
        }
    }

    #[test]
    fn deterministic_action_is_pure(seed in 0u64..1000, x in -1.2f64..0.6, v in -0.07f64..0.07) {
        let init = PolicyInit { seed, amplitude: 0.5, sigma_const: 1.0, with_critic: false };
        let pol = init_policy(4, 3, mc_bounds(), init).unwrap();
        let a = pol.act_deterministic(&[x, v]).unwrap();
        prop_assert_eq!(a.to_bits(), pol.act_deterministic(&[x, v]).unwrap().to_bits());
    }

    #[test]
    fn policy_file_roundtrip_is_bit_exact(seed in 0u64..1000, amp in 1e-6f64..10.0) {
        let init = PolicyInit { seed, amplitude: amp, sigma_const: 1.0, with_critic: true };
        let pol = init_policy(3, 2, mc_bounds(), init).unwrap();
        let file = PolicyFile::new(EnvKind::MountainCar, "ppo", seed, &pol);
        let back: PolicyFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn ars_update_ignores_constant_shifts(
        rp in prop::collection::vec(-100.0f64..100.0, 6),
        rm in prop::collection::vec(-100.0f64..100.0, 6),
        shift in -1e3f64..1e3,
        top in 1usize..=6,
    ) {
        let deltas: Vec<Vec<f64>> = (0..6).map(|i| vec![(i as f64).sin(), (i as f64).cos(), 0.5]).collect();
        let a = ars_update(&deltas, &rp, &rm, top, 0.02);
        let shifted = |v: &[f64]| v.iter().map(|r| r + shift).collect::<Vec<_>>();
        let b = ars_update(&deltas, &shifted(&rp), &shifted(&rm), top, 0.02);
        match (a, b) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
                }
            }
            (None, None) => {}
            _ => prop_assert!(false, "shift changed whether an update happens"),
        }
    }

    #[test]
    fn fully_clipped_ppo_batch_leaves_heads_unchanged(
        seed in 0u64..1000,
        states in prop::collection::vec((-1.2f64..0.6, -0.07f64..0.07, -1.0f64..1.0, 0.1f64..5.0), 1..16),
        excess in 0.3f64..3.0,
    ) {
        let init = PolicyInit { seed, amplitude: 0.3, sigma_const: 1.0, with_critic: true };
        let pol = init_policy(3, 2, mc_bounds(), init).unwrap();
        let cfg = PpoConfig::default();
        let batch: Vec<PpoSample> = states
            .iter()
            .map(|&(x, v, a, adv)| {
                let (mu, sigma, _, bm, bs) = pol.heads(&[x, v]).unwrap();
                PpoSample {
                    basis_mu: bm,
                    basis_sigma: bs,
                    action: a,
                    // ratio = exp(excess) > 1 + clip, positive advantage
                    log_prob_old: gaussian_log_prob(a, mu, sigma) - excess,
                    advantage: adv,
                    value_target: 0.0,
                }
            })
            .collect();
        let g = ppo_minibatch_gradient(&pol, &batch, &cfg);
        prop_assert!(g[..pol.mu.len() + pol.sigma.len()].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn worst_case_policy_has_zero_regret_against_itself() {
    let p = McParams::default();
    let ana = pi_ana_policy(&WorstCaseParams::default(), &p).unwrap();
    let r = eval_mc(&ana, 50, &p).unwrap();
    let again = eval_mc(&ana, 50, &p).unwrap();
    assert_eq!(r, again);
    assert_eq!(r.clone().with_regret(&again).regret, Some(0.0));
}
