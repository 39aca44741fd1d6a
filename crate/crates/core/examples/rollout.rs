//! Drive Mountain Car with the proportional controller `alpha = C v`, with and
//! without the small kick that gets the car moving from rest, and dump the
//! kicked trajectory as CSV.
//!
//!     cargo run --release --example rollout -- 4.89095 -0.6 > traj.csv

use chebycar::analytic::{proportional_policy, TwoPhasePolicy, WorstCaseParams};
use chebycar::env::{mc_rollout, write_mc_trajectory_csv, McParams, Trajectory};

fn summary(name: &str, t: &Trajectory) {
    eprintln!(
        "{name:<8} steps={} goal={} loss={:.4} R={:.4} v*={:.2e}",
        t.steps(),
        t.terminated,
        t.loss(),
        t.ret(),
        t.v_star().unwrap_or(f64::NAN)
    );
}

fn main() -> chebycar::Result<()> {
    let mut args = std::env::args().skip(1);
    let c: f64 = args
        .next()
        .map_or(4.89095, |s| s.parse().expect("C must be a number"));
    let x0: f64 = args
        .next()
        .map_or(-0.6, |s| s.parse().expect("x0 must be a number"));
    let params = McParams::default();
    summary("plain", &mc_rollout(proportional_policy(c), x0, &params)?);
    let kicked = TwoPhasePolicy::single(c, &WorstCaseParams::default());
    let traj = mc_rollout(|s| kicked.action(s.x, s.v), x0, &params)?;
    summary("kicked", &traj);
    write_mc_trajectory_csv(&traj, std::io::stdout().lock())
}
