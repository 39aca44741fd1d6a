//! ARS on Pendulum with a degree-3 Chebyshev policy over (cos, sin, theta_dot),
//! then evaluation on the start grid.
//!
//!     cargo run --release --example pendulum -- 200000

use chebycar::env::{EnvKind, PendulumParams};
use chebycar::evalharness::eval_pendulum;
use chebycar::train::{train, Algo, AlgoConfig, TrainSpec};

fn main() -> chebycar::Result<()> {
    let steps: u64 = std::env::args()
        .nth(1)
        .map_or(200_000, |s| s.parse().expect("steps"));
    let mut spec = TrainSpec::new(EnvKind::Pendulum, Algo::Ars, 3, 0);
    if let AlgoConfig::Ars(cfg) = &mut spec.config {
        cfg.total_steps = steps;
    }
    let run = train(&spec)?;
    println!("trained {} steps in {:.1}s", run.steps, run.wall_clock_s);
    let Some(pol) = &run.policy else {
        println!("diverged");
        return Ok(());
    };
    let report = eval_pendulum(pol, 10, &PendulumParams::default())?;
    println!(
        "grid returns: mean {:.2} min {:.2} max {:.2}",
        report.returns.mean, report.returns.min, report.returns.max
    );
    for (lo, hi, c) in report.density(8) {
        println!("  [{lo:>9.2}, {hi:>9.2}) {}", "#".repeat(c));
    }
    Ok(())
}
