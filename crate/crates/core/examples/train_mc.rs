//! Best-of-n training on Mountain Car followed by grid evaluation of the
//! selected policy against the worst-case analytical policy.
//!
//!     cargo run --release --example train_mc -- ars 20
//!     cargo run --release --example train_mc -- ppo 3

use chebycar::analytic::{pi_ana_policy, WorstCaseParams};
use chebycar::env::{EnvKind, McParams};
use chebycar::evalharness::{eval_mc, policy_l2_distance};
use chebycar::train::{train_protocol, Algo, TrainSpec};

fn main() -> chebycar::Result<()> {
    let mut args = std::env::args().skip(1);
    let algo = match args.next().as_deref() {
        None | Some("ars") => Algo::Ars,
        Some("ppo") => Algo::Ppo,
        Some("reinforce") => Algo::Reinforce,
        Some(other) => panic!("unknown algorithm {other}"),
    };
    let runs: usize = args.next().map_or(20, |s| s.parse().expect("runs"));
    let spec = TrainSpec::new(EnvKind::MountainCar, algo, 3, 0);
    let result = train_protocol(&spec, runs, 10)?;
    for s in &result.summaries {
        match s.eval {
            Some(e) => println!(
                "run {:>2} seed {:>2}: mean {:>9.4}",
                s.index, s.seed, e.mean
            ),
            None => println!("run {:>2} seed {:>2}: diverged", s.index, s.seed),
        }
    }
    let Some(best) = result.best_run().and_then(|r| r.policy.as_ref()) else {
        println!("every run diverged");
        return Ok(());
    };
    let params = McParams::default();
    let ana = pi_ana_policy(&WorstCaseParams::default(), &params)?;
    let reference = eval_mc(&ana, 100, &params)?;
    let report = eval_mc(best, 100, &params)?
        .with_regret(&reference)
        .with_l2(policy_l2_distance(best, &ana, 101, 101)?);
    println!(
        "best on grid: mean {:.4} min {:.4} regret {:+.4} L2 to pi_ana {:.4}",
        report.returns.mean,
        report.returns.min,
        report.regret.unwrap_or(f64::NAN),
        report.l2_to_ana.unwrap_or(f64::NAN)
    );
    Ok(())
}
