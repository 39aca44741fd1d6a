//! Table-style evaluation of the analytical policies on the 100-start grid:
//! the worst-case policy with fixed gains and the per-start optimum.
//!
//!     cargo run --release --example worst_case

use chebycar::analytic::{pi_ana_policy, solve_phase_two, SearchConfig, WorstCaseParams};
use chebycar::env::McParams;
use chebycar::evalharness::{eval_mc, eval_mc_with, linspace, EvalReport};

fn row(name: &str, r: &EvalReport) {
    println!(
        "{name:<10} mean {:>8.4}  min {:>8.4}  max {:>8.4}  t* {:>6.1}  max v* {:.2e}  regret {:+.4}",
        r.returns.mean,
        r.returns.min,
        r.returns.max,
        r.t_star.mean,
        r.v_star.max,
        r.regret.unwrap_or(0.0)
    );
}

fn main() -> chebycar::Result<()> {
    let params = McParams::default();
    let ana = pi_ana_policy(&WorstCaseParams::default(), &params)?;
    let ana_report = eval_mc(&ana, 100, &params)?;
    row("pi_ana", &ana_report);

    let cfg = SearchConfig::default();
    let two = solve_phase_two(&params)?;
    let starts = linspace(-0.6, -0.4, 100);
    let opt = eval_mc_with(&starts, &params, |x0| {
        let sol = chebycar::analytic::solve_two_phase_with(x0, &params, &cfg, &two)?
            .ok_or_else(|| chebycar::Error::Domain(format!("no solution from {x0}")))?;
        Ok(sol.trajectory)
    })?
    .with_regret(&ana_report);
    row("pi_opt,x0", &opt);
    Ok(())
}
