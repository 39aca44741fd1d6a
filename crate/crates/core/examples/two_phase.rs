//! Solve the two-phase problem for a few start positions and compare with the
//! best single-phase (wall-free) trajectory.
//!
//!     cargo run --release --example two_phase -- -0.55

use std::f64::consts::PI;

use chebycar::analytic::{solve_single_phase, solve_two_phase, SearchConfig};
use chebycar::env::McParams;

fn main() -> chebycar::Result<()> {
    let params = McParams::default();
    let cfg = SearchConfig::default();
    let starts: Vec<f64> = match std::env::args().nth(1) {
        Some(x) => vec![x.parse().expect("x0 must be a number")],
        None => vec![-0.6, -0.55, -PI / 6.0 - 0.001, -0.4],
    };
    for x0 in starts {
        println!("x0 = {x0:.5}");
        match solve_two_phase(x0, &params, &cfg)? {
            Some(s) => println!(
                "  two-phase:    k={:>2} C1={:.5} C2={:.5} loss={:.4} R={:.4} t*={} v*={:.2e} v_wall={:.2e}",
                s.k,
                s.c1.unwrap(),
                s.c2.unwrap(),
                s.loss,
                s.ret,
                s.t_star,
                s.v_star,
                s.v_wall
            ),
            None => println!("  two-phase:    infeasible"),
        }
        match solve_single_phase(x0, &params, &cfg)? {
            Some(s) => println!(
                "  single-phase: k={:>2} C={:.5} loss={:.4} R={:.4} t*={}",
                s.k,
                s.c.unwrap(),
                s.loss,
                s.ret,
                s.t_star
            ),
            None => println!("  single-phase: infeasible"),
        }
    }
    Ok(())
}
