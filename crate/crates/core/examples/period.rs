//! Zero-action oscillation period (closed form vs RK4) and which wall
//! positions still let full throttle reach the goal in one stroke.
//!
//!     cargo run --release --example period

use chebycar::analytic::{infeasible_wall_interval, oscillation_period, rk4_period};
use chebycar::env::McParams;

fn main() -> chebycar::Result<()> {
    let p = McParams::default();
    println!(
        "{:>6} {:>10} {:>10} {:>8}",
        "x0", "elliptic", "rk4", "steps"
    );
    for x0 in [-0.9, -0.7, -0.6, -0.55, -0.5, -0.45] {
        let t = oscillation_period(x0, &p)?;
        let r = rk4_period(x0, &p, 1e-3)?;
        println!("{x0:>6.2} {t:>10.4} {r:>10.4} {:>8.0}", t.round());
    }
    match infeasible_wall_interval(-1.2, 0.45, 1e-4, &p)? {
        Some((lo, hi)) => {
            println!("\nno single full-throttle stroke from a wall in [{lo:.4}, {hi:.4}]")
        }
        None => println!("\nevery wall position is feasible"),
    }
    Ok(())
}
