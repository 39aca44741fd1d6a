//! Export the action map of the worst-case analytical policy on a 201x201
//! phase-plane grid, with one trajectory overlaid.
//!
//!     cargo run --release --example heatmap -- out_dir

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use chebycar::analytic::{pi_ana_policy, WorstCaseParams};
use chebycar::env::{write_mc_trajectory_csv, McParams};
use chebycar::evalharness::heatmap_export;

fn main() -> chebycar::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "heatmap_out".into()),
    );
    std::fs::create_dir_all(&out)?;
    let params = McParams::default();
    let pol = pi_ana_policy(&WorstCaseParams::default(), &params)?;
    let grid = heatmap_export(&pol, 201, 201, Some(-0.55), &params)?;
    grid.write_csv(BufWriter::new(File::create(out.join("heatmap.csv"))?))?;
    if let Some(traj) = &grid.overlay {
        write_mc_trajectory_csv(traj, BufWriter::new(File::create(out.join("overlay.csv"))?))?;
    }
    let forward = grid.actions.iter().filter(|&&a| a > 0.0).count();
    println!(
        "wrote {} cells ({} pushing right) to {}",
        grid.actions.len(),
        forward,
        out.display()
    );
    Ok(())
}
