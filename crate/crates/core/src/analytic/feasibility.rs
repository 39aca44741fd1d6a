use serde::{Deserialize, Serialize};

use crate::env::{mc_step, McParams, McState};
use crate::Result;

/// Whether the goal can be reached when the inelastic wall sits at `x_wall`:
/// full throttle from rest at the wall must carry the car to the goal in one
/// stroke.
pub fn wall_feasibility(x_wall: f64, params: &McParams) -> Result<bool> {
    let p = McParams {
        x_min: x_wall,
        ..*params
    };
    p.validate()?;
    let mut state = McState::at_rest(x_wall);
    for _ in 0..10 * p.t_max {
        let step = mc_step(&state, 1.0, &p)?;
        if step.wall_hit || step.next.v < 0.0 {
            return Ok(false);
        }
        if step.terminated {
            return Ok(true);
        }
        state = step.next;
    }
    Ok(false)
}

/// Scans `x_wall` over `[lo, hi]` at `resolution` and returns the first and
/// last infeasible positions.
pub fn infeasible_wall_interval(
    lo: f64,
    hi: f64,
    resolution: f64,
    params: &McParams,
) -> Result<Option<(f64, f64)>> {
    let n = ((hi - lo) / resolution).round() as usize;
    let mut first = None;
    let mut last = None;
    for i in 0..=n {
        let x = lo + i as f64 * resolution;
        if x >= params.x_goal {
            break;
        }
        if !wall_feasibility(x, params)? {
            first.get_or_insert(x);
            last = Some(x);
        }
    }
    Ok(first.zip(last))
}

/// Overrides for richer benchmark variants (moved wall, lower speed limit).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct McVariant {
    pub x_min: Option<f64>,
    pub v_max: Option<f64>,
}

pub fn benchmark_variant(base: &McParams, variant: &McVariant) -> Result<McParams> {
    let p = McParams {
        x_min: variant.x_min.unwrap_or(base.x_min),
        v_max: variant.v_max.unwrap_or(base.v_max),
        ..*base
    };
    p.validate()?;
    Ok(p)
}
