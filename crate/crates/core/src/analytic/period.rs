use std::f64::consts::PI;

use crate::env::McParams;
use crate::{Error, Result};

/// `K(k) = pi / (2 AGM(1, sqrt(1 - k^2)))`.
pub fn complete_elliptic_k(k: f64) -> Result<f64> {
    if !(k.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "elliptic modulus |k| = {} must be < 1",
            k.abs()
        )));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - k * k).sqrt();
    while (a - b).abs() > 1e-15 * a {
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(PI / (a + b))
}

/// Continuous-time period of the unforced swing released at rest from `x0`:
/// `T = 4 / sqrt(3 g) * K(sin(phi / 2))`, `phi = 3 x0 + pi / 2`.
pub fn oscillation_period(x0: f64, params: &McParams) -> Result<f64> {
    let phi = 3.0 * x0 + PI / 2.0;
    if !(phi.abs() < PI) {
        return Err(Error::Domain(format!(
            "x0 = {x0} is not inside the potential well"
        )));
    }
    let k = complete_elliptic_k((phi / 2.0).sin())?;
    Ok(4.0 / (3.0 * params.g).sqrt() * k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

/// RK4 integration of `x'' = -g cos 3x` from rest at `x0`.
pub fn ode_zero_action(x0: f64, params: &McParams, h: f64, t_end: f64) -> Vec<OdeSample> {
    let g = params.g;
    let f = |x: f64, v: f64| (v, -g * (3.0 * x).cos());
    let steps = (t_end / h).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut x, mut v) = (x0, 0.0);
    out.push(OdeSample { t: 0.0, x, v });
    for i in 1..=steps {
        let (k1x, k1v) = f(x, v);
        let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
        let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
        let (k4x, k4v) = f(x + h * k3x, v + h * k3v);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push(OdeSample {
            t: i as f64 * h,
            x,
            v,
        });
    }
    out
}

/// Period from the RK4 solution: time between the first two upward zero
/// crossings of `v`, linearly interpolated.
pub fn rk4_period(x0: f64, params: &McParams, h: f64) -> Result<f64> {
    let guess = oscillation_period(x0, params)?;
    let path = ode_zero_action(x0, params, h, 2.5 * guess);
    let mut ups = path
        .windows(2)
        .filter(|w| w[0].v < 0.0 && w[1].v >= 0.0)
        .map(|w| {
            let f = -w[0].v / (w[1].v - w[0].v);
            w[0].t + f * (w[1].t - w[0].t)
        });
    match (ups.next(), ups.next()) {
        (Some(a), Some(b)) => Ok(b - a),
        _ => Err(Error::Domain(
            "integration window too short for two crossings".into(),
        )),
    }
}
