//! Analytical optimal control of the continuous Mountain Car problem and
//! multi-variate Chebyshev stochastic policies.
//!
//! The crate is organised bottom-up:
//!
//! * [`env`]: discrete-time Mountain Car and Pendulum environments.
//! * [`cheby`]: n-variate max-degree Chebyshev models (recurrence and Horner evaluation).
//! * [`policy`]: Gaussian policies with Chebyshev mean/deviation heads.
//! * [`analytic`]: the proportional-control optimum `alpha = C * v`, stroke analysis,
//!   single/two-phase searches, the worst-case policy and the oscillation period.
//! * [`train`]: REINFORCE, ARS and PPO trainers plus the best-of-n protocol.
//! * [`evalharness`]: grid evaluation, regret, policy distances and heatmaps.
//! * [`cli`]: the `chebycar` command line front end.
//!
//! See `examples/` for one runnable program per capability.

pub mod analytic;
pub mod cheby;
pub mod cli;
pub mod env;
pub mod error;
pub mod evalharness;
pub mod policy;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
