//! Metropolis-adjusted Langevin correctors for score-based diffusion samplers.
//!
//! Proposals come from the unadjusted Langevin kernel driven by a score oracle. The
//! accept/reject step either runs an exact Barker two-coin factory fed by unbiased
//! Poisson-product estimates of the density ratio, or a Metropolis test on a
//! Newton–Cotes estimate of the log ratio along the segment between the two states.

pub mod adjust_exact;
pub mod adjust_quadrature;
pub mod decision;
pub mod diagnostics;
mod error;
pub mod linalg;
pub mod poisson;
pub mod proposal;
pub mod sampler;
pub mod schedule;
pub mod targets;

pub use adjust_exact::{
    bound_c, expected_queries, expected_rounds, poisson_product_w, two_coin_decision, BoundSpec,
    BoundStrategy, DEFAULT_MAX_ROUNDS,
};
pub use decision::{Decision, DecisionPath};
pub use error::{Error, Result};
pub use linalg::StateVector;
pub use proposal::{line_integrand, log_h, ula_propose, LangevinProposal};
pub use schedule::{NoiseSchedule, ScheduleKind};
pub use targets::{ScoreModel, ScoreOracle};
