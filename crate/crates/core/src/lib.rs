//! Two-state bacterial persistence under mass killings.
//!
//! Normal cells divide at rate `lambda` and turn persistent at rate `a`;
//! persistent cells do not divide and turn normal at rate `b`. At each
//! killing time every normal cell dies. Killings are either periodic
//! (period `T`) or the points of a Poisson process (intensity `delta`).
//!
//! * [`mean`]: closed-form expected counts from one persistent cell.
//! * [`critical`]: the thresholds `T_c` and `delta_c`, and `m'(delta)`.
//! * [`simulator`]: exact event-driven simulation and survival estimates.
//! * [`graphical`]: the colored splitting-tree construction and the
//!   thinning coupling across killing intensities.

// Negated float comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod error;
pub mod graphical;
pub mod mean;
pub mod model;
pub mod quadrature;
pub mod roots;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{KillingSchedule, PopulationState, RateContext, Rates, Seed};
