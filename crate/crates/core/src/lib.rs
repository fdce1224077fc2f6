//! Ergodic sum capacity of fading cognitive multiple-access (C-MAC) and
//! broadcast (C-BC) channels under long-term (LT) and short-term (ST)
//! transmit-power and interference-power constraints.
//!
//! The long-term constraints are dualized and the Lagrange multipliers are
//! optimized with the ellipsoid method; every fading state then decouples
//! into a small convex subproblem that is solved exactly, in closed form
//! where one exists. All expectations are equal-weight averages over a
//! stored, seeded ensemble of channel states.

pub mod capacity;
pub mod constraints;
pub mod dual;
pub mod error;
pub mod fading;
mod lp;
pub mod lograte;
pub mod oracle;
pub mod perstate_bc;
pub mod perstate_mac;
pub mod tdma;
pub mod verify;

pub use capacity::{PolicyResult, SolveOptions};
pub use constraints::{ConstraintCase, PowerBudget};
pub use dual::DualPoint;
pub use error::{Error, Result};
pub use fading::{ChannelStateBc, ChannelStateMac, FadingModel};

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
