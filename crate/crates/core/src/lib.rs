//! Logistic population dynamics with harvesting.
//!
//! - [`dynamics`]: the logistic field under no harvest, constant effort,
//!   constant quota or a scheduled control, and the exact unharvested solution.
//! - [`integrate`]: fixed-step RK4 with extinction handling and crossing events.
//! - [`stability`]: equilibria and Lyapunov-based stability verdicts.
//! - [`control`]: Hamiltonian, adjoint, singular arc and the bang-singular
//!   harvesting policy, with simulation and yield.
//! - [`timescale`]: discrete logistic maps and positivity checks.
//! - [`cli`]: the `loglab` command-line surface.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod stability;
pub mod timescale;

pub use dynamics::{closed_form, per_capita_growth, vector_field, HarvestMode, ModelParams};
pub use error::{Error, Result};
pub use integrate::{
    integrate, integrate_with_events, CrossingEvent, Sample, Termination, Trajectory,
};
