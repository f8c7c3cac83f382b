//! Two-stage local electricity market on a radial feeder: a day-ahead
//! energy market priced from nodal-balance duals and adjusted by energy
//! burden, followed by a real-time flexibility market that spreads
//! disturbance-driven curtailment fairly.

pub mod cli;
pub mod ders;
pub mod error;
pub mod grid;
pub mod pipeline;
pub mod scenario;
pub mod stage1;
pub mod stage2;

pub use error::{Error, Result};
