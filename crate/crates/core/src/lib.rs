//! Error-disturbance uncertainty relations for Gaussian states measured by
//! heterodyne detection: a signal mode is mixed with a vacuum meter on a beam
//! splitter and `x` is read on one output port, `p` on the other.
//!
//! - [`gaussian`]: states, beam splitter, loss.
//! - [`metrics`]: error, disturbance, Heisenberg/Ozawa/Branciard bounds.
//! - [`sampling`]: seeded quadrature records and estimators.
//! - [`sweep`]: transmission sweeps and analytic/empirical comparison.
//! - [`io`]: configuration, result files and recorded data.

pub mod error;
pub mod gaussian;
pub mod io;
pub mod metrics;
pub mod sampling;
pub mod sweep;

pub use error::{Error, Result};
pub use gaussian::{beam_split, Basis, GaussianState, Transmission, TwoModeState};
pub use metrics::{build_report, minimize_branciard, EdrReport};
pub use sampling::{draw_pairs, run_trials, SampleBatch, TrialStats, TrialSummary};
pub use sweep::{run_sweep, StateSpec, SweepConfig, SweepResult};
