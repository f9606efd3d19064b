//! IO, orchestration and service layer around `rlif-core`: experiment
//! configs, CSV/JSON artifacts, theory sweeps, and live intervention
//! sessions over WebSocket.

pub mod config;
pub mod error;
pub mod io;
pub mod protocol;
pub mod run;
pub mod server;
pub mod session;
pub mod theory_suite;

pub use error::{LabError, Result};
