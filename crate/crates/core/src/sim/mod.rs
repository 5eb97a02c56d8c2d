//! Time integration of the two-body systems, conservation ledgers and
//! scattering runs.

pub mod engine;
pub mod integrator;
pub mod scattering;
pub mod system;

pub use engine::{integrate, ledger_report, time_reversal_error, IntegrateOptions, LedgerReport, Trajectory};
pub use integrator::{Method, OdeConfig};
pub use scattering::{force_history, scattering_run, ScatterMode, ScatteringResult, ScatteringSetup};
pub use system::{Body, BodySpec, DynamicalSystem, Pairing, Provider};
