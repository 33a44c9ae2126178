//! Robust beamforming for a multi-antenna cognitive-radio transmitter whose
//! channel to a protected receiver is only known up to an ellipsoid.
//!
//! Three independent solvers are provided: the closed-form chain in
//! [`analytic`], a conic program solved by a barrier method in [`socp`], and
//! brute-force references in [`oracle`]. [`experiments`] and [`cli`] drive
//! seeded parameter sweeps.

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod oracle;
pub mod scenario_io;
pub mod socp;

pub use analytic::{solve_analytic, solve_p1, solve_p3};
pub use channel::{BeamSolution, CaseTag, Scenario, UncertaintyModel};
pub use error::{Error, Result};
pub use socp::{build_socp, recover_solution, solve_socp};
