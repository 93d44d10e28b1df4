//! Double obstacle solvers and verification tooling for optimal
//! investment with proportional transaction costs.
//!
//! The crate solves, in reduced one-dimensional form, the free-boundary
//! problems whose contact sets are the buy and sell regions of a
//! transaction-cost portfolio problem. On top of the solver sit boundary
//! extraction with cost-adjusted coordinate maps, a claim-by-claim
//! verification harness (monotonicity sweeps, comparison principles,
//! invariant suites), a Monte Carlo policy simulator, and an independent
//! explicit-scheme oracle used to cross-check the implicit solver.

pub mod analysis;
pub mod boundary;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod oracle;
pub mod params;
pub mod problem;
pub mod solver;
pub mod variant;

pub use boundary::{boundaries, crra_boundaries, extract_boundaries, BoundaryCurves, BUY_INFINITE};
pub use error::{Error, Result, Violation};
pub use params::{CostParams, MarketParams, ModelParams, Utility};
pub use problem::{GridConfig, ProblemSpec, SolverConfig};
pub use solver::{complementarity_residual, solve, Contact, SolutionField};
pub use variant::Variant;
