//! Claim-by-claim verification harness: parameter sweeps, pointwise
//! comparisons, per-field invariant suites, a fail-closed coverage
//! report, and the pinned standard suite.

pub mod checks;
pub mod claims;
pub mod harness;
pub mod invariants;
pub mod report;
pub mod suite;

pub use checks::{
    check_bracketing, check_comparison_principle, check_large_theta, check_monotonicity_costs,
    check_no_leverage, check_param_monotonicity, check_terminal_limit, CrraAxis, StudyGrid,
    SweepReport,
};
pub use claims::{Assertion, ClaimId};
pub use harness::Harness;
pub use invariants::run_invariant_suite;
pub use report::VerifyReport;
pub use suite::{run_profile, Profile};
