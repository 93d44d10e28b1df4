//! Registry of the verifiable claims and the assertion record type.
//!
//! Every numeric check in the verification harness references exactly
//! one registered claim; the report fails closed if an in-scope claim
//! ends up with no assertions.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClaimId {
    /// Plain sell boundary monotone in the buy cost, plain buy boundary
    /// monotone in the sell cost.
    T31i,
    /// Cost-adjusted sell (buy) boundary monotone in its own cost.
    T31ii,
    /// Cost-adjusted boundaries monotone in both costs jointly.
    C32,
    /// No-leverage case: plain boundaries monotone in both costs and
    /// nonnegative, with the Merton line inside the no-trade band.
    C33,
    /// The Merton line always lies between the cost-adjusted boundaries.
    C35,
    /// The sell boundary tends to the (cost-scaled) Merton line at the
    /// horizon.
    R34,
    /// Pointwise ordering of solutions in the merged cost parameter.
    L36,
    /// Large merged cost: sell boundary below zero and independent of
    /// the buy cost, buy boundary above zero.
    T32,
    /// Finite-horizon buy boundary dominates the stationary one.
    LB1,
    /// CRRA boundaries decreasing in the risk premium.
    T41i,
    /// CRRA boundaries increasing in relative risk aversion.
    T41ii,
    /// CRRA boundaries decreasing in volatility at fixed premium ratio.
    T41iii,
    /// Solution pinned between the obstacles, exactly.
    InvSandwich,
    /// Solution strictly decreasing in x, sharpened by v_x <= -v^2.
    InvMonoX,
    /// x v_x + v >= 0 (CRRA fields).
    InvXvx,
    /// Solution nondecreasing in time (no-consumption fields only).
    InvVt,
    /// Complementarity residual signs on contact sets.
    InvCompl,
}

impl ClaimId {
    pub const ALL: [ClaimId; 17] = [
        ClaimId::T31i,
        ClaimId::T31ii,
        ClaimId::C32,
        ClaimId::C33,
        ClaimId::C35,
        ClaimId::R34,
        ClaimId::L36,
        ClaimId::T32,
        ClaimId::LB1,
        ClaimId::T41i,
        ClaimId::T41ii,
        ClaimId::T41iii,
        ClaimId::InvSandwich,
        ClaimId::InvMonoX,
        ClaimId::InvXvx,
        ClaimId::InvVt,
        ClaimId::InvCompl,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ClaimId::T31i => "T3.1.i",
            ClaimId::T31ii => "T3.1.ii",
            ClaimId::C32 => "C3.2",
            ClaimId::C33 => "C3.3",
            ClaimId::C35 => "C3.5",
            ClaimId::R34 => "R3.4",
            ClaimId::L36 => "L3.6",
            ClaimId::T32 => "T3.2",
            ClaimId::LB1 => "L-B.1",
            ClaimId::T41i => "T4.1.i",
            ClaimId::T41ii => "T4.1.ii",
            ClaimId::T41iii => "T4.1.iii",
            ClaimId::InvSandwich => "INV-SANDWICH",
            ClaimId::InvMonoX => "INV-MONO-X",
            ClaimId::InvXvx => "INV-XVX",
            ClaimId::InvVt => "INV-VT",
            ClaimId::InvCompl => "INV-COMPL",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            ClaimId::T31i => {
                "sell boundary decreasing in the buy cost; buy boundary increasing in the sell cost"
            }
            ClaimId::T31ii => {
                "adjusted sell boundary decreasing in the sell cost; adjusted buy boundary increasing in the buy cost"
            }
            ClaimId::C32 => "cost-adjusted boundaries monotone in both cost rates",
            ClaimId::C33 => {
                "without leverage the plain boundaries are monotone in both costs and nonnegative"
            }
            ClaimId::C35 => "the Merton line lies between the cost-adjusted boundaries",
            ClaimId::R34 => "the sell boundary approaches the Merton line at the horizon",
            ClaimId::L36 => "solutions are pointwise ordered in the merged cost parameter",
            ClaimId::T32 => {
                "for large merged cost the sell boundary is negative, the buy boundary positive, and the sell boundary independent of the buy cost"
            }
            ClaimId::LB1 => "the finite-horizon buy boundary dominates the stationary one",
            ClaimId::T41i => "boundaries decreasing in the risk premium",
            ClaimId::T41ii => "boundaries increasing in relative risk aversion",
            ClaimId::T41iii => "boundaries decreasing in volatility at fixed premium-to-variance ratio",
            ClaimId::InvSandwich => "solution pinned between the obstacles exactly",
            ClaimId::InvMonoX => "solution decreasing in x with v_x <= -v^2",
            ClaimId::InvXvx => "x v_x + v nonnegative",
            ClaimId::InvVt => "solution nondecreasing in time",
            ClaimId::InvCompl => "complementarity residual signs on contact sets",
        }
    }
}

impl std::fmt::Display for ClaimId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// Outcome of one numeric check against a claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assertion {
    pub claim: ClaimId,
    pub label: String,
    /// Worst signed violation observed; negative values mean margin.
    pub worst: f64,
    /// Tolerance the violation is held against.
    pub tolerance: f64,
    pub pass: bool,
    /// Checks that do not apply to the field at hand (recorded, passing).
    pub skipped: bool,
}

impl Assertion {
    pub fn checked(claim: ClaimId, label: impl Into<String>, worst: f64, tolerance: f64) -> Self {
        Assertion {
            claim,
            label: label.into(),
            worst,
            tolerance,
            pass: worst <= tolerance,
            skipped: false,
        }
    }

    pub fn skipped(claim: ClaimId, label: impl Into<String>) -> Self {
        Assertion {
            claim,
            label: label.into(),
            worst: 0.0,
            tolerance: 0.0,
            pass: true,
            skipped: true,
        }
    }
}
