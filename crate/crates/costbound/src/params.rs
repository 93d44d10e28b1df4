//! Model parameters, validation and the closed-form derived quantities
//! (merged cost parameter, Merton line, consumption discount factor).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Largest merged cost parameter the solvers accept; beyond this the
/// obstacle scales degenerate and the truncated grid stops making sense.
pub const THETA_CAP: f64 = 1e3;

/// Market-side parameters, all quoted as plain annual rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Expected stock return rate.
    pub alpha: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Stock volatility.
    pub sigma: f64,
    /// Utility discount rate.
    pub beta: f64,
    /// Investment horizon in years.
    pub horizon: f64,
}

impl MarketParams {
    pub fn risk_premium(&self) -> f64 {
        self.alpha - self.r
    }

    /// Constant optimal bond-to-stock dollar ratio of the frictionless
    /// log-utility problem: -(alpha - r - sigma^2) / (alpha - r).
    pub fn merton_line(&self) -> f64 {
        -(self.alpha - self.r - self.sigma * self.sigma) / (self.alpha - self.r)
    }

    /// Annuity-plus-bequest factor g(t) = (1 - e^{-beta(T-t)})/beta + e^{-beta(T-t)}.
    ///
    /// g(T) = 1, and g is monotone in t: decreasing for beta < 1,
    /// increasing for beta > 1, identically 1 at beta = 1.
    pub fn discount_factor(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) || !t.is_finite() {
            return Err(Error::Invalid(vec![Violation::new(
                "t",
                format!("time {t} outside [0, {}]", self.horizon),
            )]));
        }
        Ok(g_tau(self.beta, self.horizon - t))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, value) in [
            ("alpha", self.alpha),
            ("r", self.r),
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("horizon", self.horizon),
        ] {
            if !value.is_finite() {
                out.push(Violation::new(name, "must be finite"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.alpha <= self.r {
            out.push(Violation::new("alpha", "alpha > r required"));
        }
        if self.sigma <= 0.0 {
            out.push(Violation::new("sigma", "sigma > 0 required"));
        }
        if self.beta <= 0.0 {
            out.push(Violation::new("beta", "beta > 0 required"));
        }
        if self.horizon <= 0.0 {
            out.push(Violation::new("horizon", "horizon > 0 required"));
        }
        out
    }
}

/// g as a function of time to go; `expm1` keeps the small-beta limit
/// (tau + 1) accurate.
pub(crate) fn g_tau(beta: f64, tau: f64) -> f64 {
    (-(-beta * tau).exp_m1()) / beta + (-beta * tau).exp()
}

/// Proportional transaction cost rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Buy cost rate, in [0, inf).
    pub lambda: f64,
    /// Sell cost rate, in [0, 1).
    pub mu: f64,
}

impl CostParams {
    /// Merged cost parameter theta = (1 + lambda) / (1 - mu), always > 1
    /// for valid costs.
    pub fn theta(&self) -> f64 {
        (1.0 + self.lambda) / (1.0 - self.mu)
    }

    /// Symmetric costs lambda = mu realizing a given theta.
    pub fn symmetric_for_theta(theta: f64) -> CostParams {
        let c = (theta - 1.0) / (theta + 1.0);
        CostParams { lambda: c, mu: c }
    }

    /// Costs with the given mu whose merged parameter equals theta.
    pub fn with_mu_for_theta(theta: f64, mu: f64) -> CostParams {
        CostParams {
            lambda: theta * (1.0 - mu) - 1.0,
            mu,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            out.push(Violation::new("lambda", "lambda in [0, inf) required"));
        }
        if !self.mu.is_finite() || !(0.0..1.0).contains(&self.mu) {
            out.push(Violation::new("mu", "mu in [0, 1) required"));
        }
        if !out.is_empty() {
            return out;
        }
        if self.lambda + self.mu <= 0.0 {
            out.push(Violation::new("lambda", "lambda + mu > 0 required"));
        } else if self.theta() > THETA_CAP {
            out.push(Violation::new(
                "lambda",
                format!("theta = {:.3e} exceeds the {THETA_CAP:.0e} cap", self.theta()),
            ));
        }
        out
    }
}

/// Investor preferences. The log case carries intermediate consumption;
/// the CRRA case does not, and the two lead to different obstacle
/// operators, so gamma = 0 is rejected rather than aliased to log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Utility {
    LogWithConsumption,
    CrraNoConsumption { gamma: f64 },
}

impl Utility {
    pub fn validate(&self) -> Vec<Violation> {
        match self {
            Utility::LogWithConsumption => Vec::new(),
            Utility::CrraNoConsumption { gamma } => {
                if !gamma.is_finite() || *gamma >= 1.0 || *gamma == 0.0 {
                    vec![Violation::new(
                        "gamma",
                        "gamma < 1 and gamma != 0 required for the CRRA case",
                    )]
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Utility::LogWithConsumption => 0.0,
            Utility::CrraNoConsumption { gamma } => *gamma,
        }
    }
}

/// Everything a solve needs to know about the model itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub market: MarketParams,
    pub costs: CostParams,
    pub utility: Utility,
}

impl ModelParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.market.validate();
        out.extend(self.costs.validate());
        out.extend(self.utility.validate());
        out
    }

    pub fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(violations))
        }
    }

    pub fn theta(&self) -> f64 {
        self.costs.theta()
    }

    /// Merton line of the frictionless problem matching this utility:
    /// -(alpha - r - (1-gamma) sigma^2) / (alpha - r), with gamma = 0 for log.
    pub fn merton_line(&self) -> f64 {
        let m = &self.market;
        let one_minus_gamma = 1.0 - self.utility.gamma();
        -(m.alpha - m.r - one_minus_gamma * m.sigma * m.sigma) / (m.alpha - m.r)
    }
}
