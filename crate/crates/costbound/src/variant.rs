//! The family of double obstacle formulations, each behind a common
//! trait so the time stepper, the explicit oracle and the CLI can pick
//! one by name at runtime.
//!
//! All three share the same skeleton: a solution v pinned between two
//! hyperbola obstacles on a half-line, with the parabolic (or steady)
//! operator holding where v is strictly between them. They differ in
//! coordinates, obstacle offsets and operator coefficients:
//!
//! * `log_consumption` — log utility with consumption in the bid-price
//!   coordinate, obstacles 1/(x+1) and 1/(x+theta), consumption term
//!   (1/g(t))(v + v_x/v);
//! * `crra_no_consumption` — CRRA utility without consumption in the
//!   original coordinate, obstacles 1/(x+1-mu) and 1/(x+1+lambda),
//!   extra quadratic terms gamma sigma^2 (x^2 v v_x + x v^2);
//! * `infinite_horizon_log` — stationary log-utility problem in the
//!   bid-price coordinate, consumption term beta (v + v_x/v).

use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::params::{g_tau, ModelParams, Utility};

/// Which formulation a solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    LogConsumptionHat,
    CrraNoConsumption,
    InfiniteHorizonLog,
}

impl Variant {
    pub fn formulation(self) -> &'static dyn Formulation {
        match self {
            Variant::LogConsumptionHat => &LogConsumptionProblem,
            Variant::CrraNoConsumption => &CrraProblem,
            Variant::InfiniteHorizonLog => &StationaryLogProblem,
        }
    }

    pub fn name(self) -> &'static str {
        self.formulation().name()
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Coefficients of the frozen-coefficient spatial operator at one node.
///
/// The residual convention is
///   F(v) = -diffusion * v_xx + advection[0] * v_x + advection[1] * v_x + reaction * v,
/// so that the full parabolic residual reads -v_t + F(v) after the time
/// derivative is discretized. Each advection entry is upwinded by its own
/// sign, which keeps the assembled system an M-matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub diffusion: f64,
    pub advection: [f64; 2],
    pub reaction: f64,
}

/// One member of the formulation family.
pub trait Formulation: Send + Sync {
    fn id(&self) -> Variant;

    /// Registry name, also accepted in config files.
    fn name(&self) -> &'static str;

    /// Left end of the spatial domain; the upper obstacle blows up there.
    fn left_singularity(&self, p: &ModelParams) -> f64;

    fn upper_obstacle(&self, x: f64, p: &ModelParams) -> f64;

    fn lower_obstacle(&self, x: f64, p: &ModelParams) -> f64;

    /// Terminal (or initial-iterate) profile; equals the upper obstacle
    /// for every formulation in the family.
    fn terminal(&self, x: f64, p: &ModelParams) -> f64 {
        self.upper_obstacle(x, p)
    }

    /// Coefficient of the consumption term, 1/g(t) for the parabolic log
    /// problem, beta for the stationary one, unused for CRRA.
    fn consumption_scale(&self, t: f64, p: &ModelParams) -> f64;

    /// Frozen-coefficient operator at a node. `frozen` is the previous
    /// Picard iterate at the node and must be strictly positive.
    fn stencil(&self, x: f64, consumption_scale: f64, frozen: f64, p: &ModelParams) -> Stencil;

    /// Stationary problems march in pseudo-time to a fixed point instead
    /// of backward from a terminal slice.
    fn stationary(&self) -> bool {
        false
    }

    /// Whether v is expected nondecreasing in t (holds without
    /// consumption, fails with it).
    fn time_monotone(&self) -> bool {
        false
    }

    /// Extracted boundaries are already in original (cost) coordinates.
    fn original_coordinates(&self) -> bool {
        false
    }

    /// Variant-specific parameter requirements on top of `ModelParams`.
    fn requires(&self, p: &ModelParams) -> Vec<Violation>;
}

fn require_log_utility(name: &str, p: &ModelParams) -> Vec<Violation> {
    match p.utility {
        Utility::LogWithConsumption => Vec::new(),
        _ => vec![Violation::new(
            "utility",
            format!("{name} requires log utility with consumption"),
        )],
    }
}

pub struct LogConsumptionProblem;

impl Formulation for LogConsumptionProblem {
    fn id(&self) -> Variant {
        Variant::LogConsumptionHat
    }

    fn name(&self) -> &'static str {
        "log_consumption"
    }

    fn left_singularity(&self, _p: &ModelParams) -> f64 {
        -1.0
    }

    fn upper_obstacle(&self, x: f64, _p: &ModelParams) -> f64 {
        1.0 / (x + 1.0)
    }

    fn lower_obstacle(&self, x: f64, p: &ModelParams) -> f64 {
        1.0 / (x + p.theta())
    }

    fn consumption_scale(&self, t: f64, p: &ModelParams) -> f64 {
        1.0 / g_tau(p.market.beta, p.market.horizon - t)
    }

    fn stencil(&self, x: f64, consumption_scale: f64, frozen: f64, p: &ModelParams) -> Stencil {
        let m = &p.market;
        let s2 = m.sigma * m.sigma;
        let premium = m.alpha - m.r;
        Stencil {
            diffusion: 0.5 * s2 * x * x,
            advection: [(premium - 2.0 * s2) * x, consumption_scale / frozen],
            reaction: (premium - s2) + consumption_scale,
        }
    }

    fn requires(&self, p: &ModelParams) -> Vec<Violation> {
        require_log_utility(self.name(), p)
    }
}

pub struct CrraProblem;

impl Formulation for CrraProblem {
    fn id(&self) -> Variant {
        Variant::CrraNoConsumption
    }

    fn name(&self) -> &'static str {
        "crra_no_consumption"
    }

    fn left_singularity(&self, p: &ModelParams) -> f64 {
        -(1.0 - p.costs.mu)
    }

    fn upper_obstacle(&self, x: f64, p: &ModelParams) -> f64 {
        1.0 / (x + 1.0 - p.costs.mu)
    }

    fn lower_obstacle(&self, x: f64, p: &ModelParams) -> f64 {
        1.0 / (x + 1.0 + p.costs.lambda)
    }

    fn consumption_scale(&self, _t: f64, _p: &ModelParams) -> f64 {
        0.0
    }

    fn stencil(&self, x: f64, _consumption_scale: f64, frozen: f64, p: &ModelParams) -> Stencil {
        let m = &p.market;
        let s2 = m.sigma * m.sigma;
        let premium = m.alpha - m.r;
        let gamma = p.utility.gamma();
        // The quadratic terms x^2 v v_x and x v^2 each keep one factor of v
        // frozen, leaving a linear operator in v.
        Stencil {
            diffusion: 0.5 * s2 * x * x,
            advection: [
                (premium - (2.0 - gamma) * s2) * x,
                -gamma * s2 * x * x * frozen,
            ],
            reaction: (premium - (1.0 - gamma) * s2) - gamma * s2 * x * frozen,
        }
    }

    fn time_monotone(&self) -> bool {
        true
    }

    fn original_coordinates(&self) -> bool {
        true
    }

    fn requires(&self, p: &ModelParams) -> Vec<Violation> {
        match p.utility {
            Utility::CrraNoConsumption { .. } => Vec::new(),
            _ => vec![Violation::new(
                "utility",
                format!("{} requires CRRA utility without consumption", self.name()),
            )],
        }
    }
}

pub struct StationaryLogProblem;

impl Formulation for StationaryLogProblem {
    fn id(&self) -> Variant {
        Variant::InfiniteHorizonLog
    }

    fn name(&self) -> &'static str {
        "infinite_horizon_log"
    }

    fn left_singularity(&self, _p: &ModelParams) -> f64 {
        -1.0
    }

    fn upper_obstacle(&self, x: f64, _p: &ModelParams) -> f64 {
        1.0 / (x + 1.0)
    }

    fn lower_obstacle(&self, x: f64, p: &ModelParams) -> f64 {
        1.0 / (x + p.theta())
    }

    fn consumption_scale(&self, _t: f64, p: &ModelParams) -> f64 {
        p.market.beta
    }

    fn stencil(&self, x: f64, consumption_scale: f64, frozen: f64, p: &ModelParams) -> Stencil {
        let m = &p.market;
        let s2 = m.sigma * m.sigma;
        let premium = m.alpha - m.r;
        Stencil {
            diffusion: 0.5 * s2 * x * x,
            advection: [(premium - 2.0 * s2) * x, consumption_scale / frozen],
            reaction: (premium - s2) + consumption_scale,
        }
    }

    fn stationary(&self) -> bool {
        true
    }

    fn requires(&self, p: &ModelParams) -> Vec<Violation> {
        require_log_utility(self.name(), p)
    }
}

/// Every registered formulation, in registry order.
pub fn all() -> &'static [&'static dyn Formulation] {
    &[&LogConsumptionProblem, &CrraProblem, &StationaryLogProblem]
}

/// Runtime lookup by registry name.
pub fn by_name(name: &str) -> Option<&'static dyn Formulation> {
    all().iter().copied().find(|f| f.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CostParams, MarketParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn log_params(lambda: f64, mu: f64) -> ModelParams {
        ModelParams {
            market: MarketParams {
                alpha: 0.3,
                r: 0.01,
                sigma: 0.2,
                beta: 0.1,
                horizon: 2.0,
            },
            costs: CostParams { lambda, mu },
            utility: Utility::LogWithConsumption,
        }
    }

    fn crra_params(lambda: f64, mu: f64, gamma: f64) -> ModelParams {
        ModelParams {
            utility: Utility::CrraNoConsumption { gamma },
            ..log_params(lambda, mu)
        }
    }

    #[test]
    fn registry_lookup_roundtrips() {
        for f in all() {
            let found = by_name(f.name()).expect("registered name resolves");
            assert_eq!(found.id(), f.id());
            assert_eq!(f.id().formulation().name(), f.name());
        }
        assert!(by_name("no_such_formulation").is_none());
    }

    #[test]
    fn log_obstacles_at_origin() {
        // theta = 2 via lambda = 0, mu = 0.5
        let p = log_params(0.0, 0.5);
        let f = Variant::LogConsumptionHat.formulation();
        assert_relative_eq!(f.upper_obstacle(0.0, &p), 1.0);
        assert_relative_eq!(f.lower_obstacle(0.0, &p), 0.5);
    }

    #[test]
    fn crra_obstacles_at_origin() {
        let p = crra_params(0.1, 0.1, -1.0);
        let f = Variant::CrraNoConsumption.formulation();
        assert_relative_eq!(f.upper_obstacle(0.0, &p), 1.0 / 0.9, max_relative = 1e-15);
        assert_relative_eq!(f.lower_obstacle(0.0, &p), 1.0 / 1.1, max_relative = 1e-15);
    }

    #[test]
    fn variant_utility_requirements() {
        let log = log_params(0.1, 0.1);
        let crra = crra_params(0.1, 0.1, -1.0);
        assert!(Variant::LogConsumptionHat.formulation().requires(&log).is_empty());
        assert!(!Variant::LogConsumptionHat.formulation().requires(&crra).is_empty());
        assert!(Variant::CrraNoConsumption.formulation().requires(&crra).is_empty());
        assert!(!Variant::CrraNoConsumption.formulation().requires(&log).is_empty());
        assert!(Variant::InfiniteHorizonLog.formulation().requires(&log).is_empty());
    }

    #[test]
    fn stationary_consumption_scale_is_beta() {
        let p = log_params(0.1, 0.1);
        let f = Variant::InfiniteHorizonLog.formulation();
        assert_eq!(f.consumption_scale(0.0, &p), 0.1);
        // parabolic counterpart at t = T has g = 1
        let fp = Variant::LogConsumptionHat.formulation();
        assert_relative_eq!(fp.consumption_scale(2.0, &p), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_point_stencils() {
        // at x = 0 every x-multiplied term vanishes: no diffusion, no
        // drift for CRRA; the log consumption term keeps its v_x part
        let log = log_params(0.1, 0.1);
        let st = Variant::LogConsumptionHat
            .formulation()
            .stencil(0.0, 1.0, 0.5, &log);
        assert_eq!(st.diffusion, 0.0);
        assert_eq!(st.advection[0], 0.0);
        assert!(st.advection[1] > 0.0);

        let crra = crra_params(0.1, 0.1, -1.0);
        let st = Variant::CrraNoConsumption
            .formulation()
            .stencil(0.0, 0.0, 0.5, &crra);
        assert_eq!(st.diffusion, 0.0);
        assert_eq!(st.advection, [0.0, 0.0]);
        let m = &crra.market;
        let expected = (m.alpha - m.r) - 2.0 * m.sigma * m.sigma;
        assert!((st.reaction - expected).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn obstacles_strictly_ordered(
            lambda in 0.001f64..2.0,
            mu in 0.0f64..0.8,
            offset in 1e-3f64..30.0,
        ) {
            for variant in [Variant::LogConsumptionHat, Variant::CrraNoConsumption, Variant::InfiniteHorizonLog] {
                let p = match variant {
                    Variant::CrraNoConsumption => crra_params(lambda, mu, -1.0),
                    _ => log_params(lambda, mu),
                };
                let f = variant.formulation();
                let x = f.left_singularity(&p) + offset;
                prop_assert!(f.upper_obstacle(x, &p) > f.lower_obstacle(x, &p));
                prop_assert!(f.lower_obstacle(x, &p) > 0.0);
            }
        }
    }
}
