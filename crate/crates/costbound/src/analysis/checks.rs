//! Claim checks: parameter sweeps and pointwise comparisons over solved
//! fields. All boundary-level assertions use a two-cell tolerance; the
//! boundaries are sub-cell interpolated, so two cells comfortably
//! dominate extraction noise while still detecting real violations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::claims::{Assertion, ClaimId};
use crate::analysis::harness::Harness;
use crate::boundary::{boundaries, BoundaryCurves};
use crate::error::{Error, Result, Violation};
use crate::params::{CostParams, ModelParams, Utility};
use crate::problem::{GridConfig, ProblemSpec, SolverConfig};
use crate::variant::Variant;

/// Discretization shared by the points of one study.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StudyGrid {
    pub grid: GridConfig,
    pub solver: SolverConfig,
}

impl StudyGrid {
    pub fn new(grid: GridConfig) -> Self {
        StudyGrid {
            grid,
            solver: SolverConfig::default(),
        }
    }
}

/// Sweep outcome: one set of curves per swept value plus the assertions
/// they ground.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub values: Vec<f64>,
    pub fixed: String,
    pub curves: Vec<BoundaryCurves>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// Violation of `next >= prev` that treats equal sentinels as equal.
fn nondecreasing_violation(prev: f64, next: f64) -> f64 {
    if prev == next {
        0.0
    } else {
        prev - next
    }
}

/// Violation of `next <= prev`.
fn nonincreasing_violation(prev: f64, next: f64) -> f64 {
    if prev == next {
        0.0
    } else {
        next - prev
    }
}

fn worst_pairwise(curves: &[BoundaryCurves], pick: impl Fn(&BoundaryCurves, usize) -> f64, violation: impl Fn(f64, f64) -> f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for w in curves.windows(2) {
        let n = w[0].len().min(w[1].len());
        for j in 0..n {
            worst = worst.max(violation(pick(&w[0], j), pick(&w[1], j)));
        }
    }
    worst
}

fn solve_sweep(
    harness: &Harness,
    specs: Vec<ProblemSpec>,
) -> Result<Vec<BoundaryCurves>> {
    let results: Vec<Result<BoundaryCurves>> = specs
        .par_iter()
        .map(|spec| {
            let field = harness.field(spec)?;
            boundaries(&field)
        })
        .collect();
    results.into_iter().collect()
}

fn log_spec(base: &ModelParams, costs: CostParams, sg: &StudyGrid) -> ProblemSpec {
    let params = ModelParams {
        costs,
        utility: Utility::LogWithConsumption,
        market: base.market,
    };
    ProblemSpec::new(Variant::LogConsumptionHat, params)
        .with_grid(sg.grid)
        .with_solver(sg.solver)
}

/// Sweep the merged cost parameter and assert the monotonicity of the
/// adjusted boundaries. The reduced problem depends on the costs only
/// through theta, which is exactly what makes one sweep carry all four
/// monotonicity directions of the plain and adjusted boundaries.
pub fn check_monotonicity_costs(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    theta_grid: &[f64],
) -> Result<SweepReport> {
    if theta_grid.windows(2).any(|w| w[0] >= w[1]) || theta_grid.iter().any(|t| *t <= 1.0) {
        return Err(Error::Invalid(vec![Violation::new(
            "theta_grid",
            "must be strictly increasing and > 1",
        )]));
    }
    let specs: Vec<ProblemSpec> = theta_grid
        .iter()
        .map(|&theta| log_spec(base, CostParams::symmetric_for_theta(theta), sg))
        .collect();
    let curves = solve_sweep(harness, specs)?;
    let two_h = 2.0 * curves[0].h;

    let sell_worst = worst_pairwise(&curves, |c, j| c.sell_hat[j], nonincreasing_violation);
    let buy_worst = worst_pairwise(&curves, |c, j| c.buy_adjusted[j], nondecreasing_violation);

    let assertions = vec![
        Assertion::checked(
            ClaimId::T31i,
            "sell boundary nonincreasing in the buy cost (adjusted sell vs merged cost)",
            sell_worst,
            two_h,
        ),
        Assertion::checked(
            ClaimId::T31i,
            "buy boundary nondecreasing in the sell cost (adjusted buy vs merged cost)",
            buy_worst,
            two_h,
        ),
        Assertion::checked(
            ClaimId::T31ii,
            "adjusted sell boundary nonincreasing in the sell cost",
            sell_worst,
            two_h,
        ),
        Assertion::checked(
            ClaimId::T31ii,
            "adjusted buy boundary nondecreasing in the buy cost",
            buy_worst,
            two_h,
        ),
        Assertion::checked(
            ClaimId::C32,
            "adjusted boundaries monotone in both costs jointly",
            sell_worst.max(buy_worst),
            two_h,
        ),
    ];

    Ok(SweepReport {
        axis: "theta".into(),
        values: theta_grid.to_vec(),
        fixed: format!(
            "alpha={}, r={}, sigma={}, beta={}, horizon={}",
            base.market.alpha, base.market.r, base.market.sigma, base.market.beta, base.market.horizon
        ),
        curves,
        assertions,
        notes: Vec::new(),
    })
}

/// No-leverage market: sweep each cost rate separately and assert the
/// plain boundaries are monotone, nonnegative, and bracket the Merton
/// line.
pub fn check_no_leverage(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    lambda_grid: &[f64],
    mu_grid: &[f64],
) -> Result<SweepReport> {
    let premium = base.market.risk_premium();
    let sigma2 = base.market.sigma * base.market.sigma;
    if premium > sigma2 {
        return Err(Error::Invalid(vec![Violation::new(
            "market",
            "no-leverage check requires premium <= sigma^2",
        )]));
    }
    let x_merton = base.market.merton_line();

    let lambda_specs: Vec<ProblemSpec> = lambda_grid
        .iter()
        .map(|&lambda| log_spec(base, CostParams { lambda, mu: base.costs.mu }, sg))
        .collect();
    let mu_specs: Vec<ProblemSpec> = mu_grid
        .iter()
        .map(|&mu| log_spec(base, CostParams { lambda: base.costs.lambda, mu }, sg))
        .collect();
    let lambda_curves = solve_sweep(harness, lambda_specs)?;
    let mu_curves = solve_sweep(harness, mu_specs)?;
    let two_h = 2.0 * lambda_curves[0].h;

    let mut assertions = Vec::new();
    for (name, curves) in [("buy cost", &lambda_curves), ("sell cost", &mu_curves)] {
        assertions.push(Assertion::checked(
            ClaimId::C33,
            format!("plain sell boundary nonincreasing in the {name}"),
            worst_pairwise(curves, |c, j| c.sell_orig[j], nonincreasing_violation),
            two_h,
        ));
        assertions.push(Assertion::checked(
            ClaimId::C33,
            format!("plain buy boundary nondecreasing in the {name}"),
            worst_pairwise(curves, |c, j| c.buy_orig[j], nondecreasing_violation),
            two_h,
        ));
    }
    let mut negative = f64::NEG_INFINITY;
    let mut outside = f64::NEG_INFINITY;
    for curves in lambda_curves.iter().chain(&mu_curves) {
        for j in 0..curves.len() {
            negative = negative.max(-curves.sell_orig[j]);
            if curves.buy_orig[j].is_finite() {
                negative = negative.max(-curves.buy_orig[j]);
            }
            outside = outside
                .max(curves.sell_orig[j] - x_merton)
                .max(if curves.buy_orig[j].is_finite() {
                    x_merton - curves.buy_orig[j]
                } else {
                    f64::NEG_INFINITY
                });
        }
    }
    assertions.push(Assertion::checked(
        ClaimId::C33,
        "boundaries nonnegative without leverage",
        negative,
        two_h,
    ));
    assertions.push(Assertion::checked(
        ClaimId::C33,
        "Merton line inside the no-trade band",
        outside,
        two_h,
    ));

    let mut curves = lambda_curves;
    curves.extend(mu_curves);
    Ok(SweepReport {
        axis: "lambda then mu".into(),
        values: lambda_grid.iter().chain(mu_grid).cloned().collect(),
        fixed: format!("no-leverage market, x_M = {x_merton:.4}"),
        curves,
        assertions,
        notes: Vec::new(),
    })
}

/// Pointwise comparison of two solutions in the merged cost parameter.
/// The allowance is local: 1e-6 plus a two-cell discretization term
/// scaled by the larger local slope.
pub fn check_comparison_principle(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    theta_low: f64,
    theta_high: f64,
) -> Result<Assertion> {
    if theta_low > theta_high {
        return Err(Error::Invalid(vec![Violation::new(
            "theta",
            "comparison requires theta_low <= theta_high",
        )]));
    }
    let field_low = harness.field(&log_spec(base, CostParams::symmetric_for_theta(theta_low), sg))?;
    let field_high = harness.field(&log_spec(base, CostParams::symmetric_for_theta(theta_high), sg))?;
    let n = field_low.n_space();
    let h = field_low.spacing();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..field_low.n_slices() {
        let lo = field_low.slice(j);
        let hi = field_high.slice(j);
        for i in 1..n - 1 {
            let slope_lo = (lo[i + 1] - lo[i - 1]).abs() / (2.0 * h);
            let slope_hi = (hi[i + 1] - hi[i - 1]).abs() / (2.0 * h);
            let allowance = 1e-6 + 2.0 * h * slope_lo.max(slope_hi);
            // claim: v(theta_low) >= v(theta_high) - allowance
            worst = worst.max(hi[i] - lo[i] - allowance);
        }
    }
    Ok(Assertion::checked(
        ClaimId::L36,
        format!("v(theta={theta_low}) >= v(theta={theta_high}) pointwise"),
        worst,
        0.0,
    ))
}

/// Cost sweep asserting the Merton line stays between the adjusted
/// boundaries, and that the plain sell boundary crosses the Merton line
/// somewhere in the sweep (below at small costs, above at large ones).
pub fn check_bracketing(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    cost_grid: &[(f64, f64)],
    t_eval: f64,
) -> Result<SweepReport> {
    let specs: Vec<ProblemSpec> = cost_grid
        .iter()
        .map(|&(lambda, mu)| log_spec(base, CostParams { lambda, mu }, sg))
        .collect();
    let curves = solve_sweep(harness, specs)?;
    let two_h = 2.0 * curves[0].h;
    let x_merton = base.market.merton_line();

    let mut sell_side = f64::NEG_INFINITY;
    let mut buy_side = f64::NEG_INFINITY;
    for c in &curves {
        for j in 0..c.len() {
            sell_side = sell_side.max(c.sell_adjusted[j] - x_merton);
            if c.buy_adjusted[j].is_finite() {
                buy_side = buy_side.max(x_merton - c.buy_adjusted[j]);
            }
        }
    }

    // crossing narrative at the evaluation slice
    let eval_index = |c: &BoundaryCurves| -> usize {
        c.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t_eval).abs().total_cmp(&(b.1 - t_eval).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let sells_at_eval: Vec<f64> = curves.iter().map(|c| c.sell_orig[eval_index(c)]).collect();
    // below at some small cost, above at some larger cost
    let below_then_above = sells_at_eval
        .iter()
        .position(|s| *s < x_merton)
        .map(|i| sells_at_eval[i..].iter().any(|s| *s > x_merton))
        .unwrap_or(false);
    let crossing_cost = cost_grid
        .iter()
        .zip(sells_at_eval.windows(2))
        .filter(|(_, w)| w[0] < x_merton && w[1] > x_merton)
        .map(|((lambda, _), _)| *lambda)
        .next_back();

    let mut notes = Vec::new();
    if let Some(c) = crossing_cost {
        notes.push(format!(
            "plain sell boundary crosses the Merton line between cost {c} and the next sweep point"
        ));
    }

    let assertions = vec![
        Assertion::checked(
            ClaimId::C35,
            "adjusted sell boundary below the Merton line",
            sell_side,
            two_h,
        ),
        Assertion::checked(
            ClaimId::C35,
            "adjusted buy boundary above the Merton line",
            buy_side,
            two_h,
        ),
        Assertion::checked(
            ClaimId::C35,
            "plain sell boundary crosses the Merton line across the cost sweep",
            if below_then_above { -1.0 } else { 1.0 },
            0.0,
        ),
    ];

    Ok(SweepReport {
        axis: "cost (lambda, mu)".into(),
        values: cost_grid.iter().map(|(l, _)| *l).collect(),
        fixed: format!("x_M = {x_merton:.4}, t_eval = {t_eval}"),
        curves,
        assertions,
        notes,
    })
}

/// Refinement study of the first-slice sell boundary against the Merton
/// line. The gap must shrink monotonically under simultaneous refinement
/// and end below 5% of |x_M| plus two (finest) cells.
pub fn check_terminal_limit(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    levels: &[(usize, usize)],
) -> Result<SweepReport> {
    if levels.len() < 3 {
        return Err(Error::Invalid(vec![Violation::new(
            "levels",
            "terminal limit needs at least 3 refinement levels",
        )]));
    }
    let x_merton = base.market.merton_line();
    let mut assertions = Vec::new();
    let mut notes = Vec::new();
    let mut all_curves = Vec::new();
    for (label, beta) in [("base beta", base.market.beta), ("beta = 1", 1.0)] {
        let mut params = *base;
        params.market.beta = beta;
        let mut gaps = Vec::new();
        let mut final_h = sg.grid.x_max;
        for &(n_space, n_time) in levels {
            let mut grid = sg.grid;
            grid.n_space = n_space;
            grid.n_time = n_time;
            let spec = ProblemSpec::new(Variant::LogConsumptionHat, params)
                .with_grid(grid)
                .with_solver(sg.solver);
            let field = harness.field(&spec)?;
            let curves = boundaries(&field)?;
            let last = curves.len() - 1;
            gaps.push((curves.sell_hat[last] - x_merton).abs());
            final_h = curves.h;
            all_curves.push(curves);
        }
        notes.push(format!("{label}: first-slice gaps to x_M: {gaps:?}"));
        let mono = gaps
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        assertions.push(Assertion::checked(
            ClaimId::R34,
            format!("{label}: gap to the Merton line shrinks under refinement"),
            mono,
            0.0,
        ));
        assertions.push(Assertion::checked(
            ClaimId::R34,
            format!("{label}: final gap within 5% of |x_M| plus two cells"),
            *gaps.last().unwrap(),
            0.05 * x_merton.abs() + 2.0 * final_h,
        ));
    }
    Ok(SweepReport {
        axis: "refinement level".into(),
        values: levels.iter().map(|(n, _)| *n as f64).collect(),
        fixed: format!("x_M = {x_merton:.4}"),
        curves: all_curves,
        assertions,
        notes,
    })
}

/// Large merged-cost regime: the sell boundary plateaus in theta, the
/// signs x_s < 0 < x_b hold on the plateau, and the finite-horizon buy
/// boundary dominates the stationary one.
pub fn check_large_theta(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    theta_grid: &[f64],
    mu: f64,
    theta_stationary: f64,
) -> Result<SweepReport> {
    let m = &base.market;
    if m.risk_premium() <= m.sigma * m.sigma {
        return Err(Error::Invalid(vec![Violation::new(
            "market",
            "large-theta check requires premium > sigma^2",
        )]));
    }
    if m.beta > 1.0 {
        return Err(Error::Invalid(vec![Violation::new(
            "beta",
            "large-theta check requires beta <= 1",
        )]));
    }

    let specs: Vec<ProblemSpec> = theta_grid
        .iter()
        .map(|&theta| log_spec(base, CostParams::with_mu_for_theta(theta, mu), sg))
        .collect();
    let curves = solve_sweep(harness, specs)?;
    let two_h = 2.0 * curves[0].h;

    // plateau: first index from which consecutive sell curves stay
    // within two cells of each other, uniformly in time
    let diffs: Vec<f64> = curves
        .windows(2)
        .map(|w| {
            let n = w[0].len().min(w[1].len());
            (0..n)
                .map(|j| (w[1].sell_orig[j] - w[0].sell_orig[j]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let plateau_start = (0..diffs.len())
        .find(|&i| diffs[i..].iter().all(|d| *d < two_h));
    let mut assertions = Vec::new();
    let mut notes = Vec::new();
    match plateau_start {
        Some(i0) => {
            notes.push(format!(
                "sell boundary plateau from theta = {} (consecutive sup-changes {diffs:?})",
                theta_grid[i0]
            ));
            assertions.push(Assertion::checked(
                ClaimId::T32,
                "sell boundary stops moving beyond an empirical plateau",
                diffs[i0..].iter().cloned().fold(0.0, f64::max),
                two_h,
            ));
            // sign pattern on the plateau
            let mut sell_sign = f64::NEG_INFINITY;
            let mut buy_sign = f64::NEG_INFINITY;
            for c in &curves[i0..] {
                for j in 0..c.len() {
                    sell_sign = sell_sign.max(c.sell_orig[j]);
                    buy_sign = buy_sign.max(-c.buy_orig[j]);
                }
            }
            assertions.push(Assertion::checked(
                ClaimId::T32,
                "sell boundary negative on the plateau",
                sell_sign,
                0.0,
            ));
            assertions.push(Assertion::checked(
                ClaimId::T32,
                "buy boundary positive on the plateau",
                buy_sign,
                0.0,
            ));
        }
        None => {
            assertions.push(Assertion::checked(
                ClaimId::T32,
                "sell boundary stops moving beyond an empirical plateau",
                diffs.iter().cloned().fold(0.0, f64::max),
                two_h,
            ));
        }
    }

    // stationary comparison at the designated theta
    let stationary_spec = ProblemSpec::new(
        Variant::InfiniteHorizonLog,
        ModelParams {
            costs: CostParams::with_mu_for_theta(theta_stationary, mu),
            ..*base
        },
    )
    .with_grid(sg.grid)
    .with_solver(sg.solver);
    let stationary = harness.field(&stationary_spec)?;
    let stationary_curves = boundaries(&stationary)?;
    let buy_floor = stationary_curves.buy_orig[0];
    let sell_star = stationary_curves.sell_orig[0];
    notes.push(format!(
        "stationary boundaries at theta = {theta_stationary}: sell* = {sell_star:.4}, buy* = {}",
        buy_floor
    ));

    for (i, &theta) in theta_grid.iter().enumerate() {
        if theta != theta_stationary {
            continue;
        }
        let c = &curves[i];
        let mut worst = f64::NEG_INFINITY;
        for j in 0..c.len() {
            worst = worst.max(if buy_floor.is_finite() {
                if c.buy_orig[j].is_finite() {
                    buy_floor - c.buy_orig[j]
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                0.0
            });
        }
        assertions.push(Assertion::checked(
            ClaimId::LB1,
            format!("finite-horizon buy boundary above the stationary one at theta = {theta}"),
            worst,
            two_h,
        ));
        // consistency of the far-from-horizon sell boundary with the
        // stationary one, informational
        notes.push(format!(
            "sell boundary at t = 0 vs stationary: {:.5} vs {sell_star:.5}",
            c.sell_orig[0]
        ));
    }

    Ok(SweepReport {
        axis: "theta (buy-cost variation at fixed sell cost)".into(),
        values: theta_grid.to_vec(),
        fixed: format!("mu = {mu}, beta = {}", m.beta),
        curves,
        assertions,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrraAxis {
    RiskPremium,
    RiskAversion,
    SigmaFixedRatio,
}

/// CRRA sweeps along the risk premium, the risk aversion, or volatility
/// at fixed premium-to-variance ratio.
pub fn check_param_monotonicity(
    harness: &Harness,
    base: &ModelParams,
    sg: &StudyGrid,
    axis: CrraAxis,
    values: &[f64],
) -> Result<SweepReport> {
    let gamma0 = match base.utility {
        Utility::CrraNoConsumption { gamma } => gamma,
        _ => {
            return Err(Error::Invalid(vec![Violation::new(
                "utility",
                "CRRA sweeps need the CRRA utility",
            )]))
        }
    };
    let ratio = base.market.risk_premium() / (base.market.sigma * base.market.sigma);
    let specs: Vec<ProblemSpec> = values
        .iter()
        .map(|&value| {
            let mut params = *base;
            match axis {
                CrraAxis::RiskPremium => {
                    params.market.alpha = params.market.r + value;
                }
                CrraAxis::RiskAversion => {
                    params.utility = Utility::CrraNoConsumption { gamma: 1.0 - value };
                }
                CrraAxis::SigmaFixedRatio => {
                    params.market.sigma = value;
                    params.market.alpha = params.market.r + ratio * value * value;
                }
            }
            ProblemSpec::new(Variant::CrraNoConsumption, params)
                .with_grid(sg.grid)
                .with_solver(sg.solver)
        })
        .collect();
    let curves = solve_sweep(harness, specs)?;
    let two_h = 2.0 * curves[0].h;

    let (claim, axis_name, increasing) = match axis {
        CrraAxis::RiskPremium => (ClaimId::T41i, "risk premium", false),
        CrraAxis::RiskAversion => (ClaimId::T41ii, "relative risk aversion", true),
        CrraAxis::SigmaFixedRatio => (ClaimId::T41iii, "volatility at fixed ratio", false),
    };
    let direction = |prev: f64, next: f64| {
        if increasing {
            nondecreasing_violation(prev, next)
        } else {
            nonincreasing_violation(prev, next)
        }
    };
    let dir_name = if increasing { "nondecreasing" } else { "nonincreasing" };
    let assertions = vec![
        Assertion::checked(
            claim,
            format!("sell boundary {dir_name} in the {axis_name}"),
            worst_pairwise(&curves, |c, j| c.sell_orig[j], direction),
            two_h,
        ),
        Assertion::checked(
            claim,
            format!("buy boundary {dir_name} in the {axis_name}"),
            worst_pairwise(&curves, |c, j| c.buy_orig[j], direction),
            two_h,
        ),
    ];
    Ok(SweepReport {
        axis: axis_name.into(),
        values: values.to_vec(),
        fixed: format!("gamma baseline {gamma0}, costs ({}, {})", base.costs.lambda, base.costs.mu),
        curves,
        assertions,
        notes: Vec::new(),
    })
}
