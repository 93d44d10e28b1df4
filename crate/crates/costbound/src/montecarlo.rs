//! Monte Carlo validation of the boundary policy.
//!
//! Paths follow the bond/stock dynamics under proportional costs with
//! the reflected-trading policy: whenever the bond-to-stock ratio exits
//! the no-trade band, trade exactly back to the nearest boundary (paying
//! the proportional cost), otherwise trade nothing. Consumption uses the
//! feedback rule implied by the reduced field: the marginal value of
//! bond wealth is phi_x = g(t) vhat(rho/(1-mu), t) / y in terms of the
//! bid-price-coordinate field vhat and the ratio rho = X/Y, and the
//! first-order condition for log utility gives c = 1/phi_x, hence
//! c = y (1-mu) / (g(t) vhat). For the frictionless profile
//! vhat = 1/(x+1) this collapses to the classic rule c = W/g(t).
//!
//! Determinism contract: every path derives its generator from
//! (seed, path index), so runs are bit-identical regardless of thread
//! scheduling, and perturbed policies reuse identical noise (common
//! random numbers). Accumulation uses compensated summation over a
//! per-path buffer, so the reported means do not depend on reduction
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCurves;
use crate::error::{Error, Result, Violation};
use crate::params::{g_tau, ModelParams, Utility};
use crate::solver::SolutionField;
use crate::variant::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Simulation steps over the horizon; dt = T / n_steps.
    pub n_steps: usize,
    pub seed: u64,
    /// Initial bond holding.
    pub x0: f64,
    /// Initial stock holding, >= 0.
    pub y0: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 50_000,
            n_steps: 2_000,
            seed: 7,
            x0: 0.0,
            y0: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, params: &ModelParams) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_paths == 0 || self.n_steps == 0 {
            out.push(Violation::new("n_paths", "paths and steps must be positive"));
        }
        if self.y0 < 0.0 {
            out.push(Violation::new("y0", "y0 >= 0 required"));
        }
        if self.x0 + (1.0 - params.costs.mu) * self.y0 <= 0.0 {
            out.push(Violation::new(
                "x0",
                "initial position must have positive liquidation value",
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct RegionFractions {
    pub sell: f64,
    pub no_trade: f64,
    pub buy: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TradeStats {
    /// Mean dollar volume sold per path (pre-cost).
    pub sold: f64,
    /// Mean dollar volume bought per path (pre-cost).
    pub bought: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub mean_utility: f64,
    pub std_error: f64,
    pub region_fractions: RegionFractions,
    pub trade_volume: TradeStats,
    pub n_paths: usize,
}

/// Per-path accumulator; filled independently, reduced sequentially.
#[derive(Debug, Clone, Copy, Default)]
struct PathOutcome {
    utility: f64,
    sold: f64,
    bought: f64,
    steps_sell: u64,
    steps_buy: u64,
    steps_hold: u64,
}

/// Time-indexed lookup tables shared by all paths.
struct PolicyTables {
    sell: Vec<f64>,
    buy: Vec<f64>,
    g: Vec<f64>,
    /// Field slice index per simulation step (floor in time).
    field_slice: Vec<usize>,
}

fn build_tables(
    curves: &BoundaryCurves,
    field: &SolutionField,
    params: &ModelParams,
    sim: &SimConfig,
) -> PolicyTables {
    let horizon = params.market.horizon;
    let dt = horizon / sim.n_steps as f64;
    let n_curve = curves.len();
    let curve_dt = if n_curve > 1 {
        curves.times[1] - curves.times[0]
    } else {
        horizon
    };
    let field_slices = field.n_slices();
    let mut tables = PolicyTables {
        sell: Vec::with_capacity(sim.n_steps),
        buy: Vec::with_capacity(sim.n_steps),
        g: Vec::with_capacity(sim.n_steps),
        field_slice: Vec::with_capacity(sim.n_steps),
    };
    for k in 0..sim.n_steps {
        let t = k as f64 * dt;
        let j = ((t / curve_dt) as usize).min(n_curve - 1);
        tables.sell.push(curves.sell_orig[j]);
        tables.buy.push(curves.buy_orig[j]);
        tables.g.push(g_tau(params.market.beta, horizon - t));
        // previous-slice convention in time for the value field
        tables
            .field_slice
            .push(((t / curve_dt) as usize).min(field_slices.saturating_sub(1)));
    }
    tables
}

/// Linear interpolation of the bid-price-coordinate field in x, with
/// obstacle extrapolation beyond the truncated grid.
fn interp_field(field: &SolutionField, slice: usize, x_hat: f64) -> f64 {
    let xs = &field.xs;
    let n = xs.len();
    let form = field.spec.variant.formulation();
    if x_hat <= xs[0] {
        return field.value(slice, 0);
    }
    if x_hat >= xs[n - 1] {
        return form.lower_obstacle(x_hat, &field.spec.params);
    }
    let h = field.spacing();
    let pos = (x_hat - xs[0]) / h;
    let i = (pos as usize).min(n - 2);
    let w = pos - i as f64;
    field.value(slice, i) * (1.0 - w) + field.value(slice, i + 1) * w
}

struct PathResult {
    outcome: PathOutcome,
    insolvent_at: Option<(usize, f64)>,
}

fn run_path(
    path_id: u64,
    tables: &PolicyTables,
    field: &SolutionField,
    params: &ModelParams,
    sim: &SimConfig,
) -> PathResult {
    let m = &params.market;
    let costs = &params.costs;
    let dt = m.horizon / sim.n_steps as f64;
    let drift = (m.alpha - 0.5 * m.sigma * m.sigma) * dt;
    let vol = m.sigma * dt.sqrt();
    let r_growth = (m.r * dt).exp();
    let one_minus_mu = 1.0 - costs.mu;
    let one_plus_lambda = 1.0 + costs.lambda;

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(sim.seed, path_id));
    let mut x = sim.x0;
    let mut y = sim.y0;
    let mut out = PathOutcome::default();
    let mut running_utility = 0.0f64;
    let mut comp = 0.0f64; // Neumaier compensation for the utility integral

    for k in 0..sim.n_steps {
        let t = k as f64 * dt;
        let sell_b = tables.sell[k];
        let buy_b = tables.buy[k];
        let g = tables.g[k];

        // classify the pre-trade position, then reflect onto the band
        if y > 0.0 {
            let ratio = x / y;
            if ratio < sell_b {
                out.steps_sell += 1;
                let sold = (sell_b * y - x) / (sell_b + one_minus_mu);
                x += one_minus_mu * sold;
                y -= sold;
                out.sold += sold;
            } else if buy_b.is_finite() && ratio > buy_b {
                out.steps_buy += 1;
                let bought = (x - buy_b * y) / (buy_b + one_plus_lambda);
                x -= one_plus_lambda * bought;
                y += bought;
                out.bought += bought;
            } else {
                out.steps_hold += 1;
            }
        } else if buy_b.is_finite() && x > 0.0 {
            out.steps_buy += 1;
            let bought = x / (buy_b + one_plus_lambda);
            x -= one_plus_lambda * bought;
            y += bought;
            out.bought += bought;
        } else {
            out.steps_hold += 1;
        }

        // consumption from the feedback rule, frozen over the step
        let consumption = if y > 0.0 {
            let x_hat = (x / y) / one_minus_mu;
            let v_hat = interp_field(field, tables.field_slice[k], x_hat);
            y * one_minus_mu / (g * v_hat)
        } else {
            // all-bond position consumes the frictionless annuity rule
            x / g
        };

        let wealth = x + one_minus_mu * y;
        if wealth < 0.0 || consumption <= 0.0 {
            return PathResult {
                outcome: out,
                insolvent_at: Some((k, wealth)),
            };
        }

        // discounted running utility, left-endpoint rule
        let term = (-m.beta * t).exp() * consumption.ln() * dt;
        let fresh = running_utility + term;
        comp += if running_utility.abs() >= term.abs() {
            (running_utility - fresh) + term
        } else {
            (term - fresh) + running_utility
        };
        running_utility = fresh;

        // evolve: bond with interest less consumption (exact for frozen
        // consumption), stock by the exact lognormal step
        x = x * r_growth - consumption * (r_growth - 1.0) / m.r;
        if y > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            y *= (drift + vol * z).exp();
        }
    }

    let terminal_wealth = x + one_minus_mu * y;
    if terminal_wealth <= 0.0 {
        return PathResult {
            outcome: out,
            insolvent_at: Some((sim.n_steps, terminal_wealth)),
        };
    }
    out.utility = running_utility + comp + (-m.beta * m.horizon).exp() * terminal_wealth.ln();
    PathResult {
        outcome: out,
        insolvent_at: None,
    }
}

fn mix_seed(seed: u64, path: u64) -> u64 {
    // splitmix64 over the pair keeps per-path streams decorrelated
    let mut z = seed ^ path.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Simulate the boundary policy and estimate the expected utility of
/// discounted consumption plus terminal liquidation wealth.
///
/// Requires a log-utility field solved in the bid-price coordinate; the
/// curves come from the same solve or a deliberate perturbation of it.
/// Insolvency along any path is a policy bug and surfaces as an error.
pub fn simulate_policy(
    curves: &BoundaryCurves,
    field: &SolutionField,
    params: &ModelParams,
    sim: &SimConfig,
) -> Result<SimulationResult> {
    Ok(simulate_policy_with_paths(curves, field, params, sim)?.0)
}

/// As [`simulate_policy`], additionally returning the per-path
/// discounted utilities (in path-index order) for external inspection.
pub fn simulate_policy_with_paths(
    curves: &BoundaryCurves,
    field: &SolutionField,
    params: &ModelParams,
    sim: &SimConfig,
) -> Result<(SimulationResult, Vec<f64>)> {
    if params.utility != Utility::LogWithConsumption
        || field.spec.variant != Variant::LogConsumptionHat
    {
        return Err(Error::VariantMismatch {
            expected: "log_consumption".into(),
            found: field.spec.variant.name().into(),
        });
    }
    let violations = sim.validate(params);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }

    let tables = build_tables(curves, field, params, sim);
    let results: Vec<PathResult> = (0..sim.n_paths as u64)
        .into_par_iter()
        .map(|p| run_path(p, &tables, field, params, sim))
        .collect();

    for (p, r) in results.iter().enumerate() {
        if let Some((step, wealth)) = r.insolvent_at {
            return Err(Error::Insolvent {
                path: p as u64,
                step,
                wealth,
            });
        }
    }

    let n = sim.n_paths as f64;
    let mean = compensated_sum(results.iter().map(|r| r.outcome.utility)) / n;
    let var = compensated_sum(
        results
            .iter()
            .map(|r| (r.outcome.utility - mean) * (r.outcome.utility - mean)),
    ) / (n - 1.0).max(1.0);
    let std_error = (var / n).sqrt();

    let total_steps = (sim.n_paths * sim.n_steps) as f64;
    let sells: u64 = results.iter().map(|r| r.outcome.steps_sell).sum();
    let buys: u64 = results.iter().map(|r| r.outcome.steps_buy).sum();
    let holds: u64 = results.iter().map(|r| r.outcome.steps_hold).sum();
    let sold = compensated_sum(results.iter().map(|r| r.outcome.sold)) / n;
    let bought = compensated_sum(results.iter().map(|r| r.outcome.bought)) / n;

    let result = SimulationResult {
        mean_utility: mean,
        std_error,
        region_fractions: RegionFractions {
            sell: sells as f64 / total_steps,
            no_trade: holds as f64 / total_steps,
            buy: buys as f64 / total_steps,
        },
        trade_volume: TradeStats { sold, bought },
        n_paths: sim.n_paths,
    };
    let utilities = results.into_iter().map(|r| r.outcome.utility).collect();
    Ok((result, utilities))
}

/// One row of a perturbation study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub sell_shift: f64,
    pub buy_shift: f64,
    pub mean_utility: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationStudy {
    pub rows: Vec<PerturbationRow>,
    /// Index of the unshifted row.
    pub base_index: usize,
    /// Unshifted utility is within two standard errors of the best row.
    pub base_within_two_se: bool,
}

impl PerturbationStudy {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sell_shift,buy_shift,mean_utility,std_error")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                row.sell_shift, row.buy_shift, row.mean_utility, row.std_error
            )?;
        }
        Ok(())
    }
}

/// Fraction of (1 - mu) by which a shifted sell boundary must stay above
/// the solvency wall at -(1 - mu). A sell boundary at the wall leaves no
/// room for the one-step diffusion overshoot of the discrete-time
/// reflection, so heavily down-shifted policies are clamped to the
/// nearest admissible one rather than simulated into insolvency.
pub const SOLVENCY_MARGIN_FRACTION: f64 = 0.05;

/// Re-simulate under shifted boundaries with common random numbers and
/// check that the solved (unshifted) policy is statistically best.
/// Down-shifts are clamped so the sell boundary keeps a solvency margin.
pub fn perturbation_study(
    curves: &BoundaryCurves,
    field: &SolutionField,
    params: &ModelParams,
    sim: &SimConfig,
    shifts: &[(f64, f64)],
) -> Result<PerturbationStudy> {
    let floor = (1.0 - params.costs.mu) * (SOLVENCY_MARGIN_FRACTION - 1.0);
    let mut rows = Vec::with_capacity(shifts.len());
    let mut base_index = None;
    for (i, &(ds, db)) in shifts.iter().enumerate() {
        if ds == 0.0 && db == 0.0 && base_index.is_none() {
            base_index = Some(i);
        }
        let shifted = curves.shifted(ds, db)?.with_sell_floor(floor);
        let result = simulate_policy(&shifted, field, params, sim)?;
        rows.push(PerturbationRow {
            sell_shift: ds,
            buy_shift: db,
            mean_utility: result.mean_utility,
            std_error: result.std_error,
        });
    }
    let base_index = base_index.ok_or_else(|| {
        Error::Invalid(vec![Violation::new(
            "shifts",
            "perturbation study requires the unshifted (0, 0) entry",
        )])
    })?;
    let best = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean_utility.total_cmp(&b.1.mean_utility))
        .map(|(i, _)| i)
        .unwrap();
    let base = &rows[base_index];
    let best_row = &rows[best];
    let base_within_two_se =
        base.mean_utility >= best_row.mean_utility - 2.0 * best_row.std_error.max(base.std_error);
    Ok(PerturbationStudy {
        rows,
        base_index,
        base_within_two_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::extract_boundaries;
    use crate::params::{CostParams, MarketParams};
    use crate::problem::{GridConfig, ProblemSpec};
    use crate::solver::{solve, Contact};

    fn sim_params() -> ModelParams {
        ModelParams {
            market: MarketParams {
                alpha: 0.3,
                r: 0.01,
                sigma: 0.2,
                beta: 0.1,
                horizon: 2.0,
            },
            costs: CostParams { lambda: 0.1, mu: 0.1 },
            utility: Utility::LogWithConsumption,
        }
    }

    fn coarse_field() -> SolutionField {
        let spec = ProblemSpec::new(Variant::LogConsumptionHat, sim_params()).with_grid(
            GridConfig {
                x_min: None,
                x_max: 20.0,
                n_space: 401,
                n_time: 100,
            },
        );
        solve(&spec).unwrap()
    }

    /// Field pinned to the frictionless profile 1/(x+1) so the
    /// consumption rule collapses to W/g in closed form.
    fn frictionless_field(params: &ModelParams) -> SolutionField {
        let spec = ProblemSpec::new(Variant::LogConsumptionHat, *params).with_grid(GridConfig {
            x_min: None,
            x_max: 20.0,
            n_space: 101,
            n_time: 1,
        });
        let xs = spec.nodes();
        let form = spec.variant.formulation();
        let n = xs.len();
        let mut v = Vec::with_capacity(2 * n);
        for _ in 0..2 {
            for &x in &xs {
                v.push(form.upper_obstacle(x, &spec.params));
            }
        }
        let contact = vec![Contact::Upper; 2 * n];
        SolutionField::from_parts(spec, xs, vec![0.0, params.market.horizon], v, contact)
    }

    fn wide_curves(params: &ModelParams) -> BoundaryCurves {
        BoundaryCurves::from_original(
            vec![0.0],
            vec![-0.9 * (1.0 - params.costs.mu)],
            vec![f64::INFINITY],
            &params.costs,
            0.01,
            Vec::new(),
        )
    }

    #[test]
    fn deterministic_reruns_bit_identical() {
        let field = coarse_field();
        let curves = extract_boundaries(&field).unwrap();
        let params = sim_params();
        let sim = SimConfig {
            n_paths: 500,
            n_steps: 200,
            seed: 42,
            x0: 0.0,
            y0: 1.0,
        };
        let a = simulate_policy(&curves, &field, &params, &sim).unwrap();
        let b = simulate_policy(&curves, &field, &params, &sim).unwrap();
        assert_eq!(a.mean_utility.to_bits(), b.mean_utility.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert!(a.std_error > 0.0);
        let fr = a.region_fractions;
        assert!((fr.sell + fr.buy + fr.no_trade - 1.0).abs() < 1e-12);
    }

    #[test]
    fn different_seeds_differ() {
        let field = coarse_field();
        let curves = extract_boundaries(&field).unwrap();
        let params = sim_params();
        let sim = SimConfig {
            n_paths: 200,
            n_steps: 100,
            seed: 1,
            x0: 0.0,
            y0: 1.0,
        };
        let a = simulate_policy(&curves, &field, &params, &sim).unwrap();
        let b = simulate_policy(&curves, &field, &params, &SimConfig { seed: 2, ..sim }).unwrap();
        assert_ne!(a.mean_utility.to_bits(), b.mean_utility.to_bits());
    }

    #[test]
    fn reflection_lands_exactly_on_the_boundary() {
        let params = sim_params();
        let sell = -0.7f64;
        let buy = 0.5f64;
        let (x0, y0) = (2.0f64, 1.0f64); // ratio 2.0 > buy
        let bought = (x0 - buy * y0) / (buy + 1.0 + params.costs.lambda);
        let (x1, y1) = (x0 - (1.0 + params.costs.lambda) * bought, y0 + bought);
        assert!((x1 / y1 - buy).abs() < 1e-12);
        let (x0, y0) = (-0.8f64, 1.0f64); // ratio below sell
        let sold = (sell * y0 - x0) / (sell + 1.0 - params.costs.mu);
        let (x2, y2) = (x0 + (1.0 - params.costs.mu) * sold, y0 - sold);
        assert!((x2 / y2 - sell).abs() < 1e-12);
        assert!(y2 > 0.0 && y2 < y0);
    }

    #[test]
    fn degenerate_diffusion_matches_quadrature() {
        // all-bond start, vanishing volatility: the path is deterministic
        // and the utility equals the closed-form annuity-consumption flow
        // integrated by Simpson quadrature
        let mut params = sim_params();
        params.market.sigma = 1e-12;
        let field = frictionless_field(&params);
        let curves = wide_curves(&params);
        let sim = SimConfig {
            n_paths: 1,
            n_steps: 2_000_000,
            seed: 3,
            x0: 1.0,
            y0: 0.0,
        };
        let result = simulate_policy(&curves, &field, &params, &sim).unwrap();

        // X' = rX - X/g has the closed form
        // X(t) = x0 e^{rt} (e^{beta(T-t)} + beta - 1) / (e^{beta T} + beta - 1)
        let m = params.market;
        let k = m.beta - 1.0;
        let x_path = |t: f64| {
            (m.r * t).exp() * ((m.beta * (m.horizon - t)).exp() + k)
                / ((m.beta * m.horizon).exp() + k)
        };
        let integrand = |t: f64| {
            let g = g_tau(m.beta, m.horizon - t);
            (-m.beta * t).exp() * (x_path(t) / g).ln()
        };
        let n = 20_000usize;
        let h = m.horizon / n as f64;
        let mut acc = integrand(0.0) + integrand(m.horizon);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(i as f64 * h);
        }
        let integral = acc * h / 3.0;
        let expected = integral + (-m.beta * m.horizon).exp() * x_path(m.horizon).ln();
        assert!(
            (result.mean_utility - expected).abs() < 1e-6,
            "sim {} vs quadrature {}",
            result.mean_utility,
            expected
        );
        assert_eq!(result.std_error, 0.0);
    }

    #[test]
    fn perturbation_requires_base_and_rejects_crossers() {
        let field = coarse_field();
        let curves = extract_boundaries(&field).unwrap();
        let params = sim_params();
        let sim = SimConfig {
            n_paths: 50,
            n_steps: 50,
            seed: 5,
            x0: 0.0,
            y0: 1.0,
        };
        assert!(matches!(
            perturbation_study(&curves, &field, &params, &sim, &[(0.1, 0.1)]),
            Err(Error::Invalid(_))
        ));
        // a squeeze wide enough to cross the band is rejected
        let min_band = curves
            .buy_orig
            .iter()
            .zip(&curves.sell_orig)
            .filter(|(b, _)| b.is_finite())
            .map(|(b, s)| b - s)
            .fold(f64::INFINITY, f64::min);
        assert!(min_band.is_finite());
        assert!(matches!(
            curves.shifted(min_band, -min_band),
            Err(Error::InvalidShift { .. })
        ));
    }

    #[test]
    fn standard_error_scales_with_path_count() {
        let field = coarse_field();
        let curves = extract_boundaries(&field).unwrap();
        let params = sim_params();
        // enough steps that the one-step overshoot cannot reach the
        // solvency wall at these leveraged boundaries
        let base = SimConfig {
            n_paths: 12_500,
            n_steps: 500,
            seed: 17,
            x0: 0.0,
            y0: 1.0,
        };
        let se_1 = simulate_policy(&curves, &field, &params, &base).unwrap().std_error;
        let se_4 = simulate_policy(&curves, &field, &params, &SimConfig { n_paths: 50_000, ..base })
            .unwrap()
            .std_error;
        let se_16 = simulate_policy(&curves, &field, &params, &SimConfig { n_paths: 200_000, ..base })
            .unwrap()
            .std_error;
        for (ratio, label) in [(se_1 / se_4, "12.5k/50k"), (se_4 / se_16, "50k/200k")] {
            assert!(
                (ratio - 2.0).abs() < 0.4,
                "{label}: SE ratio {ratio} should be ~2 within 20%"
            );
        }
    }

    #[test]
    fn collapsed_band_is_strictly_worse() {
        // squeezing the no-trade band to a sliver forces constant churn
        // through the proportional costs
        let field = coarse_field();
        let curves = extract_boundaries(&field).unwrap();
        let params = sim_params();
        let sim = SimConfig {
            n_paths: 4_000,
            n_steps: 400,
            seed: 23,
            x0: 0.0,
            y0: 1.0,
        };
        let min_band = curves
            .buy_orig
            .iter()
            .zip(&curves.sell_orig)
            .filter(|(b, _)| b.is_finite())
            .map(|(b, s)| b - s)
            .fold(f64::INFINITY, f64::min);
        let squeeze = 0.48 * min_band;
        let base = simulate_policy(&curves, &field, &params, &sim).unwrap();
        let collapsed = simulate_policy(
            &curves.shifted(squeeze, -squeeze).unwrap(),
            &field,
            &params,
            &sim,
        )
        .unwrap();
        assert!(
            collapsed.mean_utility < base.mean_utility - 2.0 * base.std_error,
            "collapsed band {} vs base {} (se {})",
            collapsed.mean_utility,
            base.mean_utility,
            base.std_error
        );
        assert!(collapsed.trade_volume.sold + collapsed.trade_volume.bought
            > base.trade_volume.sold + base.trade_volume.bought);
    }

    #[test]
    fn common_random_numbers_zero_shift_identical() {
        let field = coarse_field();
        let curves = extract_boundaries(&field).unwrap();
        let params = sim_params();
        let sim = SimConfig {
            n_paths: 300,
            n_steps: 100,
            seed: 11,
            x0: 0.5,
            y0: 1.0,
        };
        let study =
            perturbation_study(&curves, &field, &params, &sim, &[(0.0, 0.0), (0.0, 0.0)]).unwrap();
        assert_eq!(
            study.rows[0].mean_utility.to_bits(),
            study.rows[1].mean_utility.to_bits()
        );
    }
}
