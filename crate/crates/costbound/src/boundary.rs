//! Free-boundary extraction and the coordinate maps between bid-price
//! ("hat"), original and cost-adjusted boundaries.
//!
//! Per slice, the sell boundary is the right edge of the upper contact
//! set and the buy boundary the left edge of the lower contact set, both
//! refined to sub-cell accuracy by a secant of the obstacle gap through
//! the first two interior nodes. A buy boundary beyond the grid is the
//! `+inf` sentinel: the lower contact set can genuinely be empty near
//! the horizon, and a finite cap would corrupt monotonicity sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::CostParams;
use crate::solver::{Contact, SolutionField};

/// Sentinel for a buy boundary beyond the truncated grid.
pub const BUY_INFINITE: f64 = f64::INFINITY;

/// Contact intervals hugging the truncation within this many cells are
/// treated as closure artifacts: the buy side degrades to the sentinel
/// and the slice is flagged so the caller can enlarge the grid.
pub const TRUNCATION_MARGIN_CELLS: usize = 3;

/// Fraction of the domain adjacent to the right truncation inside which
/// an extracted buy boundary is not trusted. The operator degenerates at
/// large x (tiny residuals, diffusion growing like x^2), so the Dirichlet
/// closure influences the solution over a length proportional to x
/// rather than a few cells.
pub const RIGHT_MARGIN_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationFlag {
    pub slice: usize,
    pub time: f64,
    pub side: TruncationSide,
}

/// Sell and buy boundaries per time slice, in all three coordinate
/// systems. `sell_adjusted` divides the original sell boundary by
/// (1 - mu) and `buy_adjusted` divides the buy boundary by (1 + lambda);
/// in the bid-price coordinate these equal `sell_hat` and `buy_hat/theta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryCurves {
    pub times: Vec<f64>,
    pub sell_hat: Vec<f64>,
    pub buy_hat: Vec<f64>,
    pub sell_orig: Vec<f64>,
    pub buy_orig: Vec<f64>,
    pub sell_adjusted: Vec<f64>,
    pub buy_adjusted: Vec<f64>,
    /// Cost rates the curves were extracted under.
    pub costs: CostParams,
    /// Grid spacing of the source field, for tolerance arithmetic.
    pub h: f64,
    pub truncation_flags: Vec<TruncationFlag>,
}

impl BoundaryCurves {
    /// Build all representations from bid-price-coordinate boundaries.
    pub fn from_hat(
        times: Vec<f64>,
        sell_hat: Vec<f64>,
        buy_hat: Vec<f64>,
        costs: &CostParams,
        h: f64,
        truncation_flags: Vec<TruncationFlag>,
    ) -> Self {
        let one_minus_mu = 1.0 - costs.mu;
        let theta = costs.theta();
        let sell_orig: Vec<f64> = sell_hat.iter().map(|s| s * one_minus_mu).collect();
        let buy_orig: Vec<f64> = buy_hat.iter().map(|b| b * one_minus_mu).collect();
        let sell_adjusted = sell_hat.clone();
        let buy_adjusted: Vec<f64> = buy_hat.iter().map(|b| b / theta).collect();
        BoundaryCurves {
            times,
            sell_hat,
            buy_hat,
            sell_orig,
            buy_orig,
            sell_adjusted,
            buy_adjusted,
            costs: *costs,
            h,
            truncation_flags,
        }
    }

    /// Build all representations from original-coordinate boundaries.
    pub fn from_original(
        times: Vec<f64>,
        sell_orig: Vec<f64>,
        buy_orig: Vec<f64>,
        costs: &CostParams,
        h: f64,
        truncation_flags: Vec<TruncationFlag>,
    ) -> Self {
        let one_minus_mu = 1.0 - costs.mu;
        let one_plus_lambda = 1.0 + costs.lambda;
        let sell_hat: Vec<f64> = sell_orig.iter().map(|s| s / one_minus_mu).collect();
        let buy_hat: Vec<f64> = buy_orig.iter().map(|b| b / one_minus_mu).collect();
        let sell_adjusted = sell_hat.clone();
        let buy_adjusted: Vec<f64> = buy_orig.iter().map(|b| b / one_plus_lambda).collect();
        BoundaryCurves {
            times,
            sell_hat,
            buy_hat,
            sell_orig,
            buy_orig,
            sell_adjusted,
            buy_adjusted,
            costs: *costs,
            h,
            truncation_flags,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Apply per-curve shifts in the original coordinate, preserving the
    /// sentinel. Fails if any slice would end up with sell >= buy.
    pub fn shifted(&self, sell_delta: f64, buy_delta: f64) -> Result<BoundaryCurves> {
        let mut sell = self.sell_orig.clone();
        let mut buy = self.buy_orig.clone();
        for i in 0..sell.len() {
            sell[i] += sell_delta;
            if buy[i].is_finite() {
                buy[i] += buy_delta;
            }
            if sell[i] >= buy[i] {
                return Err(Error::InvalidShift {
                    shift: (sell_delta, buy_delta),
                });
            }
        }
        Ok(BoundaryCurves::from_original(
            self.times.clone(),
            sell,
            buy,
            &self.costs,
            self.h,
            self.truncation_flags.clone(),
        ))
    }

    /// Raise the sell boundary onto `floor` wherever it dips below,
    /// rebuilding the derived representations.
    pub fn with_sell_floor(&self, floor: f64) -> BoundaryCurves {
        let sell: Vec<f64> = self.sell_orig.iter().map(|s| s.max(floor)).collect();
        BoundaryCurves::from_original(
            self.times.clone(),
            sell,
            self.buy_orig.clone(),
            &self.costs,
            self.h,
            self.truncation_flags.clone(),
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "t,sell_hat,buy_hat,sell_orig,buy_orig,sell_adjusted,buy_adjusted"
        )?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.times[i],
                self.sell_hat[i],
                self.buy_hat[i],
                self.sell_orig[i],
                self.buy_orig[i],
                self.sell_adjusted[i],
                self.buy_adjusted[i]
            )?;
        }
        Ok(())
    }
}

/// Re-express raw bid-price-coordinate boundaries in all coordinate
/// systems: original = (1 - mu) * hat, adjusted sell = hat,
/// adjusted buy = hat / theta. The sentinel propagates.
pub fn to_original(
    times: Vec<f64>,
    sell_hat: Vec<f64>,
    buy_hat: Vec<f64>,
    costs: &CostParams,
    h: f64,
) -> BoundaryCurves {
    BoundaryCurves::from_hat(times, sell_hat, buy_hat, costs, h, Vec::new())
}

/// Raw boundary pair of one slice before coordinate mapping.
struct SliceBoundaries {
    sell: f64,
    buy: f64,
    left_flag: bool,
    right_flag: bool,
}

/// Fraction of the local obstacle separation under which a node between
/// two exact-contact runs counts as hovering on the obstacle. Projected
/// SOR converges on updates, not residuals, so deep inside a trade
/// region the iterate can float a few orders above `psor_tol` without
/// registering exact contact; observed hover stays well below 1% of the
/// obstacle separation while genuine no-trade nodes sit far above it.
const HOVER_FRACTION: f64 = 0.2;

/// Maximal consecutive index runs where `hit` holds within `range`.
fn runs_of(range: std::ops::Range<usize>, hit: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for i in range {
        if hit(i) {
            current = match current {
                Some((s, _)) => Some((s, i)),
                None => Some((i, i)),
            };
        } else if let Some(run) = current.take() {
            runs.push(run);
        }
    }
    if let Some(run) = current {
        runs.push(run);
    }
    runs
}

/// Merge exact-contact runs separated only by hover nodes, then reduce
/// to a single interval, forgiving one stray single-node run (projected
/// SOR can misflag one node at the free boundary at tight tolerances).
/// Anything else is a solver failure.
fn resolve_contact_interval(
    runs: Vec<(usize, usize)>,
    hover: impl Fn(usize) -> bool,
    slice: usize,
) -> Result<Option<(usize, usize)>> {
    // merge through hover-only holes
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(prev) if ((prev.1 + 1)..run.0).all(&hover) => prev.1 = run.1,
            _ => merged.push(run),
        }
    }
    // forgive at most one stray single-node run, but never the only run
    if merged.len() > 1 {
        if let Some(pos) = merged.iter().position(|r| r.0 == r.1) {
            merged.remove(pos);
        }
    }
    match merged.len() {
        0 => Ok(None),
        1 => Ok(Some(merged[0])),
        _ => {
            let largest = merged.iter().map(|r| r.1 - r.0 + 1).max().unwrap_or(0);
            let total: usize = merged.iter().map(|r| r.1 - r.0 + 1).sum();
            Err(Error::NonIntervalContactSet {
                slice,
                defects: total - largest,
            })
        }
    }
}

fn slice_boundaries(
    field: &SolutionField,
    j: usize,
    upper: &[f64],
    lower: &[f64],
) -> Result<SliceBoundaries> {
    let n = field.n_space();
    let xs = &field.xs;
    let h = field.spacing();
    let v = field.slice(j);
    let flags = field.contact_slice(j);

    let hover_upper = |i: usize| upper[i] - v[i] <= HOVER_FRACTION * (upper[i] - lower[i]);
    let hover_lower = |i: usize| v[i] - lower[i] <= HOVER_FRACTION * (upper[i] - lower[i]);

    // sell region: exact upper-contact runs anchored at the left closure
    // node, merged across hover holes
    let upper_runs = runs_of(0..n - 1, |i| flags[i] == Contact::Upper);
    let upper_run = resolve_contact_interval(upper_runs, hover_upper, j)?
        .filter(|run| run.0 == 0)
        .ok_or(Error::NonIntervalContactSet { slice: j, defects: n })?;
    let last_upper = upper_run.1;
    if last_upper + TRUNCATION_MARGIN_CELLS + 1 > n - 1 {
        // sell contact reaching the right margin means the grid cannot
        // hold this problem at all
        return Err(Error::NonIntervalContactSet { slice: j, defects: n });
    }

    // buy region: exact lower-contact runs among the interior nodes; the
    // closure node n-1 is pinned to the lower obstacle and does not count
    // as evidence
    let lower_runs = runs_of(1..n - 1, |i| flags[i] == Contact::Lower);
    let lower_run = resolve_contact_interval(lower_runs, hover_lower, j)?;
    if let Some(run) = lower_run {
        if run.0 <= last_upper {
            return Err(Error::ContactSetsOverlap { slice: j });
        }
    }

    // sub-cell refinement of the sell boundary: secant of the gap
    // (upper - v) through the first two interior nodes
    let sell = {
        let k = last_upper;
        let fallback = xs[k] + 0.5 * h;
        if k + 3 <= n {
            let d1 = upper[k + 1] - v[k + 1];
            let d2 = upper[k + 2] - v[k + 2];
            if d2 > d1 && d1 > 0.0 {
                (xs[k + 1] - d1 * h / (d2 - d1)).clamp(xs[k], xs[k + 1])
            } else {
                fallback
            }
        } else {
            fallback
        }
    };

    let right_margin = (n - 1)
        .saturating_sub(((n as f64) * RIGHT_MARGIN_FRACTION) as usize)
        .min(n - 1 - TRUNCATION_MARGIN_CELLS);
    let (buy, right_flag) = match lower_run {
        None => (BUY_INFINITE, false),
        Some((m, _)) => {
            if m >= right_margin {
                // contact sliver against the closure node: indistinguishable
                // from a truncation artifact, degrade to the sentinel
                (BUY_INFINITE, true)
            } else {
                let fallback = xs[m] - 0.5 * h;
                let buy = if m >= 2 {
                    let e1 = v[m - 1] - lower[m - 1];
                    let e2 = v[m - 2] - lower[m - 2];
                    if e2 > e1 && e1 > 0.0 {
                        (xs[m - 1] + e1 * h / (e2 - e1)).clamp(xs[m - 1], xs[m])
                    } else {
                        fallback
                    }
                } else {
                    fallback
                };
                (buy, false)
            }
        }
    };

    let sell_left_flag = last_upper < TRUNCATION_MARGIN_CELLS;
    Ok(SliceBoundaries {
        sell,
        buy,
        left_flag: sell_left_flag,
        right_flag,
    })
}

type RawCurves = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<TruncationFlag>);

fn extract_raw(field: &SolutionField) -> Result<RawCurves> {
    let upper = field.upper_obstacle();
    let lower = field.lower_obstacle();
    let n_extract = match field.terminal_index() {
        Some(t) => t,
        None => field.n_slices(),
    };
    let mut times = Vec::with_capacity(n_extract);
    let mut sell = Vec::with_capacity(n_extract);
    let mut buy = Vec::with_capacity(n_extract);
    let mut flags = Vec::new();
    for j in 0..n_extract {
        let sb = slice_boundaries(field, j, &upper, &lower)?;
        times.push(field.times[j]);
        sell.push(sb.sell);
        buy.push(sb.buy);
        if sb.left_flag {
            flags.push(TruncationFlag {
                slice: j,
                time: field.times[j],
                side: TruncationSide::Left,
            });
        }
        if sb.right_flag {
            flags.push(TruncationFlag {
                slice: j,
                time: field.times[j],
                side: TruncationSide::Right,
            });
        }
    }
    Ok((times, sell, buy, flags))
}

/// Extract boundaries from a field solved in the bid-price coordinate
/// (log-consumption and stationary variants). Slices at t < T only.
pub fn extract_boundaries(field: &SolutionField) -> Result<BoundaryCurves> {
    let form = field.spec.variant.formulation();
    if form.original_coordinates() {
        return Err(Error::VariantMismatch {
            expected: "a bid-price-coordinate variant".into(),
            found: form.name().into(),
        });
    }
    let (times, sell, buy, flags) = extract_raw(field)?;
    Ok(BoundaryCurves::from_hat(
        times,
        sell,
        buy,
        &field.spec.params.costs,
        field.spacing(),
        flags,
    ))
}

/// Extract boundaries from a CRRA field, which lives in original
/// coordinates; adjusted versions use the same division rules.
pub fn crra_boundaries(field: &SolutionField) -> Result<BoundaryCurves> {
    let form = field.spec.variant.formulation();
    if !form.original_coordinates() {
        return Err(Error::VariantMismatch {
            expected: "crra_no_consumption".into(),
            found: form.name().into(),
        });
    }
    let (times, sell, buy, flags) = extract_raw(field)?;
    Ok(BoundaryCurves::from_original(
        times,
        sell,
        buy,
        &field.spec.params.costs,
        field.spacing(),
        flags,
    ))
}

/// Boundaries of whichever coordinate system the field was solved in.
pub fn boundaries(field: &SolutionField) -> Result<BoundaryCurves> {
    if field.spec.variant.formulation().original_coordinates() {
        crra_boundaries(field)
    } else {
        extract_boundaries(field)
    }
}

/// Raw boundary pair of a single slice, in the field's own coordinate
/// system. The terminal slice holds data, not an equation, so asking for
/// its boundaries is an error.
pub fn boundaries_at(field: &SolutionField, slice: usize) -> Result<(f64, f64)> {
    if field.terminal_index() == Some(slice) {
        return Err(Error::TerminalSlice);
    }
    let upper = field.upper_obstacle();
    let lower = field.lower_obstacle();
    let sb = slice_boundaries(field, slice, &upper, &lower)?;
    Ok((sb.sell, sb.buy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CostParams, MarketParams, ModelParams, Utility};
    use crate::problem::{GridConfig, ProblemSpec};
    use crate::solver::Contact;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn synthetic_field(crossing: f64, with_lower_contact: Option<f64>) -> SolutionField {
        // v equals the upper obstacle left of `crossing`, then falls off
        // linearly; optionally touches the lower obstacle right of the
        // second threshold
        let params = ModelParams {
            market: MarketParams {
                alpha: 0.3,
                r: 0.01,
                sigma: 0.2,
                beta: 0.1,
                horizon: 1.0,
            },
            costs: CostParams { lambda: 0.1, mu: 0.1 },
            utility: Utility::LogWithConsumption,
        };
        let spec = ProblemSpec::new(crate::variant::Variant::LogConsumptionHat, params)
            .with_grid(GridConfig {
                x_min: Some(-0.8),
                x_max: 4.0,
                n_space: 241,
                n_time: 1,
            });
        let form = spec.variant.formulation();
        let xs = spec.nodes();
        let n = xs.len();
        let mut v = Vec::with_capacity(2 * n);
        let mut contact = Vec::with_capacity(2 * n);
        for &x in &xs {
            let upper = form.upper_obstacle(x, &spec.params);
            let lower = form.lower_obstacle(x, &spec.params);
            // interpolate between the obstacles: pinned to the upper one
            // left of `crossing`, then detaching; the taper either decays
            // without reaching the lower obstacle or hits it linearly
            let weight = if x <= crossing {
                1.0
            } else {
                match with_lower_contact {
                    None => (-2.0 * (x - crossing)).exp(),
                    Some(b) => (1.0 - (x - crossing) / (b - crossing)).max(0.0),
                }
            };
            let value = (lower + (upper - lower) * weight).clamp(lower, upper);
            contact.push(if value >= upper - 1e-12 {
                Contact::Upper
            } else if value <= lower + 1e-12 {
                Contact::Lower
            } else {
                Contact::Interior
            });
            v.push(value);
        }
        // duplicate as the terminal slice (all upper)
        for &x in &xs {
            v.push(form.upper_obstacle(x, &spec.params));
            contact.push(Contact::Upper);
        }
        SolutionField::from_parts(spec, xs, vec![0.0, 1.0], v, contact)
    }

    #[test]
    fn synthetic_crossing_recovered_within_a_cell() {
        let field = synthetic_field(0.5, None);
        let curves = extract_boundaries(&field).unwrap();
        assert_eq!(curves.len(), 1);
        let h = curves.h;
        assert!((curves.sell_hat[0] - 0.5).abs() <= h, "sell {}", curves.sell_hat[0]);
        assert_eq!(curves.buy_hat[0], BUY_INFINITE);
        assert_eq!(curves.buy_orig[0], BUY_INFINITE);
        assert_eq!(curves.buy_adjusted[0], BUY_INFINITE);
    }

    #[test]
    fn synthetic_lower_contact_recovered() {
        let field = synthetic_field(0.0, Some(2.0));
        let curves = extract_boundaries(&field).unwrap();
        let h = curves.h;
        assert!((curves.buy_hat[0] - 2.0).abs() <= 2.0 * h, "buy {}", curves.buy_hat[0]);
        assert!(curves.sell_hat[0] < curves.buy_hat[0]);
    }

    #[test]
    fn coordinate_maps_match_reference_values() {
        let costs = CostParams { lambda: 0.1, mu: 0.1 };
        let curves = to_original(vec![0.0], vec![-0.5], vec![1.0], &costs, 0.01);
        assert_relative_eq!(curves.sell_orig[0], -0.45, max_relative = 1e-14);
        assert_relative_eq!(curves.sell_adjusted[0], -0.5, max_relative = 1e-14);

        // theta = 2 via mu = 0.2, lambda = 0.6: buy_hat = 3 => orig 2.4, adjusted 1.5
        let costs = CostParams { lambda: 0.6, mu: 0.2 };
        assert_relative_eq!(costs.theta(), 2.0, max_relative = 1e-14);
        let curves = to_original(vec![0.0], vec![-0.5], vec![3.0], &costs, 0.01);
        assert_relative_eq!(curves.buy_orig[0], 2.4, max_relative = 1e-14);
        assert_relative_eq!(curves.buy_adjusted[0], 1.5, max_relative = 1e-14);
    }

    #[test]
    fn terminal_slice_not_extracted() {
        let field = synthetic_field(0.5, None);
        let curves = extract_boundaries(&field).unwrap();
        assert_eq!(curves.len(), field.n_slices() - 1);
        assert!(boundaries_at(&field, 0).is_ok());
        assert!(matches!(
            boundaries_at(&field, field.n_slices() - 1),
            Err(Error::TerminalSlice)
        ));
    }

    #[test]
    fn variant_mismatch_rejected() {
        let field = synthetic_field(0.5, None);
        assert!(matches!(
            crra_boundaries(&field),
            Err(Error::VariantMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn hat_to_original_identities(
            lambda in 0.01f64..1.5,
            mu in 0.0f64..0.8,
            sell in -0.99f64..0.5,
            buy_gap in 0.01f64..10.0,
        ) {
            let costs = CostParams { lambda, mu };
            let buy = sell + buy_gap;
            let curves = to_original(vec![0.0], vec![sell], vec![buy], &costs, 0.01);
            let theta = costs.theta();
            // the hat values are carried, so the round trip is bit-exact
            prop_assert_eq!(curves.sell_hat[0], sell);
            prop_assert_eq!(curves.buy_hat[0], buy);
            // identities: adjusted sell == hat sell, adjusted buy == hat buy / theta
            prop_assert_eq!(curves.sell_adjusted[0], sell);
            prop_assert_eq!(curves.buy_adjusted[0], buy / theta);
            // re-dividing the original coordinate recovers hat to rounding
            prop_assert!((curves.sell_orig[0] / (1.0 - mu) - sell).abs() <= 1e-12 * sell.abs().max(1.0));
            prop_assert!((curves.buy_orig[0] / (1.0 - mu) - buy).abs() <= 1e-12 * buy.abs().max(1.0));
        }
    }
}
