//! Deliberately simple explicit-in-time cross-check solver.
//!
//! The oracle marches the same obstacle problems with explicit Euler
//! steps followed by direct projection onto the obstacle interval, on a
//! coarse grid, with the time step chosen from the positivity bound of
//! the explicit update. Its operator coefficients are written out
//! independently here; it shares only the obstacle formulas with the
//! implicit solver, so a bug in one path is unlikely to hide in the
//! other. It records slices on the same time grid as the spec so fields
//! can be compared node-for-node.
//!
//! Coarse grids only: it exists for cross-checks, not production sweeps.

use crate::error::{Error, Result};
use crate::params::{g_tau, ModelParams, Utility};
use crate::problem::ProblemSpec;
use crate::solver::{Contact, SolutionField, CONTACT_SLACK};
use crate::variant::Variant;

/// Guard against accidentally running the explicit scheme on a grid
/// where its step bound would make it crawl.
pub const MAX_ORACLE_NODES: usize = 401;

/// Safety factor applied to the explicit stability bound.
pub const STABILITY_SAFETY: f64 = 0.9;

/// First-order coefficients of -v_t = rhs(v) for the explicit update,
/// written independently of the implicit solver's stencil code.
struct ExplicitCoeffs {
    diffusion: f64,
    drift_a: f64,
    drift_b: f64,
    reaction: f64,
}

fn coeffs(variant: Variant, p: &ModelParams, x: f64, t: f64, v_here: f64) -> ExplicitCoeffs {
    let m = &p.market;
    let s2 = m.sigma * m.sigma;
    let prem = m.alpha - m.r;
    match variant {
        Variant::LogConsumptionHat => {
            let g = g_tau(m.beta, m.horizon - t);
            ExplicitCoeffs {
                diffusion: 0.5 * s2 * x * x,
                drift_a: (prem - 2.0 * s2) * x,
                drift_b: 1.0 / (g * v_here),
                reaction: (prem - s2) + 1.0 / g,
            }
        }
        Variant::InfiniteHorizonLog => ExplicitCoeffs {
            diffusion: 0.5 * s2 * x * x,
            drift_a: (prem - 2.0 * s2) * x,
            drift_b: m.beta / v_here,
            reaction: (prem - s2) + m.beta,
        },
        Variant::CrraNoConsumption => {
            let gamma = match p.utility {
                Utility::CrraNoConsumption { gamma } => gamma,
                _ => 0.0,
            };
            ExplicitCoeffs {
                diffusion: 0.5 * s2 * x * x,
                drift_a: (prem - (2.0 - gamma) * s2) * x,
                drift_b: -gamma * s2 * x * x * v_here,
                reaction: (prem - (1.0 - gamma) * s2) - gamma * s2 * x * v_here,
            }
        }
    }
}

/// Largest explicit step keeping the update a positive combination of
/// neighbor values, evaluated against the worst node of a slice.
fn stability_bound(variant: Variant, p: &ModelParams, xs: &[f64], h: f64, t: f64, v: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate().take(xs.len() - 1).skip(1) {
        let c = coeffs(variant, p, x, t, v[i]);
        let denom =
            2.0 * c.diffusion / (h * h) + (c.drift_a.abs() + c.drift_b.abs()) / h + c.reaction.abs();
        if denom > 0.0 {
            worst = worst.min(1.0 / denom);
        }
    }
    worst
}

/// One explicit step of length dt backward in time, then projection.
#[allow(clippy::too_many_arguments)]
fn explicit_step(
    variant: Variant,
    p: &ModelParams,
    xs: &[f64],
    h: f64,
    t_known: f64,
    dt: f64,
    v: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n];
    out[0] = upper[0];
    out[n - 1] = lower[n - 1];
    for i in 1..n - 1 {
        let x = xs[i];
        let c = coeffs(variant, p, x, t_known, v[i]);
        let v_xx = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        // central differencing up to the cell Peclet limit, upwind for the
        // remainder, mirroring the positivity cap of the implicit scheme
        let advect = |a: f64| {
            let weight = if a == 0.0 {
                1.0
            } else {
                (2.0 * c.diffusion / (a.abs() * h)).min(1.0)
            };
            let central = weight * a * (v[i + 1] - v[i - 1]) / (2.0 * h);
            let rest = a - weight * a;
            let upwind = if rest >= 0.0 {
                rest * (v[i] - v[i - 1]) / h
            } else {
                rest * (v[i + 1] - v[i]) / h
            };
            central + upwind
        };
        // steady residual F(v); in time-to-go the evolution is v_tau = -F(v)
        let f = -c.diffusion * v_xx + advect(c.drift_a) + advect(c.drift_b) + c.reaction * v[i];
        out[i] = (v[i] - dt * f).clamp(lower[i], upper[i]);
    }
    out
}

fn flag(v: &[f64], lower: &[f64], upper: &[f64]) -> Vec<Contact> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 || v[i] >= upper[i] - CONTACT_SLACK {
                Contact::Upper
            } else if i == n - 1 || v[i] <= lower[i] + CONTACT_SLACK {
                Contact::Lower
            } else {
                Contact::Interior
            }
        })
        .collect()
}

/// Solve the spec's obstacle problem with the explicit projection scheme,
/// recording slices on the spec's own time grid.
pub fn oracle_solve(spec: &ProblemSpec) -> Result<SolutionField> {
    let spec = spec.validated()?;
    if spec.grid.n_space > MAX_ORACLE_NODES {
        return Err(Error::OracleGridTooFine {
            n_space: spec.grid.n_space,
            max: MAX_ORACLE_NODES,
        });
    }
    let form = spec.variant.formulation();
    if form.stationary() {
        return Err(Error::OracleUnsupportedVariant);
    }

    let xs = spec.nodes();
    let h = spec.spacing();
    let n = xs.len();
    let lower: Vec<f64> = xs.iter().map(|&x| form.lower_obstacle(x, &spec.params)).collect();
    let upper: Vec<f64> = xs.iter().map(|&x| form.upper_obstacle(x, &spec.params)).collect();

    let n_time = spec.grid.n_time;
    let dt_record = spec.dt();
    let times: Vec<f64> = (0..=n_time).map(|j| j as f64 * dt_record).collect();

    let mut v_all = vec![0.0; n * (n_time + 1)];
    let mut contact = vec![Contact::Upper; n * (n_time + 1)];
    v_all[n_time * n..].copy_from_slice(&upper);

    let mut current = upper.clone();
    for j in (0..n_time).rev() {
        // substep each recording interval at the stability-bounded step
        let t_hi = times[j + 1];
        let bound = STABILITY_SAFETY * stability_bound(spec.variant, &spec.params, &xs, h, t_hi, &current);
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::UnstableExplicitStepBound { bound });
        }
        let substeps = (dt_record / bound).ceil().max(1.0) as usize;
        let dt = dt_record / substeps as f64;
        for k in 0..substeps {
            let t_known = t_hi - k as f64 * dt;
            current = explicit_step(
                spec.variant,
                &spec.params,
                &xs,
                h,
                t_known,
                dt,
                &current,
                &lower,
                &upper,
            );
        }
        v_all[j * n..(j + 1) * n].copy_from_slice(&current);
        contact[j * n..(j + 1) * n].copy_from_slice(&flag(&current, &lower, &upper));
    }

    Ok(SolutionField::from_parts(spec, xs, times, v_all, contact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CostParams, MarketParams, ModelParams, Utility};
    use crate::problem::GridConfig;

    fn coarse_spec() -> ProblemSpec {
        ProblemSpec::new(
            Variant::LogConsumptionHat,
            ModelParams {
                market: MarketParams {
                    alpha: 0.3,
                    r: 0.01,
                    sigma: 0.2,
                    beta: 0.1,
                    horizon: 0.5,
                },
                costs: CostParams::symmetric_for_theta(1.2),
                utility: Utility::LogWithConsumption,
            },
        )
        .with_grid(GridConfig {
            x_min: None,
            x_max: 20.0,
            n_space: 201,
            n_time: 50,
        })
    }

    #[test]
    fn terminal_slice_is_upper_obstacle() {
        let field = oracle_solve(&coarse_spec()).unwrap();
        let upper = field.upper_obstacle();
        let t = field.terminal_index().unwrap();
        for i in 0..field.n_space() {
            assert_eq!(field.value(t, i), upper[i]);
        }
    }

    #[test]
    fn obstacle_sandwich_exact() {
        let field = oracle_solve(&coarse_spec()).unwrap();
        let upper = field.upper_obstacle();
        let lower = field.lower_obstacle();
        for j in 0..field.n_slices() {
            let s = field.slice(j);
            for i in 0..field.n_space() {
                assert!(s[i] <= upper[i] && s[i] >= lower[i]);
            }
        }
    }

    #[test]
    fn fine_grid_guard() {
        let mut spec = coarse_spec();
        spec.grid.n_space = 2001;
        assert!(matches!(
            oracle_solve(&spec),
            Err(Error::OracleGridTooFine { .. })
        ));
    }

    #[test]
    fn stationary_not_supported() {
        let mut spec = coarse_spec();
        spec.variant = Variant::InfiniteHorizonLog;
        assert!(matches!(
            oracle_solve(&spec),
            Err(Error::OracleUnsupportedVariant)
        ));
    }
}
