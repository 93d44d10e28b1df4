//! Per-field invariant suite. Runs the variant-appropriate subset of
//! structural checks on a solved field and returns one assertion per
//! invariant.

use crate::analysis::claims::{Assertion, ClaimId};
use crate::error::Result;
use crate::solver::{complementarity_residual, SolutionField};
use crate::variant::Variant;

/// Slack for the plain monotone-decrease check, relative to max(1, |v|).
pub const TOL_MONO_X: f64 = 1e-8;

/// Slack for the sharpened slope bound v_x <= -v^2, normalized by
/// (1 + |v|)^3 and scaled by the grid spacing (the centered difference
/// carries an O(h) error across the free boundary where v_xx jumps).
pub const TOL_VX_SQ_PER_H: f64 = 2.0;

/// Slack for x v_x + v >= 0, normalized by (1 + v^2), per unit spacing.
pub const TOL_XVX_PER_H: f64 = 2.0;

/// Slack for the time monotonicity check, relative to max(1, |v|).
pub const TOL_VT: f64 = 1e-8;

/// Normalized complementarity residual threshold.
pub const TOL_COMPLEMENTARITY: f64 = 1e-6;

pub fn run_invariant_suite(field: &SolutionField) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let name = field.spec.variant.name();
    let upper = field.upper_obstacle();
    let lower = field.lower_obstacle();
    let n = field.n_space();
    let h = field.spacing();

    // obstacle sandwich, exact: projection writes obstacle values directly
    let mut sandwich = f64::NEG_INFINITY;
    for j in 0..field.n_slices() {
        let v = field.slice(j);
        for i in 0..n {
            sandwich = sandwich.max(v[i] - upper[i]).max(lower[i] - v[i]);
        }
    }
    out.push(Assertion::checked(
        ClaimId::InvSandwich,
        format!("{name}: obstacle sandwich"),
        sandwich,
        0.0,
    ));

    // monotone decrease in x, plus the sharpened centered-difference
    // bound v_x <= -v^2
    let mut mono = f64::NEG_INFINITY;
    let mut slope = f64::NEG_INFINITY;
    for j in 0..field.n_slices() {
        let v = field.slice(j);
        for i in 0..n - 1 {
            mono = mono.max((v[i + 1] - v[i]) / v[i].abs().max(1.0));
        }
        for i in 1..n - 1 {
            let vx = (v[i + 1] - v[i - 1]) / (2.0 * h);
            let scale = (1.0 + v[i].abs()).powi(3);
            slope = slope.max((vx + v[i] * v[i]) / scale);
        }
    }
    out.push(Assertion::checked(
        ClaimId::InvMonoX,
        format!("{name}: v decreasing in x"),
        mono,
        TOL_MONO_X,
    ));
    out.push(Assertion::checked(
        ClaimId::InvMonoX,
        format!("{name}: v_x <= -v^2"),
        slope,
        TOL_VX_SQ_PER_H * h,
    ));

    // CRRA only: x v_x + v >= 0
    if field.spec.variant == Variant::CrraNoConsumption {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..field.n_slices() {
            let v = field.slice(j);
            for i in 1..n - 1 {
                let vx = (v[i + 1] - v[i - 1]) / (2.0 * h);
                let scale = 1.0 + v[i] * v[i];
                worst = worst.max(-(field.xs[i] * vx + v[i]) / scale);
            }
        }
        out.push(Assertion::checked(
            ClaimId::InvXvx,
            format!("{name}: x v_x + v >= 0"),
            worst,
            TOL_XVX_PER_H * h,
        ));
    }

    // time monotonicity only holds without consumption
    match field.spec.variant {
        Variant::CrraNoConsumption => {
            let mut worst = f64::NEG_INFINITY;
            for j in 0..field.n_slices() - 1 {
                let now = field.slice(j);
                let later = field.slice(j + 1);
                for i in 0..n {
                    worst = worst.max((now[i] - later[i]) / now[i].abs().max(1.0));
                }
            }
            out.push(Assertion::checked(
                ClaimId::InvVt,
                format!("{name}: v nondecreasing in t"),
                worst,
                TOL_VT,
            ));
        }
        Variant::LogConsumptionHat => {
            out.push(Assertion::skipped(
                ClaimId::InvVt,
                format!("{name}: not applicable with consumption"),
            ));
        }
        Variant::InfiniteHorizonLog => {}
    }

    let residual = complementarity_residual(field)?;
    out.push(Assertion::checked(
        ClaimId::InvCompl,
        format!("{name}: complementarity residual"),
        residual.max_violation,
        TOL_COMPLEMENTARITY,
    ));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CostParams, MarketParams, ModelParams, Utility};
    use crate::problem::{GridConfig, ProblemSpec};
    use crate::solver::solve;

    fn coarse(variant: Variant) -> SolutionField {
        let utility = match variant {
            Variant::CrraNoConsumption => Utility::CrraNoConsumption { gamma: -1.0 },
            _ => Utility::LogWithConsumption,
        };
        let spec = ProblemSpec::new(
            variant,
            ModelParams {
                market: MarketParams {
                    alpha: 0.3,
                    r: 0.01,
                    sigma: 0.2,
                    beta: 0.5,
                    horizon: 0.5,
                },
                costs: CostParams { lambda: 0.1, mu: 0.1 },
                utility,
            },
        )
        .with_grid(GridConfig {
            x_min: None,
            x_max: 20.0,
            n_space: 201,
            n_time: 50,
        });
        solve(&spec).unwrap()
    }

    #[test]
    fn all_variants_pass_their_suites() {
        for variant in [
            Variant::LogConsumptionHat,
            Variant::CrraNoConsumption,
            Variant::InfiniteHorizonLog,
        ] {
            let field = coarse(variant);
            let assertions = run_invariant_suite(&field).unwrap();
            for a in &assertions {
                assert!(
                    a.pass,
                    "{} [{}] worst {} tol {}",
                    a.claim, a.label, a.worst, a.tolerance
                );
            }
            // consumption variant skips the time check, CRRA runs it
            let vt = assertions.iter().find(|a| a.claim == ClaimId::InvVt);
            match variant {
                Variant::LogConsumptionHat => assert!(vt.unwrap().skipped),
                Variant::CrraNoConsumption => assert!(!vt.unwrap().skipped),
                Variant::InfiniteHorizonLog => assert!(vt.is_none()),
            }
            let xvx = assertions.iter().any(|a| a.claim == ClaimId::InvXvx);
            assert_eq!(xvx, variant == Variant::CrraNoConsumption);
        }
    }

    #[test]
    fn forged_field_fails_the_suite() {
        let field = coarse(Variant::LogConsumptionHat);
        let upper = field.upper_obstacle();
        let n = field.n_space();
        let mut v = field.raw_values().to_vec();
        // overwrite the interior with the upper obstacle at t < T
        for j in 0..field.n_slices() - 1 {
            v[j * n..(j + 1) * n].copy_from_slice(&upper);
        }
        let forged = SolutionField::from_parts(
            field.spec,
            field.xs.clone(),
            field.times.clone(),
            v,
            field.raw_contact().to_vec(),
        );
        let assertions = run_invariant_suite(&forged).unwrap();
        assert!(assertions.iter().any(|a| !a.pass));
    }
}
