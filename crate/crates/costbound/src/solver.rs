//! Implicit-in-time solver for the double obstacle problems.
//!
//! Each backward step discretizes the frozen-coefficient operator with
//! central differences for the diffusion term and per-term upwind
//! differences for the first-order terms, which keeps the system an
//! M-matrix, and solves the resulting linear complementarity problem by
//! projected SOR onto the obstacle interval. The mild nonlinearity (the
//! 1/v inside the consumption term, one factor of v in each CRRA
//! quadratic term) is handled by Picard iteration: coefficients are
//! frozen at the previous iterate and the step is re-solved until the
//! iterates settle.
//!
//! The stationary formulation reuses the same stepper as a pseudo-time
//! relaxation from the upper obstacle until the slice stops moving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::variant::Formulation;

/// Absolute slack under which a projected node counts as touching an
/// obstacle. Projection writes the obstacle value bit-for-bit, so this
/// only needs to absorb representation noise.
pub const CONTACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contact {
    Lower,
    Interior,
    Upper,
}

/// Solution values on the space-time grid with per-node contact flags.
///
/// Slices are stored in increasing time order; for parabolic variants the
/// last slice is the terminal condition (upper obstacle, all `Upper`).
/// Stationary solves produce a single slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionField {
    pub spec: ProblemSpec,
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    v: Vec<f64>,
    contact: Vec<Contact>,
}

impl SolutionField {
    pub fn n_space(&self) -> usize {
        self.xs.len()
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing()
    }

    pub fn is_stationary(&self) -> bool {
        self.spec.variant.formulation().stationary()
    }

    /// Index of the terminal slice, `None` for stationary fields.
    pub fn terminal_index(&self) -> Option<usize> {
        if self.is_stationary() {
            None
        } else {
            Some(self.n_slices() - 1)
        }
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let n = self.n_space();
        &self.v[j * n..(j + 1) * n]
    }

    pub fn contact_slice(&self, j: usize) -> &[Contact] {
        let n = self.n_space();
        &self.contact[j * n..(j + 1) * n]
    }

    pub fn value(&self, j: usize, i: usize) -> f64 {
        self.v[j * self.n_space() + i]
    }

    pub fn upper_obstacle(&self) -> Vec<f64> {
        let form = self.spec.variant.formulation();
        self.xs.iter().map(|&x| form.upper_obstacle(x, &self.spec.params)).collect()
    }

    pub fn lower_obstacle(&self) -> Vec<f64> {
        let form = self.spec.variant.formulation();
        self.xs.iter().map(|&x| form.lower_obstacle(x, &self.spec.params)).collect()
    }

    /// Construct a field from raw slices; used by the explicit oracle and
    /// by tests building synthetic fields.
    pub fn from_parts(
        spec: ProblemSpec,
        xs: Vec<f64>,
        times: Vec<f64>,
        v: Vec<f64>,
        contact: Vec<Contact>,
    ) -> Self {
        assert_eq!(v.len(), xs.len() * times.len());
        assert_eq!(contact.len(), v.len());
        SolutionField { spec, xs, times, v, contact }
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.v
    }

    pub fn raw_contact(&self) -> &[Contact] {
        &self.contact
    }

    /// Largest absolute difference against another field on the same grid.
    pub fn sup_distance(&self, other: &SolutionField) -> f64 {
        assert_eq!(self.v.len(), other.v.len());
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Tridiagonal system rows for the interior nodes of one slice.
struct Tridiagonal {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
}

/// Assemble the frozen-coefficient system for one implicit step.
///
/// The assembled row at node i reads
///   sub_i v_{i-1} + diag_i v_i + sup_i v_{i+1} = rhs_i
/// and represents (v - prev)/dt + F(v) = 0 with F from the variant's
/// stencil, upwinded per first-order term. `inv_dt = 0` with `prev`
/// ignored yields the steady operator, used for residual reporting.
#[allow(clippy::too_many_arguments)]
fn assemble(
    form: &dyn Formulation,
    spec: &ProblemSpec,
    xs: &[f64],
    h: f64,
    consumption_scale: f64,
    frozen: &[f64],
    prev: Option<&[f64]>,
    inv_dt: f64,
) -> Result<Tridiagonal> {
    let n = xs.len();
    let mut sys = Tridiagonal {
        sub: vec![0.0; n],
        diag: vec![0.0; n],
        sup: vec![0.0; n],
        rhs: vec![0.0; n],
    };
    for i in 1..n - 1 {
        let f = frozen[i];
        // written so a NaN frozen value also trips the guard
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(f > 0.0) {
            return Err(Error::NonPositiveFrozen { node: i, value: f });
        }
        let st = form.stencil(xs[i], consumption_scale, f, &spec.params);
        let dh2 = st.diffusion / (h * h);
        let mut sub = -dh2;
        let mut sup = -dh2;
        let mut diag = 2.0 * dh2 + st.reaction + inv_dt;
        for a in st.advection {
            // weighted hybrid differencing: central up to the cell Peclet
            // limit (second order, no numerical drift), continuously
            // blended into the upwind side beyond it. The weight keeps the
            // off-diagonals nonpositive, so the assembled matrix stays an
            // M-matrix, and its continuity in the frozen coefficient keeps
            // the Picard map from flip-flopping between stencils.
            let weight = if a == 0.0 {
                1.0
            } else {
                (2.0 * st.diffusion / (a.abs() * h)).min(1.0)
            };
            let central = weight * a;
            sub -= central / (2.0 * h);
            sup += central / (2.0 * h);
            let upwind = a - central;
            if upwind >= 0.0 {
                // backward difference: a (v_i - v_{i-1}) / h
                sub -= upwind / h;
                diag += upwind / h;
            } else {
                // forward difference: a (v_{i+1} - v_i) / h
                sup += upwind / h;
                diag -= upwind / h;
            }
        }
        sys.sub[i] = sub;
        sys.diag[i] = diag;
        sys.sup[i] = sup;
        sys.rhs[i] = prev.map_or(0.0, |p| p[i] * inv_dt);
    }
    Ok(sys)
}

/// Projected SOR sweep loop over the interior nodes. Boundary nodes hold
/// their Dirichlet values. Returns the sweep count.
fn psor(
    sys: &Tridiagonal,
    v: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    omega: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<usize, f64> {
    let n = v.len();
    for sweep in 1..=max_iter {
        let mut max_update = 0.0f64;
        for i in 1..n - 1 {
            let residual = sys.rhs[i] - sys.sub[i] * v[i - 1] - sys.sup[i] * v[i + 1];
            let gauss_seidel = residual / sys.diag[i];
            let candidate = v[i] + omega * (gauss_seidel - v[i]);
            let projected = candidate.clamp(lower[i], upper[i]);
            max_update = max_update.max((projected - v[i]).abs());
            v[i] = projected;
        }
        if max_update < tol {
            return Ok(sweep);
        }
    }
    // report the final update size so the caller can diagnose
    let mut last = 0.0f64;
    for i in 1..n - 1 {
        let residual = sys.rhs[i] - sys.sub[i] * v[i - 1] - sys.sup[i] * v[i + 1];
        let gauss_seidel = residual / sys.diag[i];
        let candidate = (v[i] + omega * (gauss_seidel - v[i])).clamp(lower[i], upper[i]);
        last = last.max((candidate - v[i]).abs());
    }
    Err(last)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Stepper<'a> {
    spec: &'a ProblemSpec,
    form: &'static dyn Formulation,
    xs: Vec<f64>,
    h: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a ProblemSpec) -> Self {
        let form = spec.variant.formulation();
        let xs = spec.nodes();
        let lower: Vec<f64> = xs.iter().map(|&x| form.lower_obstacle(x, &spec.params)).collect();
        let upper: Vec<f64> = xs.iter().map(|&x| form.upper_obstacle(x, &spec.params)).collect();
        Stepper { spec, form, h: spec.spacing(), xs, lower, upper }
    }

    /// One implicit step with Picard-frozen coefficients. `prev` is the
    /// already-known slice (later time, or previous pseudo-time iterate);
    /// the returned slice satisfies the obstacle bounds exactly.
    fn step(&self, prev: &[f64], consumption_scale: f64, inv_dt: f64, step_id: usize) -> Result<Vec<f64>> {
        let n = self.xs.len();
        let cfg = &self.spec.solver;
        // frozen coefficients start from the previous slice clamped into
        // the obstacle interval, which keeps them strictly positive
        let mut frozen: Vec<f64> = (0..n)
            .map(|i| prev[i].clamp(self.lower[i], self.upper[i]))
            .collect();
        frozen[0] = self.upper[0];
        frozen[n - 1] = self.lower[n - 1];
        let mut last_change = f64::INFINITY;
        for _round in 0..cfg.picard_max_iter {
            let sys = assemble(
                self.form,
                self.spec,
                &self.xs,
                self.h,
                consumption_scale,
                &frozen,
                Some(prev),
                inv_dt,
            )?;
            let mut v = frozen.clone();
            v[0] = self.upper[0];
            v[n - 1] = self.lower[n - 1];
            psor(
                &sys,
                &mut v,
                &self.lower,
                &self.upper,
                cfg.psor_relaxation,
                cfg.psor_tol,
                cfg.psor_max_iter,
            )
            .map_err(|last_update| Error::PsorDiverged {
                step: step_id,
                iters: cfg.psor_max_iter,
                last_update,
            })?;
            last_change = sup_diff(&v, &frozen);
            frozen = v;
            if last_change < cfg.picard_tol {
                return Ok(frozen);
            }
        }
        Err(Error::PicardDiverged {
            step: step_id,
            rounds: cfg.picard_max_iter,
            last_change,
        })
    }

    fn flags(&self, v: &[f64]) -> Vec<Contact> {
        let n = v.len();
        (0..n)
            .map(|i| {
                if i == 0 || v[i] >= self.upper[i] - CONTACT_SLACK {
                    Contact::Upper
                } else if i == n - 1 || v[i] <= self.lower[i] + CONTACT_SLACK {
                    Contact::Lower
                } else {
                    Contact::Interior
                }
            })
            .collect()
    }
}

/// Solve the obstacle problem selected by the spec.
///
/// Parabolic variants march backward from the terminal slice; the
/// stationary variant relaxes in pseudo-time from the upper obstacle
/// until the sup-norm slice change drops below `steady_state_tol` and
/// returns a single-slice field.
pub fn solve(spec: &ProblemSpec) -> Result<SolutionField> {
    let spec = spec.validated()?;
    let stepper = Stepper::new(&spec);
    if stepper.form.stationary() {
        solve_stationary(&spec, &stepper)
    } else {
        solve_parabolic(&spec, &stepper)
    }
}

fn solve_parabolic(spec: &ProblemSpec, stepper: &Stepper) -> Result<SolutionField> {
    let n = stepper.xs.len();
    let n_time = spec.grid.n_time;
    let dt = spec.dt();
    let times: Vec<f64> = (0..=n_time).map(|j| j as f64 * dt).collect();

    let mut v = vec![0.0; n * (n_time + 1)];
    let mut contact = vec![Contact::Interior; n * (n_time + 1)];

    // terminal slice is the upper obstacle exactly
    let terminal = stepper.upper.clone();
    v[n_time * n..].copy_from_slice(&terminal);
    contact[n_time * n..].fill(Contact::Upper);

    let mut prev = terminal;
    for j in (0..n_time).rev() {
        let scale = stepper.form.consumption_scale(times[j], &spec.params);
        let slice = stepper.step(&prev, scale, 1.0 / dt, j)?;
        let flags = stepper.flags(&slice);
        v[j * n..(j + 1) * n].copy_from_slice(&slice);
        contact[j * n..(j + 1) * n].copy_from_slice(&flags);
        prev = slice;
    }

    Ok(SolutionField::from_parts(*spec, stepper.xs.clone(), times, v, contact))
}

fn solve_stationary(spec: &ProblemSpec, stepper: &Stepper) -> Result<SolutionField> {
    let cfg = &spec.solver;
    let scale = stepper.form.consumption_scale(0.0, &spec.params);
    let inv_dt = 1.0 / cfg.steady_pseudo_dt;

    let n = stepper.xs.len();
    let mut current = stepper.upper.clone();
    current[n - 1] = stepper.lower[n - 1];

    let mut last_change = f64::INFINITY;
    for k in 0..cfg.steady_max_steps {
        let next = stepper.step(&current, scale, inv_dt, k)?;
        last_change = sup_diff(&next, &current);
        current = next;
        if last_change < cfg.steady_state_tol {
            let flags = stepper.flags(&current);
            return Ok(SolutionField::from_parts(
                *spec,
                stepper.xs.clone(),
                vec![0.0],
                current,
                flags,
            ));
        }
    }
    Err(Error::SteadyStateDiverged {
        max_steps: cfg.steady_max_steps,
        last_change,
    })
}

/// Per-slice complementarity diagnostics of a solved field.
///
/// Violations are normalized by a per-node operator scale, so the
/// summary is comparable across slices and parameter sets: interior
/// nodes should satisfy the equation, upper-contact nodes should have
/// nonpositive residual, lower-contact nodes nonnegative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Worst normalized violation over all nodes and slices.
    pub max_violation: f64,
    /// Worst normalized violation per slice.
    pub per_slice: Vec<f64>,
}

pub fn complementarity_residual(field: &SolutionField) -> Result<ResidualReport> {
    let spec = &field.spec;
    let form = spec.variant.formulation();
    let n = field.n_space();
    let h = field.spacing();
    let lower = field.lower_obstacle();
    let upper = field.upper_obstacle();

    let stationary = field.is_stationary();
    let inv_dt = if stationary { 0.0 } else { 1.0 / spec.dt() };
    let terminal = field.terminal_index();

    let mut per_slice = Vec::with_capacity(field.n_slices());
    let mut max_violation = 0.0f64;
    for j in 0..field.n_slices() {
        if Some(j) == terminal {
            // terminal slice is data, not an equation
            per_slice.push(0.0);
            continue;
        }
        let slice = field.slice(j);
        let flags = field.contact_slice(j);
        let scale = form.consumption_scale(field.times[j], &spec.params);
        let prev_slice: Option<&[f64]> = if stationary { None } else { Some(field.slice(j + 1)) };
        let sys = assemble(form, spec, &field.xs, h, scale, slice, prev_slice, inv_dt)?;

        let mut worst = 0.0f64;
        for i in 1..n - 1 {
            let action = sys.sub[i] * slice[i - 1] + sys.diag[i] * slice[i] + sys.sup[i] * slice[i + 1];
            let residual = action - sys.rhs[i];
            let node_scale = (sys.sub[i] * slice[i - 1]).abs()
                + (sys.diag[i] * slice[i]).abs()
                + (sys.sup[i] * slice[i + 1]).abs()
                + sys.rhs[i].abs()
                + 1.0;
            let violation = match flags[i] {
                Contact::Upper => residual / node_scale,
                Contact::Lower => -residual / node_scale,
                Contact::Interior => residual.abs() / node_scale,
            };
            worst = worst.max(violation);
        }
        // re-flag defensively: nodes whose stored flag disagrees with the
        // obstacle gap would corrupt the sign test above
        for i in 1..n - 1 {
            let at_upper = slice[i] >= upper[i] - CONTACT_SLACK;
            let at_lower = slice[i] <= lower[i] + CONTACT_SLACK;
            let consistent = match flags[i] {
                Contact::Upper => at_upper,
                Contact::Lower => at_lower,
                Contact::Interior => !at_upper && !at_lower,
            };
            if !consistent {
                worst = worst.max(1.0);
            }
        }
        max_violation = max_violation.max(worst);
        per_slice.push(worst);
    }
    Ok(ResidualReport { max_violation, per_slice })
}
