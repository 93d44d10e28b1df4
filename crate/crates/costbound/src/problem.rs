//! Problem specification: grid and solver configuration plus a stable
//! content hash used for caching and output labeling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::params::ModelParams;
use crate::variant::Variant;

/// Distance above the left singularity used when `x_min` is left on auto.
pub const LEFT_OFFSET: f64 = 1e-3;

/// Spatial/temporal discretization. The spatial grid is uniform; both
/// truncation ends sit inside trade regions where the solution equals a
/// known obstacle, so Dirichlet closure is exact there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Left truncation; `None` resolves to the variant's left
    /// singularity plus [`LEFT_OFFSET`].
    pub x_min: Option<f64>,
    /// Right truncation. Configurable because the buy boundary diverges
    /// near the horizon.
    pub x_max: f64,
    /// Node count (uniform spacing).
    pub n_space: usize,
    /// Time steps (uniform dt = horizon / n_time).
    pub n_time: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_min: None,
            x_max: 20.0,
            n_space: 2001,
            n_time: 800,
        }
    }
}

impl GridConfig {
    pub fn with_resolution(n_space: usize, n_time: usize) -> Self {
        GridConfig {
            n_space,
            n_time,
            ..GridConfig::default()
        }
    }

    /// Grid with both h and dt halved, for refinement studies.
    pub fn refined(&self) -> Self {
        GridConfig {
            x_min: self.x_min,
            x_max: self.x_max,
            n_space: (self.n_space - 1) * 2 + 1,
            n_time: self.n_time * 2,
        }
    }
}

/// Iteration controls for the implicit stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// PSOR relaxation factor, in (0, 2).
    pub psor_relaxation: f64,
    /// Sup-norm update tolerance for one PSOR solve.
    pub psor_tol: f64,
    pub psor_max_iter: usize,
    /// Sup-norm tolerance on successive Picard iterates of a slice.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Sup-norm slice-change tolerance for the stationary march.
    pub steady_state_tol: f64,
    pub steady_max_steps: usize,
    /// Pseudo-time step of the stationary march.
    pub steady_pseudo_dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            psor_relaxation: 1.0,
            psor_tol: 1e-9,
            psor_max_iter: 10_000,
            picard_tol: 1e-8,
            picard_max_iter: 50,
            steady_state_tol: 1e-10,
            steady_max_steps: 200_000,
            steady_pseudo_dt: 0.005,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(0.0 < self.psor_relaxation && self.psor_relaxation < 2.0) {
            out.push(Violation::new("psor_relaxation", "must lie in (0, 2)"));
        }
        for (name, value) in [
            ("psor_tol", self.psor_tol),
            ("picard_tol", self.picard_tol),
            ("steady_state_tol", self.steady_state_tol),
            ("steady_pseudo_dt", self.steady_pseudo_dt),
        ] {
            if !(value.is_finite() && value > 0.0) {
                out.push(Violation::new(name, "must be positive"));
            }
        }
        if self.psor_max_iter == 0 || self.picard_max_iter == 0 || self.steady_max_steps == 0 {
            out.push(Violation::new("max_iter", "iteration caps must be positive"));
        }
        out
    }
}

/// Everything needed to run one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub variant: Variant,
    pub params: ModelParams,
    pub grid: GridConfig,
    pub solver: SolverConfig,
}

impl ProblemSpec {
    pub fn new(variant: Variant, params: ModelParams) -> Self {
        ProblemSpec {
            variant,
            params,
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn with_grid(mut self, grid: GridConfig) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.params.validate();
        let form = self.variant.formulation();
        out.extend(form.requires(&self.params));
        out.extend(self.solver.validate());
        if out.is_empty() {
            // grid checks need valid params for the singularity location
            let singularity = form.left_singularity(&self.params);
            let x_min = self.x_min();
            if !(singularity < x_min && x_min < 0.0) {
                out.push(Violation::new(
                    "x_min",
                    format!("x_min must lie in ({singularity}, 0) for {}", form.name()),
                ));
            }
            if !(self.grid.x_max > 0.0 && self.grid.x_max.is_finite()) {
                out.push(Violation::new("x_max", "x_max must be positive and finite"));
            }
            if self.grid.n_space < 3 {
                out.push(Violation::new("n_space", "need at least 3 nodes"));
            }
            if self.grid.n_time < 1 {
                out.push(Violation::new("n_time", "need at least one time step"));
            }
        }
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

    /// Effective left truncation after auto-resolution.
    pub fn x_min(&self) -> f64 {
        self.grid.x_min.unwrap_or_else(|| {
            self.variant.formulation().left_singularity(&self.params) + LEFT_OFFSET
        })
    }

    pub fn spacing(&self) -> f64 {
        (self.grid.x_max - self.x_min()) / (self.grid.n_space - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.params.market.horizon / self.grid.n_time as f64
    }

    /// Spatial nodes, left truncation to right.
    pub fn nodes(&self) -> Vec<f64> {
        let x_min = self.x_min();
        let h = self.spacing();
        (0..self.grid.n_space).map(|i| x_min + i as f64 * h).collect()
    }

    /// Stable content hash (FNV-1a over the canonical JSON encoding).
    pub fn hash(&self) -> u64 {
        fnv1a(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
