//! Flat key = value run configuration. Every key has a default, so an
//! empty (or missing) file is a valid configuration; command-line flags
//! override file values.

use std::path::Path;

use serde::Serialize;

use costbound::montecarlo::SimConfig;
use costbound::params::{CostParams, MarketParams, ModelParams, Utility};
use costbound::problem::{fnv1a, GridConfig, ProblemSpec, SolverConfig};
use costbound::variant::{by_name, Variant};
use costbound::{Error, Violation};

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    // market
    pub alpha: f64,
    pub r: f64,
    pub sigma: f64,
    pub beta: f64,
    pub horizon: f64,
    // costs
    pub lambda: f64,
    pub mu: f64,
    // utility
    pub utility: String,
    pub gamma: f64,
    // formulation
    pub variant: String,
    // grid
    pub x_min: Option<f64>,
    pub x_max: f64,
    pub n_space: usize,
    pub n_time: usize,
    // solver
    pub psor_relaxation: f64,
    pub psor_tol: f64,
    pub psor_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub steady_tol: f64,
    pub steady_max_steps: usize,
    pub steady_pseudo_dt: f64,
    // sweep
    pub sweep_costs: Vec<f64>,
    pub figure_time: f64,
    // simulation
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub x0: f64,
    pub y0: f64,
    pub shifts: Vec<f64>,
    // run control
    pub cache: bool,
    pub workers: usize,
    pub profile: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridConfig::default();
        let solver = SolverConfig::default();
        let sim = SimConfig::default();
        RunConfig {
            alpha: 0.3,
            r: 0.01,
            sigma: 0.2,
            beta: 0.1,
            horizon: 2.0,
            lambda: 0.1,
            mu: 0.1,
            utility: "log".into(),
            gamma: -1.0,
            variant: "log_consumption".into(),
            x_min: grid.x_min,
            x_max: grid.x_max,
            n_space: grid.n_space,
            n_time: grid.n_time,
            psor_relaxation: solver.psor_relaxation,
            psor_tol: solver.psor_tol,
            psor_max_iter: solver.psor_max_iter,
            picard_tol: solver.picard_tol,
            picard_max_iter: solver.picard_max_iter,
            steady_tol: solver.steady_state_tol,
            steady_max_steps: solver.steady_max_steps,
            steady_pseudo_dt: solver.steady_pseudo_dt,
            sweep_costs: vec![0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5],
            figure_time: 0.25,
            n_paths: sim.n_paths,
            n_steps: sim.n_steps,
            seed: sim.seed,
            x0: sim.x0,
            y0: sim.y0,
            shifts: vec![-0.2, -0.1, 0.0, 0.1, 0.2],
            cache: true,
            workers: 0,
            profile: "default".into(),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::Invalid(vec![Violation::new(key, message)])
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, Error> {
    value
        .split(',')
        .map(|item| parse_num(key, item))
        .collect()
}

impl RunConfig {
    /// Parse a config file over the defaults. Lines are `key = value`;
    /// blank lines and `#` comments are ignored; unknown keys are errors.
    pub fn from_file(path: &Path) -> Result<RunConfig, Error> {
        let text = std::fs::read_to_string(path)?;
        let mut config = RunConfig::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                invalid("config", format!("line {}: expected key = value", line_no + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match key {
            "alpha" => self.alpha = parse_num(key, value)?,
            "r" => self.r = parse_num(key, value)?,
            "sigma" => self.sigma = parse_num(key, value)?,
            "beta" => self.beta = parse_num(key, value)?,
            "horizon" => self.horizon = parse_num(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "mu" => self.mu = parse_num(key, value)?,
            "utility" => self.utility = value.to_string(),
            "gamma" => self.gamma = parse_num(key, value)?,
            "variant" => self.variant = value.to_string(),
            "x_min" => {
                self.x_min = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "x_max" => self.x_max = parse_num(key, value)?,
            "n_space" => self.n_space = parse_num(key, value)?,
            "n_time" => self.n_time = parse_num(key, value)?,
            "psor_relaxation" => self.psor_relaxation = parse_num(key, value)?,
            "psor_tol" => self.psor_tol = parse_num(key, value)?,
            "psor_max_iter" => self.psor_max_iter = parse_num(key, value)?,
            "picard_tol" => self.picard_tol = parse_num(key, value)?,
            "picard_max_iter" => self.picard_max_iter = parse_num(key, value)?,
            "steady_tol" => self.steady_tol = parse_num(key, value)?,
            "steady_max_steps" => self.steady_max_steps = parse_num(key, value)?,
            "steady_pseudo_dt" => self.steady_pseudo_dt = parse_num(key, value)?,
            "sweep_costs" => self.sweep_costs = parse_list(key, value)?,
            "figure_time" => self.figure_time = parse_num(key, value)?,
            "n_paths" => self.n_paths = parse_num(key, value)?,
            "n_steps" => self.n_steps = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "x0" => self.x0 = parse_num(key, value)?,
            "y0" => self.y0 = parse_num(key, value)?,
            "shifts" => self.shifts = parse_list(key, value)?,
            "cache" => {
                self.cache = match value {
                    "true" | "1" | "on" => true,
                    "false" | "0" | "off" => false,
                    other => return Err(invalid(key, format!("expected true/false, got '{other}'"))),
                }
            }
            "workers" => self.workers = parse_num(key, value)?,
            "profile" => self.profile = value.to_string(),
            other => return Err(invalid("config", format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn utility_spec(&self) -> Result<Utility, Error> {
        match self.utility.as_str() {
            "log" => Ok(Utility::LogWithConsumption),
            "crra" => Ok(Utility::CrraNoConsumption { gamma: self.gamma }),
            other => Err(invalid("utility", format!("expected log or crra, got '{other}'"))),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams, Error> {
        let params = ModelParams {
            market: MarketParams {
                alpha: self.alpha,
                r: self.r,
                sigma: self.sigma,
                beta: self.beta,
                horizon: self.horizon,
            },
            costs: CostParams {
                lambda: self.lambda,
                mu: self.mu,
            },
            utility: self.utility_spec()?,
        };
        params.validated()
    }

    pub fn variant(&self) -> Result<Variant, Error> {
        by_name(&self.variant)
            .map(|f| f.id())
            .ok_or_else(|| {
                let names: Vec<&str> = costbound::variant::all().iter().map(|f| f.name()).collect();
                invalid(
                    "variant",
                    format!("unknown formulation '{}'; registered: {}", self.variant, names.join(", ")),
                )
            })
    }

    pub fn grid(&self) -> GridConfig {
        GridConfig {
            x_min: self.x_min,
            x_max: self.x_max,
            n_space: self.n_space,
            n_time: self.n_time,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            psor_relaxation: self.psor_relaxation,
            psor_tol: self.psor_tol,
            psor_max_iter: self.psor_max_iter,
            picard_tol: self.picard_tol,
            picard_max_iter: self.picard_max_iter,
            steady_state_tol: self.steady_tol,
            steady_max_steps: self.steady_max_steps,
            steady_pseudo_dt: self.steady_pseudo_dt,
        }
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, Error> {
        ProblemSpec::new(self.variant()?, self.model_params()?)
            .with_grid(self.grid())
            .with_solver(self.solver())
            .validated()
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            seed: self.seed,
            x0: self.x0,
            y0: self.y0,
        }
    }

    /// Stable hash over the resolved configuration.
    pub fn hash(&self) -> u64 {
        fnv1a(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_spec() {
        let config = RunConfig::default();
        let spec = config.problem_spec().unwrap();
        assert_eq!(spec.variant, Variant::LogConsumptionHat);
        assert_eq!(spec.grid.n_space, 2001);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut config = RunConfig::default();
        assert!(config.set("no_such_key", "1").is_err());
        assert!(config.set("alpha", "not a number").is_err());
    }

    #[test]
    fn variant_lookup_through_registry() {
        let mut config = RunConfig::default();
        config.set("variant", "infinite_horizon_log").unwrap();
        assert_eq!(config.variant().unwrap(), Variant::InfiniteHorizonLog);
        config.set("variant", "bogus").unwrap();
        assert!(config.variant().is_err());
    }

    #[test]
    fn hash_tracks_any_change() {
        let base = RunConfig::default();
        let h0 = base.hash();
        let mut other = RunConfig::default();
        other.set("mu", "0.2").unwrap();
        assert_ne!(h0, other.hash());
        assert_eq!(h0, RunConfig::default().hash());
    }

    #[test]
    fn crra_config_builds() {
        let mut config = RunConfig::default();
        config.set("utility", "crra").unwrap();
        config.set("gamma", "-1").unwrap();
        config.set("variant", "crra_no_consumption").unwrap();
        let spec = config.problem_spec().unwrap();
        assert_eq!(spec.variant, Variant::CrraNoConsumption);
        // auto left truncation respects the shifted singularity
        assert!(spec.x_min() > -0.9);
    }
}
