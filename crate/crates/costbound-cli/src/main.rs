//! Command-line front end: solve a single obstacle problem, sweep the
//! trading boundaries against transaction costs, run the claim
//! verification suite, or simulate the boundary policy.
//!
//! Exit codes: 0 success, 1 assertion failure, 2 configuration error,
//! 3 solver failure.

mod config;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use costbound::analysis::{run_profile, Profile};
use costbound::boundary::boundaries;
use costbound::io::{read_field, write_field};
use costbound::montecarlo::{perturbation_study, simulate_policy_with_paths};
use costbound::params::{CostParams, ModelParams};
use costbound::problem::ProblemSpec;
use costbound::solver::{solve, SolutionField};
use costbound::{Error, Variant};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "costbound", version, about = "Free-boundary solver for portfolio selection under proportional transaction costs")]
struct Cli {
    /// Key = value configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for sweeps and simulation (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Verification profile: default | crra | quick.
    #[arg(long, global = true)]
    profile: Option<String>,

    /// Simulation seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Ignore and do not write the on-disk field cache.
    #[arg(long, global = true)]
    no_cache: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured obstacle problem and write the field and
    /// boundary curves.
    Solve,
    /// Sweep the symmetric cost rate and write boundary-vs-cost tables.
    Sweep,
    /// Run the claim verification suite; nonzero exit on any failure.
    Verify,
    /// Simulate the boundary policy by Monte Carlo.
    Simulate {
        /// Also run the boundary-shift perturbation study.
        #[arg(long)]
        perturb: bool,
        /// Dump per-path utilities to paths.csv.
        #[arg(long)]
        dump_paths: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Invalid(_) | Error::MalformedDump(_) => 2u8,
                _ => 3u8,
            };
            ExitCode::from(code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(profile) = &cli.profile {
        config.profile = profile.clone();
    }
    if cli.no_cache {
        config.cache = false;
    }
    Ok(config)
}

fn init_workers(config: &RunConfig) {
    if config.workers > 0 {
        // ignore failure: the global pool can only be set once
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let config = load_config(&cli)?;
    init_workers(&config);
    fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Solve => cmd_solve(&cli, &config),
        Command::Sweep => cmd_sweep(&cli, &config),
        Command::Verify => cmd_verify(&cli, &config),
        Command::Simulate { perturb, dump_paths } => cmd_simulate(&cli, &config, perturb, dump_paths),
    }
}

fn cache_path(out: &Path, spec: &ProblemSpec) -> PathBuf {
    out.join("cache").join(format!("{:016x}.bin", spec.hash()))
}

/// Solve through the on-disk cache when enabled.
fn solve_cached(out: &Path, config: &RunConfig, spec: &ProblemSpec) -> Result<(SolutionField, bool), Error> {
    let path = cache_path(out, spec);
    if config.cache {
        if let Ok(file) = fs::File::open(&path) {
            if let Ok(field) = read_field(std::io::BufReader::new(file)) {
                if field.spec.hash() == spec.hash() {
                    return Ok((field, true));
                }
            }
        }
    }
    let field = solve(spec)?;
    if config.cache {
        fs::create_dir_all(path.parent().unwrap())?;
        write_field(&field, BufWriter::new(fs::File::create(&path)?))?;
    }
    Ok((field, false))
}

fn write_run_manifest(
    cli: &Cli,
    config: &RunConfig,
    command: &str,
    outputs: &[&str],
    extra: serde_json::Value,
) -> Result<(), Error> {
    let manifest = json!({
        "command": command,
        "config_hash": format!("{:016x}", config.hash()),
        "config": config,
        "outputs": outputs,
        "detail": extra,
    });
    fs::write(cli.out.join("run.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn cmd_solve(cli: &Cli, config: &RunConfig) -> Result<ExitCode, Error> {
    let spec = config.problem_spec()?;
    let (field, from_cache) = solve_cached(&cli.out, config, &spec)?;
    let curves = boundaries(&field)?;

    let mut csv = String::new();
    csv.push_str(&format!("# spec_hash={:016x}\n", spec.hash()));
    let mut buf = Vec::new();
    curves.write_csv(&mut buf)?;
    csv.push_str(&String::from_utf8_lossy(&buf));
    fs::write(cli.out.join("boundaries.csv"), csv)?;

    write_field(&field, BufWriter::new(fs::File::create(cli.out.join("field.bin"))?))?;

    for flag in &curves.truncation_flags {
        eprintln!(
            "warning: boundary near the {:?} truncation at t = {:.4}; enlarge the grid to trust it",
            flag.side, flag.time
        );
    }

    write_run_manifest(
        cli,
        config,
        "solve",
        &["boundaries.csv", "field.bin"],
        json!({
            "spec_hash": format!("{:016x}", spec.hash()),
            "from_cache": from_cache,
            "truncation_flags": curves.truncation_flags.len(),
        }),
    )?;
    println!(
        "solved {} on {} x {} nodes{}",
        spec.variant,
        spec.grid.n_space,
        spec.grid.n_time,
        if from_cache { " (from cache)" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cli: &Cli, config: &RunConfig) -> Result<ExitCode, Error> {
    let base = config.model_params()?;
    let x_merton = base.market.merton_line();
    let spec_template = config.problem_spec()?;
    if spec_template.variant != Variant::LogConsumptionHat {
        return Err(Error::Invalid(vec![costbound::Violation::new(
            "variant",
            "the cost sweep runs on the log_consumption formulation",
        )]));
    }

    let stamp = format!("# config_hash={:016x}\n", config.hash());
    let mut left = format!("{stamp}cost,sell,buy,merton\n");
    let mut right = format!("{stamp}cost,sell_adjusted,buy_adjusted,merton\n");
    let mut long = format!("{stamp}cost,t,sell_hat,buy_hat,sell_orig,buy_orig,sell_adjusted,buy_adjusted\n");

    for &cost in &config.sweep_costs {
        let params = ModelParams {
            costs: CostParams { lambda: cost, mu: cost },
            ..base
        };
        let spec = ProblemSpec::new(Variant::LogConsumptionHat, params)
            .with_grid(config.grid())
            .with_solver(config.solver());
        let spec = spec.validated()?;
        let (field, _) = solve_cached(&cli.out, config, &spec)?;
        let curves = boundaries(&field)?;
        let eval = curves
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - config.figure_time)
                    .abs()
                    .total_cmp(&(b.1 - config.figure_time).abs())
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        left.push_str(&format!(
            "{},{},{},{}\n",
            cost, curves.sell_orig[eval], curves.buy_orig[eval], x_merton
        ));
        right.push_str(&format!(
            "{},{},{},{}\n",
            cost, curves.sell_adjusted[eval], curves.buy_adjusted[eval], x_merton
        ));
        for j in 0..curves.len() {
            long.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                cost,
                curves.times[j],
                curves.sell_hat[j],
                curves.buy_hat[j],
                curves.sell_orig[j],
                curves.buy_orig[j],
                curves.sell_adjusted[j],
                curves.buy_adjusted[j]
            ));
        }
    }

    fs::write(cli.out.join("figure1_left.csv"), left)?;
    fs::write(cli.out.join("figure1_right.csv"), right)?;
    fs::write(cli.out.join("sweep_curves.csv"), long)?;
    write_run_manifest(
        cli,
        config,
        "sweep",
        &["figure1_left.csv", "figure1_right.csv", "sweep_curves.csv"],
        json!({ "costs": config.sweep_costs, "t_eval": config.figure_time, "merton": x_merton }),
    )?;
    println!(
        "swept {} cost levels at t = {}",
        config.sweep_costs.len(),
        config.figure_time
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cli: &Cli, config: &RunConfig) -> Result<ExitCode, Error> {
    let profile: Profile = config
        .profile
        .parse()
        .map_err(|message| Error::Invalid(vec![costbound::Violation::new("profile", message)]))?;
    let report = run_profile(profile)?;
    let text = report.render_text();
    print!("{text}");
    fs::write(cli.out.join("report.txt"), &text)?;
    fs::write(cli.out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    write_run_manifest(
        cli,
        config,
        "verify",
        &["report.txt", "report.json"],
        json!({ "profile": config.profile, "passed": report.passed }),
    )?;
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_simulate(cli: &Cli, config: &RunConfig, perturb: bool, dump_paths: bool) -> Result<ExitCode, Error> {
    let spec = config.problem_spec()?;
    if spec.variant != Variant::LogConsumptionHat {
        return Err(Error::Invalid(vec![costbound::Violation::new(
            "variant",
            "the policy simulation runs on the log_consumption formulation",
        )]));
    }
    let (field, _) = solve_cached(&cli.out, config, &spec)?;
    let curves = boundaries(&field)?;
    let sim = config.sim_config();
    let (result, utilities) = simulate_policy_with_paths(&curves, &field, &spec.params, &sim)?;
    if dump_paths {
        let mut csv = format!("# config_hash={:016x}\npath,utility\n", config.hash());
        for (p, u) in utilities.iter().enumerate() {
            csv.push_str(&format!("{p},{u}\n"));
        }
        fs::write(cli.out.join("paths.csv"), csv)?;
    }
    fs::write(
        cli.out.join("simulation.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "config_hash": format!("{:016x}", config.hash()),
            "result": result,
        }))?,
    )?;
    println!(
        "mean utility {:.6} +- {:.6} over {} paths (regions: sell {:.4}, hold {:.4}, buy {:.4})",
        result.mean_utility,
        result.std_error,
        result.n_paths,
        result.region_fractions.sell,
        result.region_fractions.no_trade,
        result.region_fractions.buy
    );

    let mut outputs = vec!["simulation.json"];
    let mut perturb_detail = json!(null);
    if perturb {
        let shifts: Vec<(f64, f64)> = config.shifts.iter().map(|&s| (s, s)).collect();
        let study = perturbation_study(&curves, &field, &spec.params, &sim, &shifts)?;
        let mut buf = format!("# config_hash={:016x}\n", config.hash()).into_bytes();
        study.write_csv(&mut buf)?;
        fs::write(cli.out.join("perturbation.csv"), buf)?;
        outputs.push("perturbation.csv");
        println!(
            "perturbation study: unshifted policy within two standard errors of the best: {}",
            study.base_within_two_se
        );
        perturb_detail = json!({
            "base_within_two_se": study.base_within_two_se,
            "rows": study.rows.len(),
        });
        write_run_manifest(
            cli,
            config,
            "simulate",
            &outputs,
            json!({ "perturbation": perturb_detail }),
        )?;
        if !study.base_within_two_se {
            return Ok(ExitCode::from(1));
        }
        return Ok(ExitCode::SUCCESS);
    }
    write_run_manifest(
        cli,
        config,
        "simulate",
        &outputs,
        json!({ "perturbation": perturb_detail }),
    )?;
    Ok(ExitCode::SUCCESS)
}
