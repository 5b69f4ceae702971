use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermostat_core::hypothesis;
use thermostat_core::solver::{self, Solver};

mod config;
mod svg;

use config::{RunConfig, Setup};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "thermostat",
    version,
    about = "Solve and check thermostat boundary value problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the radius from the configuration.
    #[arg(long)]
    rho: Option<f64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the existence hypotheses for one radius.
    Check(CommonArgs),
    /// Solve for one radius and verify the result.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Solve even if a hypothesis check fails.
        #[arg(long)]
        force: bool,
    },
    /// Solve along the configured list of radii.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Solve the radii concurrently, without warm starts.
        #[arg(long)]
        parallel: bool,
    },
    /// Tabulate the kernel on a grid.
    Kernel(CommonArgs),
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn load(args: &CommonArgs) -> Result<Setup, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut setup = RunConfig::parse(&text)?.setup()?;
    if let Some(rho) = args.rho {
        setup.rho = Some(rho);
        setup.rhos = Some(vec![rho]);
    }
    if let Some(out) = &args.out {
        setup.out_dir = out.clone();
    }
    fs::create_dir_all(&setup.out_dir).map_err(|source| CliError::Io {
        path: setup.out_dir.clone(),
        source,
    })?;
    Ok(setup)
}

fn single_rho(setup: &Setup) -> Result<f64, CliError> {
    match setup.rho {
        Some(rho) if rho > 0.0 && rho.is_finite() => Ok(rho),
        Some(rho) => Err(CliError::Config(format!("rho = {rho} must be positive"))),
        None => Err(CliError::Config(
            "no radius: set run.rho or pass --rho".into(),
        )),
    }
}

fn check(setup: &Setup, rho: f64) -> Result<hypothesis::HypothesisReport, CliError> {
    let report = hypothesis::check_all(&setup.spec, rho, &setup.hypothesis)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write(&setup.out_dir, "hypothesis.txt", &report.to_text())?;
    write(&setup.out_dir, "hypothesis.csv", &report.to_kv())?;
    Ok(report)
}

fn failed_conditions(report: &hypothesis::HypothesisReport) -> String {
    report
        .conditions
        .iter()
        .filter(|c| c.status == hypothesis::Status::Fail)
        .map(|c| c.name)
        .collect::<Vec<_>>()
        .join(", ")
}

fn run_check(args: &CommonArgs) -> Result<String, CliError> {
    let setup = load(args)?;
    let rho = single_rho(&setup)?;
    let report = check(&setup, rho)?;
    let witness = report.get("c").map_or(f64::NAN, |c| c.witness);
    if !report.all_checkable_pass() {
        return Err(CliError::Hypothesis(format!(
            "{} rho={rho}: failed {}",
            setup.spec.name,
            failed_conditions(&report)
        )));
    }
    Ok(format!(
        "check {} rho={rho}: pass, condition c witness {witness:e}",
        setup.spec.name
    ))
}

fn run_solve(args: &CommonArgs, force: bool) -> Result<String, CliError> {
    let setup = load(args)?;
    let rho = single_rho(&setup)?;
    if !force {
        let report = check(&setup, rho)?;
        if !report.all_checkable_pass() {
            return Err(CliError::Hypothesis(format!(
                "{} rho={rho}: failed {} (use --force to solve anyway)",
                setup.spec.name,
                failed_conditions(&report)
            )));
        }
    }
    let solver = Solver::new(setup.spec.clone(), setup.solve.clone())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let result = solver
        .solve(rho)
        .map_err(|e| CliError::NotConverged(format!("{} rho={rho}: {e}", setup.spec.name)))?;
    let report = solver::verify_solution(&setup.spec, &result)
        .map_err(|e| CliError::NotConverged(format!("verification: {e}")))?;

    write(&setup.out_dir, "solution.csv", &result.u.to_csv("u"))?;
    write(&setup.out_dir, "verification.txt", &report.to_text())?;
    let branch = solver::Branch {
        points: vec![(rho, Ok(result.clone()))],
        parallel: false,
    };
    write(&setup.out_dir, "branch.csv", &branch.to_csv())?;
    if setup.plot {
        let points: Vec<(f64, f64)> = result
            .u
            .mesh()
            .nodes()
            .iter()
            .copied()
            .zip(result.u.values().iter().copied())
            .collect();
        let title = format!("{} rho={rho} lambda={:.6}", setup.spec.name, result.lambda);
        write(
            &setup.out_dir,
            "solution.svg",
            &svg::line_plot(&title, "t", "u", &points),
        )?;
    }
    let summary = format!(
        "solve {} rho={rho}: lambda={} iterations={} residual={:e}",
        setup.spec.name, result.lambda, result.iterations, result.fixed_point_residual
    );
    if result.converged {
        Ok(format!("{summary} converged"))
    } else {
        Err(CliError::NotConverged(format!("{summary} not converged")))
    }
}

fn run_sweep(args: &CommonArgs, parallel_flag: bool) -> Result<String, CliError> {
    let setup = load(args)?;
    let rhos = setup.rhos.clone().unwrap_or_default();
    if rhos.is_empty() {
        return Err(CliError::Config(
            "sweep needs a nonempty run.rhos list".into(),
        ));
    }
    let parallel = parallel_flag || setup.parallel;
    let branch = solver::sweep_rho(&setup.spec, &rhos, &setup.solve, parallel)
        .map_err(|e| CliError::Config(e.to_string()))?;

    write(&setup.out_dir, "branch.csv", &branch.to_csv())?;
    let mut meta = String::new();
    writeln!(meta, "problem = {}", setup.spec.name).unwrap();
    writeln!(meta, "parallel = {parallel}").unwrap();
    writeln!(meta, "warm_start = {}", !parallel).unwrap();
    for (rho, point) in &branch.points {
        if let Err(e) = point {
            writeln!(meta, "error at rho = {rho}: {e}").unwrap();
        }
    }
    write(&setup.out_dir, "sweep.txt", &meta)?;
    if setup.plot {
        let points: Vec<(f64, f64)> = branch
            .points
            .iter()
            .map(|(rho, p)| (*rho, p.as_ref().map_or(f64::NAN, |s| s.lambda)))
            .collect();
        let title = format!("{} branch", setup.spec.name);
        write(
            &setup.out_dir,
            "branch.svg",
            &svg::line_plot(&title, "rho", "lambda", &points),
        )?;
    }
    let converged = branch
        .points
        .iter()
        .filter(|(_, p)| matches!(p, Ok(s) if s.converged))
        .count();
    let summary = format!(
        "sweep {}: {converged}/{} converged",
        setup.spec.name,
        rhos.len()
    );
    if branch.all_converged() {
        Ok(summary)
    } else {
        Err(CliError::NotConverged(summary))
    }
}

fn run_kernel(args: &CommonArgs) -> Result<String, CliError> {
    let setup = load(args)?;
    let geom = setup.spec.geometry;
    let m = setup.kernel_grid;
    let mut csv = String::from("t,s,k\n");
    for i in 0..=m {
        let t = -geom.r() + (1.0 + geom.r()) * i as f64 / m as f64;
        for j in 0..=m {
            let s = j as f64 / m as f64;
            let k = geom
                .kernel(t, s)
                .map_err(|e| CliError::Config(e.to_string()))?;
            writeln!(csv, "{t},{s},{k}").unwrap();
        }
    }
    let path = write(&setup.out_dir, "kernel.csv", &csv)?;
    Ok(format!(
        "kernel {}: {}x{} values written to {}",
        setup.spec.name,
        m + 1,
        m + 1,
        path.display()
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(args) => run_check(args),
        Command::Solve { common, force } => run_solve(common, *force),
        Command::Sweep { common, parallel } => run_sweep(common, *parallel),
        Command::Kernel(args) => run_kernel(args),
    };
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
