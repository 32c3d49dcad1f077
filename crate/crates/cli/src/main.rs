use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use probetest::adaptive::AdaptiveProblem;
use probetest::experiment::run_experiment_with_progress;
use probetest::optim::{IterationInfo, PdpsSolver};
use probetest::spectral::{PeriodicGrid, SobolevIndex};
use probetest_cli::config::{Overrides, Rational, RunConfig};
use probetest_cli::output::emit_csv;
use probetest_cli::plot::emit_plot;
use probetest_cli::CliError;

/// Power curves of regularized, oracle and adaptive tests over a noise sweep.
#[derive(Debug, Parser)]
#[command(name = "probetest", version, args_override_self = true)]
struct Args {
    /// TOML file with any of the settings below (snake_case keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario: s1, s2 or s3.
    #[arg(long)]
    scenario: Option<String>,
    /// Kernel smoothing order.
    #[arg(long)]
    a: Option<f64>,
    /// Support length, e.g. 5/128.
    #[arg(long)]
    l: Option<String>,
    /// Support overlap in [0, 1].
    #[arg(long)]
    lambda: Option<f64>,
    /// Sobolev index of the adaptive design space.
    #[arg(long)]
    t: Option<f64>,
    /// Test level.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
    #[arg(long)]
    sigma_points: Option<usize>,
    /// Monte-Carlo samples per noise level.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated Tikhonov parameters for plug-in curves.
    #[arg(long, value_delimiter = ',')]
    plugin_betas: Option<Vec<f64>>,
    /// Noise draws for the lower-bound curve (0 disables it).
    #[arg(long)]
    bound_draws: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    s_floor: Option<f64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Stream per-iteration diagnostics of the noiseless solves to stderr as CSV.
    #[arg(long)]
    debug_solver: bool,
    /// Suppress progress output.
    #[arg(long, short)]
    quiet: bool,
}

impl Args {
    fn overrides(&self) -> Overrides {
        Overrides {
            scenario: self.scenario.clone(),
            a: self.a,
            l: self.l.clone().map(Rational::Text),
            lambda: self.lambda,
            t: self.t,
            alpha: self.alpha,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            sigma_points: self.sigma_points,
            samples: self.samples,
            seed: self.seed,
            plugin_betas: self.plugin_betas.clone(),
            bound_draws: self.bound_draws,
            grid_points: self.grid_points,
            tau: self.tau,
            rho: self.rho,
            max_iter: self.max_iter,
            tol: self.tol,
            s_floor: self.s_floor,
            out_csv: self.out_csv.clone(),
            out_svg: self.out_svg.clone(),
        }
    }
}

fn debug_solves(rc: &RunConfig) -> Result<(), CliError> {
    let e = &rc.experiment;
    let grid = PeriodicGrid::new(e.grid_points).map_err(|err| CliError::Config(err.to_string()))?;
    let problem = AdaptiveProblem::new(e.scenario, grid, e.pdps).map_err(|err| CliError::Config(err.to_string()))?;
    let stderr = std::io::stderr();
    let mut out = stderr.lock();
    let _ = writeln!(out, "solve,iteration,objective,e_norm,s,change");
    for (name, t) in [("oracle", SobolevIndex::L2), ("design", e.scenario.t())] {
        let solver = PdpsSolver::new(problem.phi(), problem.kernel(), t, e.pdps)
            .map_err(|err| CliError::Config(err.to_string()))?;
        let mut emit = |i: &IterationInfo| {
            let _ = writeln!(
                out,
                "{name},{},{:.8e},{:.8e},{:.8e},{:.8e}",
                i.iteration, i.objective, i.e_norm, i.s, i.change
            );
        };
        solver
            .solve_observed(problem.noiseless(), &mut emit)
            .map_err(|err| CliError::Config(err.to_string()))?;
    }
    Ok(())
}

fn run(args: Args) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let rc = RunConfig::resolve(file.merge(args.overrides()))?;
    if args.debug_solver {
        debug_solves(&rc)?;
    }
    let quiet = args.quiet;
    let progress = move |done: usize, total: usize| {
        if !quiet {
            eprintln!("noise level {done}/{total} done");
        }
    };
    let out = run_experiment_with_progress(&rc.experiment, &progress).map_err(|e| CliError::Config(e.to_string()))?;
    let mut comments = rc.header();
    for (sigma, count) in out.not_converged.iter().filter(|(_, c)| *c > 0) {
        eprintln!("warning: {count} adaptive samples at sigma = {sigma:.3e} did not converge and were excluded");
        comments.push_str(&format!("# not_converged sigma={sigma:.8e} count={count}\n"));
    }
    emit_csv(&out.records, &comments, &rc.out_csv)?;
    if let Some(svg) = &rc.out_svg {
        let s = &rc.experiment.scenario;
        let title = format!(
            "{} a={} l={:.5} lambda={:.3} t={}",
            s.kind().label(),
            s.a(),
            s.l(),
            s.lambda(),
            s.t().value()
        );
        emit_plot(&out.records, rc.experiment.alpha, &title, svg)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
