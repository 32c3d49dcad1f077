//! Run configuration: defaults, an optional TOML file, then command-line
//! overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use probetest::experiment::log_grid;
use probetest::{ExperimentConfig, PdpsConfig, Scenario, ScenarioKind};
use serde::Deserialize;

use crate::CliError;

/// A number given either directly or as a string such as `"5/128"`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Rational {
    Number(f64),
    Text(String),
}

impl Rational {
    pub fn value(&self, field: &str) -> Result<f64, CliError> {
        match self {
            Rational::Number(v) => Ok(*v),
            Rational::Text(s) => parse_rational(s).map_err(|e| CliError::config(field, e)),
        }
    }
}

/// Parses `p/q` or a decimal number.
pub fn parse_rational(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number or fraction"));
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse(q)?;
            if q == 0.0 {
                return Err(format!("`{s}` has a zero denominator"));
            }
            Ok(parse(p)? / q)
        }
        None => parse(s),
    }
}

/// Every key is optional; missing keys keep their defaults.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub a: Option<f64>,
    pub l: Option<Rational>,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    pub sigma_points: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub plugin_betas: Option<Vec<f64>>,
    pub bound_draws: Option<usize>,
    pub grid_points: Option<usize>,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub s_floor: Option<f64>,
    pub out_csv: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
}

impl Overrides {
    /// Reads a TOML file.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Values set in `other` replace those in `self`.
    pub fn merge(self, other: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            scenario, a, l, lambda, t, alpha, sigma_min, sigma_max, sigma_points, samples, seed, plugin_betas,
            bound_draws, grid_points, tau, rho, max_iter, tol, s_floor, out_csv, out_svg
        )
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub out_csv: PathBuf,
    pub out_svg: Option<PathBuf>,
}

pub const DEFAULT_L: &str = "5/128";

impl RunConfig {
    pub fn resolve(o: Overrides) -> Result<Self, CliError> {
        let kind: ScenarioKind = o
            .scenario
            .as_deref()
            .unwrap_or("s1")
            .parse()
            .map_err(|e: probetest::Error| CliError::Config(e.to_string()))?;
        let l = match &o.l {
            Some(l) => l.value("l")?,
            None => parse_rational(DEFAULT_L).expect("valid default"),
        };
        let scenario = Scenario::new(
            kind,
            o.a.unwrap_or(2.0),
            l,
            o.lambda.unwrap_or(1.0),
            o.t.unwrap_or(0.51),
        )
        .map_err(core_config)?;

        let sigma_min = o.sigma_min.unwrap_or(1e-6);
        let sigma_max = o.sigma_max.unwrap_or(1.0);
        let points = o.sigma_points.unwrap_or(25);
        if !(sigma_min > 0.0 && sigma_min.is_finite()) {
            return Err(CliError::config("sigma_min", format!("must be positive, got {sigma_min}")));
        }
        if !(sigma_max.is_finite() && (sigma_max > sigma_min || (points == 1 && sigma_max == sigma_min))) {
            return Err(CliError::config("sigma_max", format!("must exceed sigma_min, got {sigma_max}")));
        }
        if points == 0 {
            return Err(CliError::config("sigma_points", "at least one point is required"));
        }

        let base = PdpsConfig::default();
        let mut experiment = ExperimentConfig::new(scenario);
        experiment.alpha = o.alpha.unwrap_or(experiment.alpha);
        experiment.sigmas = log_grid(sigma_min, sigma_max, points);
        experiment.samples = o.samples.unwrap_or(experiment.samples);
        experiment.seed = o.seed.unwrap_or(experiment.seed);
        experiment.plugin_betas = o.plugin_betas.clone().unwrap_or_default();
        experiment.bound_draws = o.bound_draws.unwrap_or(experiment.bound_draws);
        experiment.grid_points = o.grid_points.unwrap_or(experiment.grid_points);
        experiment.pdps = PdpsConfig {
            tau: o.tau.unwrap_or(base.tau),
            rho: o.rho.unwrap_or(base.rho),
            max_iter: o.max_iter.unwrap_or(base.max_iter),
            tol: o.tol.unwrap_or(base.tol),
            s_floor: o.s_floor.unwrap_or(base.s_floor),
        };
        experiment.validate().map_err(core_config)?;

        Ok(Self {
            experiment,
            sigma_min,
            sigma_max,
            out_csv: o.out_csv.unwrap_or_else(|| PathBuf::from("power.csv")),
            out_svg: o.out_svg,
        })
    }

    /// `# key = value` lines echoing every setting.
    pub fn header(&self) -> String {
        let e = &self.experiment;
        let s = &e.scenario;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "# {k} = {v}");
        };
        line("scenario", s.kind().label().to_string());
        line("a", s.a().to_string());
        line("l", s.l().to_string());
        line("lambda", s.lambda().to_string());
        line("t", s.t().value().to_string());
        line("beta", s.beta().to_string());
        line("gamma", s.gamma().to_string());
        line("alpha", e.alpha.to_string());
        line("sigma_min", self.sigma_min.to_string());
        line("sigma_max", self.sigma_max.to_string());
        line("sigma_points", e.sigmas.len().to_string());
        line("samples", e.samples.to_string());
        line("seed", e.seed.to_string());
        line("plugin_betas", format!("{:?}", e.plugin_betas));
        line("bound_draws", e.bound_draws.to_string());
        line("grid_points", e.grid_points.to_string());
        line("kernel_bandwidth", s.kernel().b().to_string());
        line("tau", e.pdps.tau.to_string());
        line("rho", e.pdps.rho.to_string());
        line("max_iter", e.pdps.max_iter.to_string());
        line("tol", e.pdps.tol.to_string());
        line("s_floor", e.pdps.s_floor.to_string());
        line("single_sample_sigma_factor", "1/sqrt(2)".to_string());
        out
    }
}

fn core_config(e: probetest::Error) -> CliError {
    CliError::Config(e.to_string())
}
