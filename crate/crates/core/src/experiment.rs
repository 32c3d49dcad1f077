//! Power curves over a grid of noise levels.
//!
//! The unregularized, oracle and plug-in tests use one data sample while
//! the adaptive test uses two. For a fair comparison the one-sample tests
//! are evaluated at `σ/√2`, the noise level of the averaged pair.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::adaptive::{AdaptiveProblem, LowerBound};
use crate::error::{invalid, Error, Result};
use crate::operator::{plugin_probe, unregularized_probe};
use crate::optim::{pdps_solve, recover_probe, PdpsConfig};
use crate::scenario::Scenario;
use crate::spectral::{GridFunction, PeriodicGrid, SobolevIndex, DEFAULT_POINTS};
use crate::testing::{j_functional, power_from_j, NormSpace};

/// Which test a [`PowerRecord`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestLabel {
    Adaptive,
    /// Theoretical lower bound on the adaptive power.
    Bound,
    Oracle,
    Plugin(f64),
    Unregularized,
}

impl TestLabel {
    pub fn name(&self) -> String {
        match self {
            TestLabel::Adaptive => "adaptive".into(),
            TestLabel::Bound => "bound".into(),
            TestLabel::Oracle => "oracle".into(),
            TestLabel::Plugin(beta) => format!("plugin-{beta:e}"),
            TestLabel::Unregularized => "unregularized".into(),
        }
    }

    /// Whether the curve is evaluated at `σ/√2`.
    pub fn single_sample(&self) -> bool {
        matches!(self, TestLabel::Oracle | TestLabel::Plugin(_) | TestLabel::Unregularized)
    }
}

impl fmt::Display for TestLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TestLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(TestLabel::Adaptive),
            "bound" => Ok(TestLabel::Bound),
            "oracle" => Ok(TestLabel::Oracle),
            "unregularized" => Ok(TestLabel::Unregularized),
            other => match other.strip_prefix("plugin-").map(str::parse::<f64>) {
                Some(Ok(beta)) if beta > 0.0 => Ok(TestLabel::Plugin(beta)),
                _ => Err(invalid("test", format!("unknown test label `{other}`"))),
            },
        }
    }
}

/// One point of one power curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRecord {
    pub scenario: crate::scenario::ScenarioKind,
    pub test: TestLabel,
    pub a: f64,
    pub l: f64,
    pub lambda: f64,
    pub t: f64,
    /// Nominal noise level of the sweep; single-sample tests ran at `σ/√2`.
    pub sigma: f64,
    pub power: f64,
    pub se: f64,
    pub no_min_count: usize,
}

/// Output ordering: `σ` descending, then test label alphabetically.
pub fn record_order(a: &PowerRecord, b: &PowerRecord) -> Ordering {
    b.sigma.total_cmp(&a.sigma).then_with(|| a.test.name().cmp(&b.test.name()))
}

/// Parameters of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub alpha: f64,
    /// Noise levels, strictly positive and strictly descending.
    pub sigmas: Vec<f64>,
    /// Monte-Carlo samples per noise level for the adaptive test.
    pub samples: usize,
    pub plugin_betas: Vec<f64>,
    pub seed: u64,
    pub pdps: PdpsConfig,
    pub grid_points: usize,
    /// Noise draws for the lower bound; zero skips the bound curve.
    pub bound_draws: usize,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            alpha: 0.1,
            sigmas: log_grid(1e-6, 1.0, 25),
            samples: 100,
            plugin_betas: Vec::new(),
            seed: 0,
            pdps: PdpsConfig::default(),
            grid_points: DEFAULT_POINTS,
            bound_draws: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("level must lie in (0, 1), got {}", self.alpha)));
        }
        if self.sigmas.is_empty() {
            return Err(invalid("sigma", "noise grid is empty"));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(invalid("sigma", format!("noise levels must be positive, got {s}")));
        }
        if self.sigmas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("sigma", "noise levels must be strictly descending"));
        }
        if self.samples == 0 {
            return Err(invalid("samples", "at least one sample is required"));
        }
        if let Some(b) = self.plugin_betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(invalid("plugin_betas", format!("regularization parameters must be positive, got {b}")));
        }
        self.pdps.validate()?;
        PeriodicGrid::new(self.grid_points)?;
        Ok(())
    }
}

/// `points` log-spaced values from `max` down to `min`.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![max];
    }
    let (a, b) = (max.ln(), min.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Oracle probe: the minimizer of `J^{L²}_{Tu}` found from noiseless data.
///
/// Returns `None` when the solver reports no minimizer or does not converge.
pub fn oracle_probe(problem: &AdaptiveProblem, cfg: PdpsConfig) -> Result<Option<GridFunction>> {
    let rep = pdps_solve(problem.noiseless(), problem.phi(), problem.kernel(), SobolevIndex::L2, cfg)?;
    if rep.minimizer_found() {
        Ok(Some(recover_probe(&rep)?))
    } else {
        Ok(None)
    }
}

/// Records of a sweep plus solver bookkeeping that has no CSV column.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Records in output order.
    pub records: Vec<PowerRecord>,
    /// `(σ, count)` of adaptive samples excluded for non-convergence.
    pub not_converged: Vec<(f64, usize)>,
}

/// Runs the sweep and returns records in output order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PowerRecord>> {
    Ok(run_experiment_with_progress(cfg, &|_, _| {})?.records)
}

/// Full sweep, calling `progress(done, total)` after each noise level.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let s = cfg.scenario;
    let grid = PeriodicGrid::new(cfg.grid_points)?;
    let problem = AdaptiveProblem::new(s, grid, cfg.pdps)?;
    let (phi, tu, ks) = (problem.phi(), problem.noiseless(), problem.kernel());
    let j_of = |probe: &GridFunction| j_functional(probe, phi, tu, ks, NormSpace::L2);

    let mut single: Vec<(TestLabel, Option<f64>)> = vec![(TestLabel::Unregularized, Some(j_of(&unregularized_probe(phi, ks))?))];
    let oracle_j = oracle_probe(&problem, cfg.pdps)?.map(|p| j_of(&p)).transpose()?;
    single.push((TestLabel::Oracle, oracle_j));
    for beta in &cfg.plugin_betas {
        single.push((TestLabel::Plugin(*beta), Some(j_of(&plugin_probe(phi, ks, *beta)?)?)));
    }

    let record = |test, sigma, power, se, no_min_count| PowerRecord {
        scenario: s.kind(),
        test,
        a: s.a(),
        l: s.l(),
        lambda: s.lambda(),
        t: s.t().value(),
        sigma,
        power,
        se,
        no_min_count,
    };

    let bound = if cfg.bound_draws > 0 {
        Some(LowerBound::new(&problem, cfg.bound_draws, cfg.seed)?)
    } else {
        None
    };

    let mut records = Vec::new();
    let mut not_converged = Vec::new();
    let total = cfg.sigmas.len();
    for (i, &sigma) in cfg.sigmas.iter().enumerate() {
        for (label, j) in &single {
            let (power, no_min) = match j {
                Some(j) => (power_from_j(*j, sigma / std::f64::consts::SQRT_2, cfg.alpha)?, 0),
                None => (0.0, 1),
            };
            records.push(record(*label, sigma, power, 0.0, no_min));
        }
        let est = problem.empirical_power(sigma, cfg.alpha, cfg.samples, cfg.seed)?;
        records.push(record(TestLabel::Adaptive, sigma, est.power, est.se, est.no_min_count));
        not_converged.push((sigma, est.not_converged_count));
        if let Some(lb) = &bound {
            records.push(record(TestLabel::Bound, sigma, lb.bound(sigma, cfg.alpha)?, 0.0, 0));
        }
        progress(i + 1, total);
    }
    records.sort_by(record_order);
    Ok(ExperimentOutput { records, not_converged })
}
