//! The two-sample adaptive test.
//!
//! A probe is designed on the first sample `Y₁` by minimizing the empirical
//! functional `J_{Y₁}` in `H^t`, then used with its bias-corrected critical
//! value on the independent second sample `Y₂`. When `J_{Y₁}` has no
//! minimizer the test does not reject.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::noise::{data_from_noise, sample_white_noise};
use crate::operator::{forward, KernelSpec};
use crate::optim::{recover_probe, PdpsConfig, PdpsSolver, SolveReport, SolveStatus};
use crate::scenario::{feature_functional, truth, Scenario};
use crate::spectral::{dual_sobolev_norm, GridFunction, PeriodicGrid};
use crate::testing::{
    j_functional, power_from_j, run_test, std_normal_cdf, std_normal_quantile, NormSpace, TestKind, TestOutcome,
    TestSpec,
};

/// Decision of the adaptive test on one pair of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptiveOutcome {
    /// A probe was found and applied to `Y₂`.
    Tested(TestOutcome),
    /// `J_{Y₁}` has no minimizer; the test does not reject.
    NoMinimizer,
    /// The solver hit its iteration limit; neither reject nor accept.
    ///
    /// Carries the outcome of the test built from the last iterate when
    /// its `s` is positive.
    NotConverged(Option<TestOutcome>),
}

impl AdaptiveOutcome {
    /// `Some(reject)` for decided outcomes.
    pub fn decision(&self) -> Option<bool> {
        match self {
            AdaptiveOutcome::Tested(o) => Some(o.reject),
            AdaptiveOutcome::NoMinimizer => Some(false),
            AdaptiveOutcome::NotConverged(_) => None,
        }
    }

    /// Decision including the last-iterate test of unconverged solves.
    ///
    /// The second sample is independent of the probe in either case, so
    /// this is still a level-α decision.
    pub fn provisional_decision(&self) -> bool {
        match self {
            AdaptiveOutcome::Tested(o) | AdaptiveOutcome::NotConverged(Some(o)) => o.reject,
            AdaptiveOutcome::NoMinimizer | AdaptiveOutcome::NotConverged(None) => false,
        }
    }
}

/// One application of the adaptive test.
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub y1: GridFunction,
    pub y2: GridFunction,
    pub report: SolveReport,
    pub outcome: AdaptiveOutcome,
}

/// Monte-Carlo estimate of the adaptive test's power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalPower {
    pub power: f64,
    pub se: f64,
    /// Samples whose design problem had no minimizer.
    pub no_min_count: usize,
    /// Samples excluded because the solver did not converge.
    pub not_converged_count: usize,
    pub samples: usize,
}

/// Conditional power of the design step for one `Y₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplePower {
    Power(f64),
    NoMinimizer,
    NotConverged,
}

/// Everything needed to run the adaptive test for one scenario on one grid.
#[derive(Debug, Clone)]
pub struct AdaptiveProblem {
    scenario: Scenario,
    ks: KernelSpec,
    phi: GridFunction,
    u: GridFunction,
    tu: GridFunction,
    solver: PdpsSolver,
}

impl AdaptiveProblem {
    pub fn new(scenario: Scenario, grid: PeriodicGrid, cfg: PdpsConfig) -> Result<Self> {
        let ks = scenario.kernel();
        let phi = feature_functional(&scenario, &grid)?;
        let u = truth(&scenario, &grid)?;
        let tu = forward(&u, &ks);
        let solver = PdpsSolver::new(&phi, &ks, scenario.t(), cfg)?;
        Ok(Self {
            scenario,
            ks,
            phi,
            u,
            tu,
            solver,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.ks
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.phi.grid()
    }

    pub fn phi(&self) -> &GridFunction {
        &self.phi
    }

    pub fn truth(&self) -> &GridFunction {
        &self.u
    }

    /// Noiseless data `T u`.
    pub fn noiseless(&self) -> &GridFunction {
        &self.tu
    }

    pub fn solver(&self) -> &PdpsSolver {
        &self.solver
    }

    /// Data sample `T u + σ Z` with noise from `(seed, stream)`.
    pub fn sample(&self, sigma: f64, seed: u64, stream: u64) -> Result<GridFunction> {
        let z = sample_white_noise(*self.grid(), seed, stream).z;
        data_from_noise(&self.tu, sigma, &z)
    }

    /// Runs the adaptive test on `(y1, y2)`.
    pub fn test(&self, y1: &GridFunction, y2: &GridFunction, sigma: f64, alpha: f64) -> Result<AdaptiveRun> {
        check_sigma(sigma)?;
        y1.same_grid(y2)?;
        let report = self.solver.solve(y1)?;
        let apply = |probe: GridFunction| -> Result<TestOutcome> {
            let spec = TestSpec::calibrated(probe, &self.phi, sigma, alpha, &self.ks, TestKind::Adaptive)?;
            run_test(y2, &spec)
        };
        let outcome = match report.status {
            SolveStatus::Minimizer => AdaptiveOutcome::Tested(apply(recover_probe(&report)?)?),
            SolveStatus::NoMinimizer => AdaptiveOutcome::NoMinimizer,
            SolveStatus::NotConverged if report.pair.s > 0.0 && !report.pair.e.is_zero() => {
                AdaptiveOutcome::NotConverged(Some(apply(report.pair.e.scaled(1.0 / report.pair.s))?))
            }
            SolveStatus::NotConverged => AdaptiveOutcome::NotConverged(None),
        };
        Ok(AdaptiveRun {
            y1: y1.clone(),
            y2: y2.clone(),
            report,
            outcome,
        })
    }

    /// Probe designed on `y1`, with the solve report.
    pub fn design(&self, y1: &GridFunction) -> Result<(SolveReport, Option<GridFunction>)> {
        let report = self.solver.solve(y1)?;
        let probe = if report.minimizer_found() {
            Some(recover_probe(&report)?)
        } else {
            None
        };
        Ok((report, probe))
    }

    /// `Q(q_α - J_{Tu}(Φ(y1))/σ)`, the power of the test given `y1`.
    pub fn conditional_power(&self, y1: &GridFunction, sigma: f64, alpha: f64) -> Result<SamplePower> {
        let (report, probe) = self.design(y1)?;
        Ok(match (report.status, probe) {
            (SolveStatus::Minimizer, Some(probe)) => {
                let j = j_functional(&probe, &self.phi, &self.tu, &self.ks, NormSpace::L2)?;
                SamplePower::Power(power_from_j(j, sigma, alpha)?)
            }
            (SolveStatus::NotConverged, _) => SamplePower::NotConverged,
            _ => SamplePower::NoMinimizer,
        })
    }

    /// Averages [`AdaptiveProblem::conditional_power`] over `samples`
    /// design draws. Sample `m` uses noise stream `2m` of `seed`.
    pub fn empirical_power(&self, sigma: f64, alpha: f64, samples: usize, seed: u64) -> Result<EmpiricalPower> {
        if samples == 0 {
            return Err(invalid("samples", "at least one sample is required"));
        }
        let powers = (0..samples as u64)
            .into_par_iter()
            .map(|m| {
                let y1 = self.sample(sigma, seed, 2 * m)?;
                self.conditional_power(&y1, sigma, alpha)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(aggregate(&powers))
    }
}

/// Mean and standard error over decided samples; no-minimizer samples
/// count as zero power.
pub fn aggregate(powers: &[SamplePower]) -> EmpiricalPower {
    let mut values = Vec::with_capacity(powers.len());
    let mut no_min_count = 0;
    let mut not_converged_count = 0;
    for p in powers {
        match p {
            SamplePower::Power(v) => values.push(*v),
            SamplePower::NoMinimizer => {
                no_min_count += 1;
                values.push(0.0);
            }
            SamplePower::NotConverged => not_converged_count += 1,
        }
    }
    let k = values.len();
    let (power, se) = if k == 0 {
        (0.0, 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / k as f64;
        let se = if k > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        (mean, se)
    };
    EmpiricalPower {
        power,
        se,
        no_min_count,
        not_converged_count,
        samples: powers.len(),
    }
}

/// Adaptive test for a scenario on the default grid.
pub fn adaptive_test(
    y1: &GridFunction,
    y2: &GridFunction,
    scenario: &Scenario,
    sigma: f64,
    alpha: f64,
    cfg: PdpsConfig,
) -> Result<AdaptiveRun> {
    AdaptiveProblem::new(*scenario, *y1.grid(), cfg)?.test(y1, y2, sigma, alpha)
}

/// Empirical power of the adaptive test on the default grid.
pub fn empirical_power(
    scenario: &Scenario,
    sigma: f64,
    alpha: f64,
    samples: usize,
    cfg: PdpsConfig,
    seed: u64,
) -> Result<EmpiricalPower> {
    AdaptiveProblem::new(*scenario, PeriodicGrid::default(), cfg)?.empirical_power(sigma, alpha, samples, seed)
}

/// Ingredients of the theoretical lower bound on the adaptive power.
#[derive(Debug, Clone)]
pub struct LowerBound {
    /// `min J^{H^t}_{Tu}`, or `None` when no minimizer was found.
    pub min_j: Option<f64>,
    /// Sorted Monte-Carlo draws of `‖Z‖_{H^{-t}}`.
    pub dual_norms: Vec<f64>,
}

/// Number of positive offsets in the τ grid of the lower bound.
pub const TAU_POINTS: usize = 50;

impl LowerBound {
    /// Solves the noiseless design problem and draws `mc_draws` noise
    /// norms from streams `2^40 + i` of `seed`.
    pub fn new(problem: &AdaptiveProblem, mc_draws: usize, seed: u64) -> Result<Self> {
        if mc_draws == 0 {
            return Err(invalid("mc_draws", "at least one draw is required"));
        }
        let (_, probe) = problem.design(problem.noiseless())?;
        let min_j = probe
            .map(|p| {
                j_functional(
                    &p,
                    problem.phi(),
                    problem.noiseless(),
                    problem.kernel(),
                    NormSpace::Sobolev(problem.scenario().t()),
                )
            })
            .transpose()?;
        let t = problem.scenario().t();
        let grid = *problem.grid();
        let mut dual_norms: Vec<f64> = (0..mc_draws as u64)
            .into_par_iter()
            .map(|i| dual_sobolev_norm(&sample_white_noise(grid, seed, (1 << 40) + i).z, t))
            .collect();
        dual_norms.sort_by(f64::total_cmp);
        Ok(Self { min_j, dual_norms })
    }

    /// Empirical `P(‖Z‖ < x)`.
    pub fn tail(&self, x: f64) -> f64 {
        let below = self.dual_norms.partition_point(|d| *d < x);
        below as f64 / self.dual_norms.len() as f64
    }

    /// `sup_τ Q(q_α + τ/σ) P(‖Z‖ < (-min J - τ)/(2σ))` over `τ = 0` and a
    /// log grid on `[10⁻³σ, -min J]`.
    pub fn bound(&self, sigma: f64, alpha: f64) -> Result<f64> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("sigma", format!("noise level must be positive, got {sigma}")));
        }
        let q = std_normal_quantile(alpha)?;
        let gap = match self.min_j {
            Some(j) if j < 0.0 => -j,
            _ => return Ok(0.0),
        };
        let term = |tau: f64| std_normal_cdf(q + tau / sigma) * self.tail((gap - tau) / (2.0 * sigma));
        let mut best = term(0.0);
        let lo = sigma * 1e-3;
        if lo < gap {
            let (a, b) = (lo.ln(), gap.ln());
            for i in 0..TAU_POINTS {
                let tau = (a + (b - a) * i as f64 / (TAU_POINTS - 1) as f64).exp();
                best = best.max(term(tau));
            }
        }
        Ok(best)
    }
}

/// Theoretical lower bound on the adaptive test's power.
pub fn power_lower_bound(
    scenario: &Scenario,
    sigma: f64,
    alpha: f64,
    cfg: PdpsConfig,
    mc_draws: usize,
    seed: u64,
) -> Result<f64> {
    let problem = AdaptiveProblem::new(*scenario, PeriodicGrid::default(), cfg)?;
    LowerBound::new(&problem, mc_draws, seed)?.bound(sigma, alpha)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(invalid("sigma", format!("noise level must be positive, got {sigma}")))
    }
}
