//! Convex surrogate for the power functional and its primal-dual solver.
//!
//! Minimizing `J(Φ) = (‖T*Φ - φ‖_∞ - ⟨y, Φ⟩)/‖Φ‖_{H^t}` is equivalent to
//! minimizing the positively homogeneous convex function
//!
//! ```text
//! Ĵ(e, s) = ‖T*e - s φ‖_∞ - ⟨y, e⟩
//! ```
//!
//! over `U = {‖e‖_{H^t} ≤ 1, s ≥ 0}` and setting `Φ = e/s`. Writing
//! `Ĵ = F(e, s) + G(K(e, s))` with `K(e, s) = T*e - s φ` and `G = ‖·‖_∞`
//! gives a saddle-point problem solved by [`pdps_solve`]. All spaces use
//! the continuum inner products: `H^t × ℝ` for the primal variable and
//! the `L²` quadrature pairing for the dual one.

mod l1ball;
mod pdps;

pub use l1ball::{proj_l1_ball, proj_l1_ball_in_place};
pub use pdps::{pdps_solve, pdps_solve_observed, IterationInfo, PdpsSolver};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::operator::{Convolution, KernelSpec};
use crate::spectral::{riesz_map, sobolev_inner, sobolev_norm, GridFunction, SobolevIndex};

/// Surrogate variables `(e, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePair {
    pub e: GridFunction,
    pub s: f64,
}

impl ProbePair {
    pub fn new(e: GridFunction, s: f64) -> Self {
        Self { e, s }
    }

    /// Pair representing the probe `Φ`, i.e. `(Φ/‖Φ‖_{H^t}, 1/‖Φ‖_{H^t})`.
    pub fn from_probe(probe: &GridFunction, t: SobolevIndex) -> Result<Self> {
        if probe.is_zero() {
            return Err(Error::ZeroProbe);
        }
        let nrm = sobolev_norm(probe, t);
        Ok(Self::new(probe.scaled(1.0 / nrm), 1.0 / nrm))
    }

    /// Product norm `(‖e‖²_{H^t} + s²)^{1/2}`.
    pub fn norm(&self, t: SobolevIndex) -> f64 {
        sobolev_norm(&self.e, t).hypot(self.s)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.e.scaled(c), c * self.s)
    }

    pub fn is_feasible(&self, t: SobolevIndex) -> bool {
        sobolev_norm(&self.e, t) <= 1.0 + 1e-9 && self.s >= 0.0
    }
}

/// Step sizes and stopping parameters of the primal-dual iteration.
///
/// The dual variable is a density of unit `L¹` mass, so its `L²` size grows
/// with the grid; the default favours large dual steps accordingly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpsConfig {
    pub tau: f64,
    pub rho: f64,
    pub max_iter: usize,
    /// Bound on `‖x^{k+1} - x^k‖ / (1 + ‖x^k‖)` that ends the iteration.
    pub tol: f64,
    /// A converged `s` at or below `s_floor · max(1, ‖e‖)` means no minimizer.
    pub s_floor: f64,
}

impl Default for PdpsConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            rho: 4.8,
            max_iter: 20_000,
            tol: 1e-8,
            s_floor: 1e-8,
        }
    }
}

/// Upper bound on `‖K‖` used to validate step sizes.
pub const OPERATOR_NORM_BOUND: f64 = 2.0;

impl PdpsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("step must be positive, got {}", self.tau)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho", format!("step must be positive, got {}", self.rho)));
        }
        if self.tau * self.rho * OPERATOR_NORM_BOUND * OPERATOR_NORM_BOUND >= 1.0 {
            return Err(invalid(
                "tau",
                format!("tau * rho * 4 must be below 1, got {}", self.tau * self.rho * 4.0),
            ));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "at least one iteration is required"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.s_floor >= 0.0) {
            return Err(invalid("s_floor", format!("threshold must be nonnegative, got {}", self.s_floor)));
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    /// Converged with `s` bounded away from zero.
    Minimizer,
    /// Converged with `s` collapsed: `J` has no minimizer.
    NoMinimizer,
    /// `max_iter` reached before the stopping rule fired.
    NotConverged,
}

/// Output of [`pdps_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub pair: ProbePair,
    /// `Ĵ` at `pair`.
    pub objective: f64,
    pub iterations: usize,
    /// Relative change at the last iteration.
    pub last_change: f64,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn minimizer_found(&self) -> bool {
        self.status == SolveStatus::Minimizer
    }

    pub fn converged(&self) -> bool {
        self.status != SolveStatus::NotConverged
    }
}

/// `Ĵ(e, s) = ‖T*e - s φ‖_∞ - ⟨y, e⟩`.
pub fn surrogate_objective(p: &ProbePair, phi: &GridFunction, y: &GridFunction, ks: &KernelSpec) -> Result<f64> {
    let k = apply_k(p, phi, ks)?;
    Ok(k.max_norm() - y.l2_inner(&p.e)?)
}

/// `K(e, s) = T*e - s φ`.
pub fn apply_k(p: &ProbePair, phi: &GridFunction, ks: &KernelSpec) -> Result<GridFunction> {
    p.e.same_grid(phi)?;
    let te = Convolution::new(*p.e.grid(), *ks).adjoint(&p.e)?;
    te.add_scaled(-p.s, phi)
}

/// `K* r = (R T r, -⟨φ, r⟩)`, the adjoint for the `H^t × ℝ` geometry.
pub fn apply_k_star(r: &GridFunction, phi: &GridFunction, ks: &KernelSpec, t: SobolevIndex) -> Result<ProbePair> {
    r.same_grid(phi)?;
    let tr = Convolution::new(*r.grid(), *ks).apply(r)?;
    Ok(ProbePair::new(riesz_map(&tr, t), -phi.l2_inner(r)?))
}

/// `⟨(e, s), (f, q)⟩ = ⟨e, f⟩_{H^t} + s q`.
pub fn pair_inner(a: &ProbePair, b: &ProbePair, t: SobolevIndex) -> Result<f64> {
    Ok(sobolev_inner(&a.e, &b.e, t)? + a.s * b.s)
}

/// `prox_{τF}(e, s)`: shift `e` by `τ R y`, then project onto `U`.
pub fn prox_f(p: &ProbePair, y: &GridFunction, tau: f64, t: SobolevIndex) -> Result<ProbePair> {
    if !(tau > 0.0) {
        return Err(invalid("tau", format!("step must be positive, got {tau}")));
    }
    let shifted = p.e.add_scaled(tau, &riesz_map(y, t))?;
    let nrm = sobolev_norm(&shifted, t);
    let e = if nrm > 1.0 { shifted.scaled(1.0 / nrm) } else { shifted };
    Ok(ProbePair::new(e, p.s.max(0.0)))
}

/// Probe `Φ = e/s` from a solve that found a minimizer.
pub fn recover_probe(rep: &SolveReport) -> Result<GridFunction> {
    if !rep.minimizer_found() {
        return Err(Error::NoMinimizer);
    }
    Ok(rep.pair.e.scaled(1.0 / rep.pair.s))
}

/// Power-iteration estimate of `‖K‖_{H^t × ℝ → L²}`.
pub fn estimate_operator_norm(
    phi: &GridFunction,
    ks: &KernelSpec,
    t: SobolevIndex,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    let grid = *phi.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x = ProbePair::new(GridFunction::new(grid, values)?, 1.0);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        x = x.scaled(1.0 / x.norm(t));
        let kx = apply_k(&x, phi, ks)?;
        estimate = kx.l2_norm();
        x = apply_k_star(&kx, phi, ks, t)?;
    }
    Ok(estimate)
}
