//! Primal-dual proximal splitting for `min_U Ĵ`.
//!
//! The primal variable `e` is kept as raw DFT coefficients, so that the
//! Riesz map, the `H^t` projection and the adjoint step are all diagonal.
//! One iteration costs one inverse and one forward FFT plus the projection
//! of the dual variable onto the `L¹` unit ball.

use rustfft::num_complex::Complex64;

use super::{proj_l1_ball_in_place, PdpsConfig, ProbePair, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::operator::{Convolution, KernelSpec};
use crate::spectral::{dot, Fourier, GridFunction, PeriodicGrid, SobolevIndex};

/// Per-iteration diagnostics passed to an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInfo {
    pub iteration: usize,
    pub objective: f64,
    pub e_norm: f64,
    pub s: f64,
    pub change: f64,
}

/// Solver for one `(φ, T, t)` problem, reusable across data samples.
#[derive(Debug, Clone)]
pub struct PdpsSolver {
    grid: PeriodicGrid,
    t: SobolevIndex,
    cfg: PdpsConfig,
    fourier: Fourier,
    phi: Vec<f64>,
    /// `m(k)` in FFT order.
    symbol: Vec<f64>,
    /// `(1 + k²)^t` in FFT order.
    weight: Vec<f64>,
    /// `m(k) / (1 + k²)^t`, the adjoint step multiplier.
    adj: Vec<f64>,
    /// Raw coefficients of `Φ₀/‖Φ₀‖_{H^t}` and the matching `s`.
    e0: Vec<Complex64>,
    s0: f64,
}

impl PdpsSolver {
    pub fn new(phi: &GridFunction, ks: &KernelSpec, t: SobolevIndex, cfg: PdpsConfig) -> Result<Self> {
        cfg.validate()?;
        if phi.is_zero() {
            return Err(Error::ZeroProbe);
        }
        let grid = *phi.grid();
        let op = Convolution::new(grid, *ks);
        let fourier = op.fourier().clone();
        let symbol = op.symbol().to_vec();
        let weight = t.weights(&grid);
        let adj: Vec<f64> = symbol.iter().zip(&weight).map(|(m, w)| m / w).collect();

        let mut scratch = fourier.scratch();
        let mut e0 = vec![Complex64::new(0.0, 0.0); grid.len()];
        fourier.forward_raw(phi.values(), &mut e0, &mut scratch);
        for (c, m) in e0.iter_mut().zip(&symbol) {
            *c /= *m;
        }
        let mut solver = Self {
            grid,
            t,
            cfg,
            fourier,
            phi: phi.values().to_vec(),
            symbol,
            weight,
            adj,
            e0,
            s0: 0.0,
        };
        let nrm = solver.raw_norm(&solver.e0);
        for c in solver.e0.iter_mut() {
            *c /= nrm;
        }
        solver.s0 = 1.0 / nrm;
        Ok(solver)
    }

    pub fn config(&self) -> &PdpsConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn sobolev_index(&self) -> SobolevIndex {
        self.t
    }

    /// `H^t` norm of raw coefficients.
    fn raw_norm(&self, c: &[Complex64]) -> f64 {
        let n = self.grid.len() as f64;
        let sum: f64 = c.iter().zip(&self.weight).map(|(c, w)| w * c.norm_sqr()).sum();
        (self.grid.period() * sum).sqrt() / n
    }

    /// Grid values from raw coefficients, optionally filtered by `symbol`.
    fn synthesize(&self, c: &[Complex64], symbol: Option<&[f64]>, buf: &mut [Complex64], scratch: &mut [Complex64]) -> Vec<f64> {
        match symbol {
            Some(m) => {
                for ((b, c), m) in buf.iter_mut().zip(c).zip(m) {
                    *b = c * m;
                }
            }
            None => buf.copy_from_slice(c),
        }
        self.fourier.inverse_raw(buf, scratch);
        let inv_n = 1.0 / self.grid.len() as f64;
        buf.iter().map(|b| b.re * inv_n).collect()
    }

    /// `Ĵ` for raw coefficients `e` and `s`; `yhat` are raw data coefficients.
    fn objective(&self, e: &[Complex64], s: f64, yhat: &[Complex64], buf: &mut [Complex64], scratch: &mut [Complex64]) -> f64 {
        let te = self.synthesize(e, Some(&self.symbol), buf, scratch);
        let residual = te
            .iter()
            .zip(&self.phi)
            .fold(0.0_f64, |m, (a, p)| m.max((a - s * p).abs()));
        let n = self.grid.len() as f64;
        let pairing: f64 = e.iter().zip(yhat).map(|(a, b)| (a * b.conj()).re).sum();
        residual - self.grid.period() * pairing / (n * n)
    }

    /// Minimizes `Ĵ` for data `y`.
    pub fn solve(&self, y: &GridFunction) -> Result<SolveReport> {
        self.run(y, None)
    }

    /// Like [`PdpsSolver::solve`], reporting every iteration to `observer`.
    pub fn solve_observed(&self, y: &GridFunction, observer: &mut dyn FnMut(&IterationInfo)) -> Result<SolveReport> {
        self.run(y, Some(observer))
    }

    fn run(&self, y: &GridFunction, mut observer: Option<&mut dyn FnMut(&IterationInfo)>) -> Result<SolveReport> {
        if y.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        let nf = n as f64;
        let period = self.grid.period();
        let quad = period / nf;
        let sob = period / (nf * nf);
        let radius = nf / period;
        let PdpsConfig { tau, rho, max_iter, tol, s_floor } = self.cfg;
        let zero = Complex64::new(0.0, 0.0);

        let mut scratch = self.fourier.scratch();
        let mut buf = vec![zero; n];
        let mut yhat = vec![zero; n];
        self.fourier.forward_raw(y.values(), &mut yhat, &mut scratch);
        // τ R y
        let shift: Vec<Complex64> = yhat.iter().zip(&self.weight).map(|(c, w)| c * (tau / w)).collect();

        let mut e = self.e0.clone();
        let mut s = self.s0;
        let mut e_new = vec![zero; n];
        let mut r = self.synthesize(&e, Some(&self.symbol), &mut buf, &mut scratch);
        for (ri, p) in r.iter_mut().zip(&self.phi) {
            *ri -= s * p;
        }
        let mut rhat = vec![zero; n];
        self.fourier.forward_raw(&r, &mut rhat, &mut scratch);
        let mut work = Vec::with_capacity(n);

        let mut iterations = 0;
        let mut change = f64::INFINITY;
        let mut converged = false;
        while iterations < max_iter {
            iterations += 1;

            // primal step: prox_τF(x - τ K* r)
            let phi_r = quad * dot(&self.phi, &r);
            let mut norm_sq = 0.0;
            for q in 0..n {
                let v = e[q] - rhat[q] * (tau * self.adj[q]) + shift[q];
                norm_sq += self.weight[q] * v.norm_sqr();
                e_new[q] = v;
            }
            let e_norm = (sob * norm_sq).sqrt();
            if e_norm > 1.0 {
                let inv = 1.0 / e_norm;
                for v in e_new.iter_mut() {
                    *v *= inv;
                }
            }
            let s_new = (s + tau * phi_r).max(0.0);

            let mut diff_sq = 0.0;
            let mut x_sq = 0.0;
            for q in 0..n {
                let d = e_new[q] - e[q];
                diff_sq += self.weight[q] * d.norm_sqr();
                x_sq += self.weight[q] * e[q].norm_sqr();
                // extrapolation, filtered by the symbol for K x̄
                buf[q] = (e_new[q] + d) * self.symbol[q];
            }
            let ds = s_new - s;
            change = (sob * diff_sq + ds * ds).sqrt() / (1.0 + (sob * x_sq + s * s).sqrt());
            let s_bar = s_new + ds;

            // dual step: proj_{L¹ ball}(r + ρ K x̄)
            self.fourier.inverse_raw(&mut buf, &mut scratch);
            let inv_n = 1.0 / nf;
            for ((ri, b), p) in r.iter_mut().zip(&buf).zip(&self.phi) {
                *ri += rho * (b.re * inv_n - s_bar * p);
            }
            proj_l1_ball_in_place(&mut r, radius, &mut work);
            self.fourier.forward_raw(&r, &mut rhat, &mut scratch);

            std::mem::swap(&mut e, &mut e_new);
            s = s_new;

            if let Some(obs) = observer.as_mut() {
                let objective = self.objective(&e, s, &yhat, &mut buf, &mut scratch);
                obs(&IterationInfo {
                    iteration: iterations,
                    objective,
                    e_norm: self.raw_norm(&e),
                    s,
                    change,
                });
            }
            if change < tol {
                converged = true;
                break;
            }
        }

        let objective = self.objective(&e, s, &yhat, &mut buf, &mut scratch);
        let e_norm = self.raw_norm(&e);
        let values = self.synthesize(&e, None, &mut buf, &mut scratch);
        let status = if !converged {
            SolveStatus::NotConverged
        } else if s > s_floor * e_norm.max(1.0) {
            SolveStatus::Minimizer
        } else {
            SolveStatus::NoMinimizer
        };
        Ok(SolveReport {
            pair: ProbePair::new(GridFunction::new(self.grid, values)?, s),
            objective,
            iterations,
            last_change: change,
            status,
        })
    }
}

/// Minimizes `Ĵ` over `U` for data `y`, starting from the normalized
/// unregularized probe.
pub fn pdps_solve(
    y: &GridFunction,
    phi: &GridFunction,
    ks: &KernelSpec,
    t: SobolevIndex,
    cfg: PdpsConfig,
) -> Result<SolveReport> {
    y.same_grid(phi)?;
    PdpsSolver::new(phi, ks, t, cfg)?.solve(y)
}

/// [`pdps_solve`] with a per-iteration observer.
pub fn pdps_solve_observed(
    y: &GridFunction,
    phi: &GridFunction,
    ks: &KernelSpec,
    t: SobolevIndex,
    cfg: PdpsConfig,
    observer: &mut dyn FnMut(&IterationInfo),
) -> Result<SolveReport> {
    y.same_grid(phi)?;
    PdpsSolver::new(phi, ks, t, cfg)?.solve_observed(y, observer)
}
