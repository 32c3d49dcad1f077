//! Regularized hypothesis testing for linear features of a periodic
//! deconvolution problem observed under Gaussian white noise.
//!
//! The crate is organized bottom-up:
//!
//! * [`spectral`]: periodic grids, the discrete periodic Fourier transform,
//!   Sobolev norms and the Riesz map between `H^{-t}` and `H^t`.
//! * [`operator`]: the convolution operator as a Fourier multiplier, its
//!   exact inverse and Tikhonov plug-in probes.
//! * [`scenario`]: the β-kernel feature functionals and truths.
//! * [`noise`]: reproducible white-noise draws and data generation.
//! * [`testing`]: test statistics, critical values, the power functional
//!   `J` and closed-form powers.
//! * [`optim`]: the convex surrogate, L¹-ball projection and the
//!   primal-dual solver that finds power-optimal probes.
//! * [`adaptive`]: the two-sample adaptive test and its power estimates.
//! * [`experiment`]: noise-level sweeps producing [`PowerRecord`]s.
//!
//! All grid functions hold point samples of the underlying continuum
//! function; integrals use the rectangle rule with weight `P/n`.

pub mod adaptive;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod operator;
pub mod optim;
pub mod scenario;
pub mod spectral;
pub mod testing;

pub use adaptive::{AdaptiveOutcome, AdaptiveRun, EmpiricalPower};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentOutput, PowerRecord, TestLabel};
pub use noise::NoiseDraw;
pub use operator::{Convolution, KernelSpec};
pub use optim::{PdpsConfig, ProbePair, SolveReport, SolveStatus};
pub use scenario::{BetaKernelSpec, Scenario, ScenarioKind};
pub use spectral::{GridFunction, PeriodicGrid, SobolevIndex, Spectrum};
pub use testing::{NormSpace, TestKind, TestOutcome, TestSpec};
