//! Linear tests `Ψ(Y) = 1{⟨Y, Φ⟩ > c}` for `H₀: ⟨φ, u⟩ ≤ 0`.
//!
//! A probe `Φ` with `T*Φ ≈ φ` gives a statistic whose bias is bounded by
//! `‖T*Φ - φ‖_∞` whenever `‖u‖_{L¹} ≤ 1`. Adding that bound to the Gaussian
//! quantile yields a level-α test for any probe, and its power under a
//! given truth depends only on the functional
//!
//! ```text
//! J(Φ) = (‖T*Φ - φ‖_∞ - ⟨T u, Φ⟩) / ‖Φ‖
//! ```
//!
//! through `β(Φ) = Q(q_α - J(Φ)/σ)`.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::operator::{Convolution, KernelSpec};
use crate::spectral::{sobolev_norm, GridFunction, SobolevIndex};

/// How the probe was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Unregularized,
    Plugin,
    Oracle,
    Adaptive,
}

/// Norm used in the denominator of `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpace {
    L2,
    Sobolev(SobolevIndex),
}

impl NormSpace {
    pub fn norm(self, f: &GridFunction) -> f64 {
        match self {
            NormSpace::L2 => f.l2_norm(),
            NormSpace::Sobolev(t) => sobolev_norm(f, t),
        }
    }
}

/// A probe together with its critical value.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSpec {
    pub probe: GridFunction,
    pub critical: f64,
    pub alpha: f64,
    pub kind: TestKind,
}

impl TestSpec {
    pub fn new(probe: GridFunction, critical: f64, alpha: f64, kind: TestKind) -> Result<Self> {
        check_alpha(alpha)?;
        if !critical.is_finite() {
            return Err(invalid("critical", "critical value must be finite"));
        }
        Ok(Self {
            probe,
            critical,
            alpha,
            kind,
        })
    }

    /// Test with the bias-corrected critical value of [`critical_value`].
    pub fn calibrated(
        probe: GridFunction,
        phi: &GridFunction,
        sigma: f64,
        alpha: f64,
        ks: &KernelSpec,
        kind: TestKind,
    ) -> Result<Self> {
        let critical = critical_value(&probe, phi, sigma, alpha, ks)?;
        Self::new(probe, critical, alpha, kind)
    }
}

/// Result of applying a [`TestSpec`] to data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub reject: bool,
    pub statistic: f64,
    pub critical: f64,
}

/// Inverse of the standard normal distribution function.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let mut q = Normal::standard().inverse_cdf(p);
    // Newton polish against the erfc-based distribution function
    for _ in 0..2 {
        let density = (-0.5 * q * q).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density > 0.0 {
            q -= (std_normal_cdf(q) - p) / density;
        }
    }
    Ok(q)
}

/// Standard normal distribution function `Q`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Bias bound `‖T*Φ - φ‖_∞` on the grid.
pub fn bias_bound(probe: &GridFunction, phi: &GridFunction, ks: &KernelSpec) -> Result<f64> {
    probe.same_grid(phi)?;
    let tp = Convolution::new(*probe.grid(), *ks).adjoint(probe)?;
    Ok(tp.sub(phi)?.max_norm())
}

/// `c* = σ q_{1-α} ‖Φ‖_{L²} + ‖T*Φ - φ‖_∞`.
pub fn critical_value(
    probe: &GridFunction,
    phi: &GridFunction,
    sigma: f64,
    alpha: f64,
    ks: &KernelSpec,
) -> Result<f64> {
    check_sigma(sigma)?;
    let q = std_normal_quantile(1.0 - alpha)?;
    Ok(sigma * q * probe.l2_norm() + bias_bound(probe, phi, ks)?)
}

/// Applies the test; ties do not reject.
pub fn run_test(y: &GridFunction, spec: &TestSpec) -> Result<TestOutcome> {
    let statistic = y.l2_inner(&spec.probe)?;
    Ok(TestOutcome {
        reject: statistic > spec.critical,
        statistic,
        critical: spec.critical,
    })
}

/// `J(Φ) = (‖T*Φ - φ‖_∞ - ⟨y, Φ⟩) / ‖Φ‖_W`.
///
/// With `y = T u` this is the power functional; with a data sample it is
/// its empirical counterpart.
pub fn j_functional(
    probe: &GridFunction,
    phi: &GridFunction,
    y: &GridFunction,
    ks: &KernelSpec,
    norm_space: NormSpace,
) -> Result<f64> {
    if probe.is_zero() {
        return Err(Error::ZeroProbe);
    }
    let bias = bias_bound(probe, phi, ks)?;
    let pairing = y.l2_inner(probe)?;
    Ok((bias - pairing) / norm_space.norm(probe))
}

/// `Q(q_α - J/σ)`.
pub fn power_from_j(j: f64, sigma: f64, alpha: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid("sigma", format!("noise level must be positive, got {sigma}")));
    }
    let q = std_normal_quantile(alpha)?;
    Ok(std_normal_cdf(q - j / sigma))
}

/// Power of the calibrated test with probe `Φ` under truth `u`.
pub fn exact_power(
    probe: &GridFunction,
    phi: &GridFunction,
    u: &GridFunction,
    sigma: f64,
    alpha: f64,
    ks: &KernelSpec,
) -> Result<f64> {
    let tu = Convolution::new(*u.grid(), *ks).apply(u)?;
    let j = j_functional(probe, phi, &tu, ks, NormSpace::L2)?;
    power_from_j(j, sigma, alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("level must lie in (0, 1), got {alpha}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(invalid("sigma", format!("noise level must be finite and nonnegative, got {sigma}")))
    }
}
