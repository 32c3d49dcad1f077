//! Feature functionals and truths built from symmetric β-kernels.
//!
//! The feature functional `φ_{l,β}` is proportional to
//! `x^{β-1} (l - x)^{β-1}` on `[0, l]` and normalized to unit `L²` norm.
//! The truth `u_{l,λ,γ}` is the same kernel with shape `γ`, shifted to
//! `[(1-λ) l, (2-λ) l]` and normalized to unit `L¹` norm, so `λ` is the
//! overlap of the two supports.
//!
//! Supports are mapped to the grid by rounding the shift and the length to
//! whole grid spacings; normalization acts on the sampled vectors.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::operator::KernelSpec;
use crate::spectral::{GridFunction, PeriodicGrid, SobolevIndex};

/// Which of the three built-in testing problems a [`Scenario`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    /// `β = 1 + 2a`, `γ = 2`: `φ ∈ ran T*` and a smooth truth.
    CompatibleSmooth,
    /// `β = 1 + 2a`, `γ = 1`: `φ ∈ ran T*` and an indicator truth.
    CompatibleNonsmooth,
    /// `β = 1`, `γ = 2`: indicator functional outside `ran T*`.
    IncompatibleSmooth,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::CompatibleSmooth,
        ScenarioKind::CompatibleNonsmooth,
        ScenarioKind::IncompatibleSmooth,
    ];

    /// Short label, `s1`, `s2` or `s3`.
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::CompatibleSmooth => "s1",
            ScenarioKind::CompatibleNonsmooth => "s2",
            ScenarioKind::IncompatibleSmooth => "s3",
        }
    }

    /// `(β, γ)` for kernel order `a`.
    pub fn shapes(self, a: f64) -> (f64, f64) {
        match self {
            ScenarioKind::CompatibleSmooth => (1.0 + 2.0 * a, 2.0),
            ScenarioKind::CompatibleNonsmooth => (1.0 + 2.0 * a, 1.0),
            ScenarioKind::IncompatibleSmooth => (1.0, 2.0),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "compatible-smooth" => Ok(ScenarioKind::CompatibleSmooth),
            "s2" | "compatible-nonsmooth" => Ok(ScenarioKind::CompatibleNonsmooth),
            "s3" | "incompatible-smooth" => Ok(ScenarioKind::IncompatibleSmooth),
            other => Err(invalid("scenario", format!("unknown scenario `{other}` (expected s1, s2 or s3)"))),
        }
    }
}

/// Symmetric β-kernel `x^{shape-1} (l - x)^{shape-1}` on `[0, l]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaKernelSpec {
    l: f64,
    shape: f64,
}

impl BetaKernelSpec {
    pub fn new(l: f64, shape: f64) -> Result<Self> {
        if !(l > 0.0 && l < 1.0) {
            return Err(invalid("l", format!("support length must lie in (0, 1), got {l}")));
        }
        if !(shape.is_finite() && shape >= 1.0) {
            return Err(invalid("shape", format!("kernel shape must be at least 1, got {shape}")));
        }
        Ok(Self { l, shape })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Unnormalized samples of the kernel shifted right by `shift`.
    ///
    /// The shift and the support length are rounded to whole grid
    /// spacings; both endpoints are sampled.
    pub fn sample(&self, grid: &PeriodicGrid, shift: f64) -> Result<GridFunction> {
        let h = grid.spacing();
        let start = (shift / h).round() as i64;
        let m = (self.l / h).round() as i64;
        if m < 1 {
            return Err(invalid("l", format!("support length {} is below the grid spacing {h}", self.l)));
        }
        if m >= grid.len() as i64 {
            return Err(invalid("l", "support wraps around the period"));
        }
        let mut values = vec![0.0; grid.len()];
        let p = self.shape - 1.0;
        for j in 0..=m {
            let left = j as f64 * h;
            let right = (m - j) as f64 * h;
            values[grid.slot_of_index(start + j)] = left.powf(p) * right.powf(p);
        }
        GridFunction::new(*grid, values)
    }
}

/// One testing problem: kernel order, support length, overlap and shapes,
/// together with the Sobolev index used by the adaptive test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    kind: ScenarioKind,
    a: f64,
    l: f64,
    lambda: f64,
    beta: f64,
    gamma: f64,
    t: SobolevIndex,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, a: f64, l: f64, lambda: f64, t: f64) -> Result<Self> {
        KernelSpec::with_order(a)?;
        if !(l > 0.0 && l < 1.0) {
            return Err(invalid("l", format!("support length must lie in (0, 1), got {l}")));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(invalid("lambda", format!("overlap must lie in [0, 1], got {lambda}")));
        }
        if (2.0 - lambda) * l > 0.5 {
            return Err(invalid(
                "l",
                format!("truth support [{}, {}] leaves [-1/2, 1/2]", (1.0 - lambda) * l, (2.0 - lambda) * l),
            ));
        }
        let (beta, gamma) = kind.shapes(a);
        Ok(Self {
            kind,
            a,
            l,
            lambda,
            beta,
            gamma,
            t: SobolevIndex::new(t)?,
        })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Shape of the feature functional.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Shape of the truth.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> SobolevIndex {
        self.t
    }

    /// Same problem with a different overlap.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, self.a, self.l, lambda, self.t.value())
    }

    /// Same problem with a different Sobolev index.
    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.kind, self.a, self.l, self.lambda, t)
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::with_order(self.a).expect("validated on construction")
    }

    /// Left end of the truth support, `(1 - λ) l`.
    pub fn truth_shift(&self) -> f64 {
        (1.0 - self.lambda) * self.l
    }
}

/// Feature functional `φ_{l,β}`, normalized to `‖φ‖_{L²} = 1`.
pub fn feature_functional(s: &Scenario, grid: &PeriodicGrid) -> Result<GridFunction> {
    let raw = BetaKernelSpec::new(s.l, s.beta)?.sample(grid, 0.0)?;
    let norm = raw.l2_norm();
    Ok(raw.scaled(1.0 / norm))
}

/// Truth `u_{l,λ,γ}`, normalized to `‖u‖_{L¹} = 1`.
pub fn truth(s: &Scenario, grid: &PeriodicGrid) -> Result<GridFunction> {
    let raw = BetaKernelSpec::new(s.l, s.gamma)?.sample(grid, s.truth_shift())?;
    let norm = raw.l1_norm();
    Ok(raw.scaled(1.0 / norm))
}

/// Feature value `⟨φ, u⟩` in normalized discrete units.
///
/// This is the plain dot product of the scaled vectors
/// `φ̃ = sqrt(P/n) φ` (unit Euclidean norm) and `ũ = (P/n) u` (unit ℓ¹
/// norm), i.e. `sqrt(P/n)` times the `L²` pairing. It is the
/// grid-resolution dependent number quoted alongside power curves; the
/// continuum pairing is [`GridFunction::l2_inner`].
pub fn feature_value(phi: &GridFunction, u: &GridFunction) -> Result<f64> {
    Ok(phi.grid().weight().sqrt() * phi.l2_inner(u)?)
}
