//! Periodic convolution with a smooth kernel, applied as a Fourier
//! multiplier.
//!
//! The kernel `h` is defined through its Fourier transform
//! `(Fh)(ξ) = (1 + b² ξ²)^{-a}`. After `P`-periodization the discrete
//! operator multiplies the periodic coefficient of frequency `k` by
//! `m(k) = (Fh)(k / P) = (1 + (b/P)² k²)^{-a}`. The symbol is real and even,
//! so the operator is self-adjoint.

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::spectral::{Fourier, GridFunction, PeriodicGrid};

/// Default kernel bandwidth.
pub const DEFAULT_BANDWIDTH: f64 = 0.06;

/// Parameters `(a, b)` of the convolution kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    a: f64,
    b: f64,
}

impl KernelSpec {
    /// Kernel of smoothing order `a ≥ 1/2` and bandwidth `b > 0`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.5) {
            return Err(invalid("a", format!("smoothing order must be at least 1/2, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("b", format!("bandwidth must be positive, got {b}")));
        }
        Ok(Self { a, b })
    }

    /// Kernel of order `a` with the default bandwidth.
    pub fn with_order(a: f64) -> Result<Self> {
        Self::new(a, DEFAULT_BANDWIDTH)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `m(k) = (1 + (b/P)² k²)^{-a}`.
    pub fn multiplier(&self, k: i64, grid: &PeriodicGrid) -> f64 {
        let r = self.b / grid.period();
        (1.0 + r * r * (k * k) as f64).powf(-self.a)
    }

    /// Symbol of the operator in FFT order.
    pub fn symbol(&self, grid: &PeriodicGrid) -> Vec<f64> {
        grid.symbol(|k| self.multiplier(k, grid))
    }
}

/// `m(k)` for a kernel on a grid.
pub fn kernel_multiplier(k: i64, ks: &KernelSpec, grid: &PeriodicGrid) -> f64 {
    ks.multiplier(k, grid)
}

/// The convolution operator on one grid, with its symbol precomputed.
#[derive(Debug, Clone)]
pub struct Convolution {
    grid: PeriodicGrid,
    kernel: KernelSpec,
    symbol: Vec<f64>,
    fourier: Fourier,
}

impl Convolution {
    pub fn new(grid: PeriodicGrid, kernel: KernelSpec) -> Self {
        Self {
            grid,
            kernel,
            symbol: kernel.symbol(&grid),
            fourier: Fourier::new(grid.len()),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Symbol `m(k)` in FFT order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub(crate) fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    fn apply_with(&self, f: &GridFunction, symbol: impl Fn(f64) -> f64) -> Result<GridFunction> {
        if f.grid() != &self.grid {
            return Err(crate::Error::GridMismatch);
        }
        let sym: Vec<f64> = self.symbol.iter().map(|m| symbol(*m)).collect();
        let mut out = f.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut scratch = self.fourier.scratch();
        self.fourier
            .apply_symbol(out.values_mut(), &sym, &mut buf, &mut scratch);
        Ok(out)
    }

    /// `T u`.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_with(u, |m| m)
    }

    /// `T* v`, identical to [`Convolution::apply`].
    pub fn adjoint(&self, v: &GridFunction) -> Result<GridFunction> {
        self.apply(v)
    }

    /// Exact solution `Φ₀` of `T* Φ₀ = φ` on the grid.
    pub fn invert(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.apply_with(phi, |m| 1.0 / m)
    }

    /// Tikhonov plug-in probe `Φ_β = (T T* + β)^{-1} T φ`.
    pub fn plugin(&self, phi: &GridFunction, beta: f64) -> Result<GridFunction> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid("beta", format!("regularization parameter must be positive, got {beta}")));
        }
        self.apply_with(phi, |m| m / (m * m + beta))
    }
}

/// `T u` for a kernel.
pub fn forward(u: &GridFunction, ks: &KernelSpec) -> GridFunction {
    Convolution::new(*u.grid(), *ks)
        .apply(u)
        .expect("operator built on the input grid")
}

/// `T* v`; the operator is self-adjoint.
pub fn adjoint(v: &GridFunction, ks: &KernelSpec) -> GridFunction {
    forward(v, ks)
}

/// Unregularized probe `Φ₀` with `T* Φ₀ = φ`.
///
/// The inverse is computed even when `φ ∉ ran T*` in the continuum; the
/// ill-posedness then shows up as a large norm of the result.
pub fn unregularized_probe(phi: &GridFunction, ks: &KernelSpec) -> GridFunction {
    Convolution::new(*phi.grid(), *ks)
        .invert(phi)
        .expect("operator built on the input grid")
}

/// Tikhonov plug-in probe `Φ_β`.
pub fn plugin_probe(phi: &GridFunction, ks: &KernelSpec, beta: f64) -> Result<GridFunction> {
    Convolution::new(*phi.grid(), *ks).plugin(phi, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{periodic_fourier, sobolev_norm, SobolevIndex};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ks(a: f64) -> KernelSpec {
        KernelSpec::with_order(a).unwrap()
    }

    fn random_fn(grid: PeriodicGrid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction::new(grid, (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(KernelSpec::new(0.4, 0.06).is_err());
        assert!(KernelSpec::new(2.0, 0.0).is_err());
        assert!(KernelSpec::new(f64::NAN, 0.06).is_err());
    }

    #[test]
    fn multiplier_values() {
        let g = PeriodicGrid::default();
        assert_eq!(kernel_multiplier(0, &ks(2.0), &g), 1.0);
        // (1 + 0.0009 * 100)^{-a}
        assert_relative_eq!(kernel_multiplier(10, &ks(2.0), &g), 1.09f64.powi(-2), max_relative = 1e-14);
        assert_relative_eq!(kernel_multiplier(10, &ks(2.0), &g), 0.841680, epsilon = 5e-7);
        assert_relative_eq!(kernel_multiplier(10, &ks(4.0), &g), 0.708425, epsilon = 5e-7);
    }

    #[test]
    fn multiplier_strictly_decreasing() {
        let g = PeriodicGrid::default();
        for a in [0.5, 2.0, 4.0] {
            let k = ks(a);
            let mut prev = k.multiplier(0, &g);
            assert_eq!(prev, 1.0);
            for j in 1..=512 {
                let m = k.multiplier(j, &g);
                assert!(m < prev && m < 1.0);
                assert_eq!(m, k.multiplier(-j, &g));
                prev = m;
            }
        }
    }

    #[test]
    fn forward_on_constant_and_cosine() {
        let g = PeriodicGrid::new(128).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let out = forward(&one, &ks(2.0));
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let c = GridFunction::from_fn(g, |x| (PI * x).cos()).unwrap();
        let m1 = 1.0009f64.powi(-2);
        let out = forward(&c, &ks(2.0));
        for (o, v) in out.values().iter().zip(c.values()) {
            assert!((o - m1 * v).abs() < 1e-14);
        }
        assert_eq!(adjoint(&c, &ks(2.0)), out);
        assert!(adjoint(&GridFunction::zeros(g), &ks(4.0)).is_zero());
    }

    // Kernel h̄ reconstructed from its analytic coefficients m(k)/P and the
    // convolution evaluated by the O(n²) rectangle rule.
    #[test]
    fn forward_matches_quadratic_convolution() {
        let g = PeriodicGrid::new(32).unwrap();
        let kernel = KernelSpec::new(2.0, 0.3).unwrap();
        let n = g.len() as i64;
        let p = g.period();
        let hbar = |x: f64| -> f64 {
            (-n / 2..n / 2)
                .map(|k| kernel.multiplier(k, &g) / p * (2.0 * PI * k as f64 * x / p).cos())
                .sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let values = g
            .points()
            .map(|x| if x >= 0.0 { rng.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let u = GridFunction::new(g, values).unwrap();
        let fast = forward(&u, &kernel);
        for l in 0..g.len() {
            let slow: f64 = (0..g.len())
                .map(|j| g.weight() * hbar(g.point(l) - g.point(j)) * u.values()[j])
                .sum();
            assert!((fast.values()[l] - slow).abs() < 1e-10, "slot {l}");
        }
    }

    #[test]
    fn self_adjoint_on_random_pairs() {
        let g = PeriodicGrid::new(256).unwrap();
        let op = Convolution::new(g, ks(2.0));
        for seed in 0..100 {
            let u = random_fn(g, seed);
            let v = random_fn(g, seed + 1000);
            let lhs = op.apply(&u).unwrap().l2_inner(&v).unwrap();
            let rhs = u.l2_inner(&op.adjoint(&v).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn contraction_from_sobolev_to_l2() {
        let g = PeriodicGrid::new(256).unwrap();
        for (seed, t) in [(1, 0.0), (2, 0.51), (3, 1.0), (4, 2.5)] {
            let e = random_fn(g, seed);
            let t = SobolevIndex::new(t).unwrap();
            assert!(forward(&e, &ks(2.0)).l2_norm() <= sobolev_norm(&e, t) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn inversion_examples() {
        let g = PeriodicGrid::new(128).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let p0 = unregularized_probe(&one, &ks(2.0));
        assert!(p0.values().iter().all(|v| (v - 1.0).abs() < 1e-13));

        let c = GridFunction::from_fn(g, |x| (PI * x).cos()).unwrap();
        let p0 = unregularized_probe(&c, &ks(2.0));
        let gain = 1.0009f64.powi(2);
        for (o, v) in p0.values().iter().zip(c.values()) {
            assert!((o - gain * v).abs() < 1e-13);
        }

        let f = random_fn(g, 4);
        let back = forward(&unregularized_probe(&f, &ks(4.0)), &ks(4.0));
        let err = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(err < 1e-8, "relative residual {err}");
    }

    #[test]
    fn plugin_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let p = plugin_probe(&one, &ks(2.0), 1.0).unwrap();
        assert!(p.values().iter().all(|v| (v - 0.5).abs() < 1e-14));
        assert!(plugin_probe(&one, &ks(2.0), 0.0).is_err());

        // β → 0 on a single mode recovers the exact inverse
        let c = GridFunction::from_fn(g, |x| (3.0 * PI * x).sin()).unwrap();
        let exact = unregularized_probe(&c, &ks(2.0));
        let approx = plugin_probe(&c, &ks(2.0), 1e-14).unwrap();
        assert!(approx.sub(&exact).unwrap().max_norm() < 1e-10);

        let f = random_fn(g, 8);
        let beta = 1e-3;
        let kernel = ks(2.0);
        let pb = periodic_fourier(&plugin_probe(&f, &kernel, beta).unwrap());
        let fs = periodic_fourier(&f);
        for k in -32..32 {
            let m = kernel.multiplier(k, &g);
            let expected = fs.coeff(k) * (m / (m * m + beta));
            assert!((pb.coeff(k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let op = Convolution::new(PeriodicGrid::new(16).unwrap(), ks(2.0));
        let f = GridFunction::zeros(PeriodicGrid::new(32).unwrap());
        assert!(op.apply(&f).is_err());
    }
}
