//! Periodic grids, the discrete periodic Fourier transform and Sobolev
//! calculus on the circle of length `P`.
//!
//! A grid of `n` points samples `[-P/2, P/2)` at `x_k = P k / n` for
//! `k = -n/2, ..., n/2 - 1`; slot `i` of every sample vector holds the value
//! at index `k = i - n/2`. Periodic Fourier coefficients follow the
//! normalized convention
//!
//! ```text
//! f^(k) = (1/n) * sum_j f(x_j) exp(-2 pi i k j / n)
//! ```
//!
//! which is the midpoint rule for `P^-1 ∫ f(x) exp(-2 pi i k x / P) dx`.
//! Spectra are stored in FFT order: slot `q` carries frequency `q` for
//! `q < n/2` and `q - n` otherwise, so slot `n/2` is the Nyquist
//! frequency `-n/2`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 1024;
/// Period of every built-in problem: functions live on `[-1, 1)`.
pub const DEFAULT_PERIOD: f64 = 2.0;

/// Uniform grid on one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    period: f64,
}

impl PeriodicGrid {
    /// Grid of `n` points on `[-1, 1)`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_period(n, DEFAULT_PERIOD)
    }

    pub fn with_period(n: usize, period: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGridSize(n));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidPeriod(period));
        }
        Ok(Self { n, period })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Distance between neighbouring points, `P / n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Grid index `k` of storage slot `i`.
    #[inline]
    pub fn index_of_slot(&self, slot: usize) -> i64 {
        slot as i64 - (self.n / 2) as i64
    }

    /// Storage slot of grid index `k`, taken modulo `n`.
    #[inline]
    pub fn slot_of_index(&self, k: i64) -> usize {
        (k + (self.n / 2) as i64).rem_euclid(self.n as i64) as usize
    }

    /// Position `x_k` of storage slot `i`.
    #[inline]
    pub fn point(&self, slot: usize) -> f64 {
        self.index_of_slot(slot) as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Frequency carried by FFT-order slot `q`.
    #[inline]
    pub fn frequency(&self, q: usize) -> i64 {
        if q < self.n / 2 {
            q as i64
        } else {
            q as i64 - self.n as i64
        }
    }

    /// FFT-order slot of frequency `k`, taken modulo `n`.
    #[inline]
    pub fn frequency_slot(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Evaluates `symbol(k)` for every frequency, in FFT order.
    pub fn symbol(&self, symbol: impl Fn(i64) -> f64) -> Vec<f64> {
        (0..self.n).map(|q| symbol(self.frequency(q))).collect()
    }

    /// Quadrature weight `P / n` of the rectangle rule.
    #[inline]
    pub fn weight(&self) -> f64 {
        self.spacing()
    }
}

impl Default for PeriodicGrid {
    fn default() -> Self {
        Self {
            n: DEFAULT_POINTS,
            period: DEFAULT_PERIOD,
        }
    }
}

/// Smoothness index `t ≥ 0` of the Sobolev space `H^t`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const L2: SobolevIndex = SobolevIndex(0.0);

    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(invalid("t", format!("Sobolev index must be finite and nonnegative, got {t}")));
        }
        Ok(Self(t))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Sobolev weights `(1 + k^2)^t` in FFT order.
    pub fn weights(self, grid: &PeriodicGrid) -> Vec<f64> {
        let t = self.0;
        grid.symbol(|k| sobolev_weight(k, t))
    }
}

#[inline]
fn sobolev_weight(k: i64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (1.0 + (k * k) as f64).powf(t)
    }
}

/// Real samples of a periodic function on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self { grid, values })
    }

    /// Trusted constructor for values produced by finite arithmetic.
    pub(crate) fn from_vec(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::from_vec(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `L²` inner product by the rectangle rule, `(P/n) Σ f_j g_j`.
    pub fn l2_inner(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.weight() * dot(&self.values, &other.values))
    }

    /// `sqrt(P/n) ‖f‖₂`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.weight() * dot(&self.values, &self.values)).sqrt()
    }

    /// `(P/n) ‖f‖₁`.
    pub fn l1_norm(&self) -> f64 {
        self.grid.weight() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Grid maximum `‖f‖_∞`.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        Self::from_vec(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &GridFunction) -> Result<GridFunction> {
        self.same_grid(other)?;
        Ok(Self::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.add_scaled(-1.0, other)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Periodic Fourier coefficients `f^(k)` for `k ∈ ℤ_n`, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a spectrum from a function of the frequency.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(i64) -> Complex64) -> Self {
        let coeffs = (0..grid.len()).map(|q| f(grid.frequency(q))).collect();
        Self { grid, coeffs }
    }

    pub fn from_fft_order(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Coefficient of frequency `k` (taken modulo `n`).
    #[inline]
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[self.grid.frequency_slot(k)]
    }

    pub fn set_coeff(&mut self, k: i64, value: Complex64) {
        let q = self.grid.frequency_slot(k);
        self.coeffs[q] = value;
    }

    /// Coefficients in FFT order.
    pub fn fft_order(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Multiplies every coefficient by the real symbol `m(k)`.
    pub fn multiply(&mut self, symbol: impl Fn(i64) -> f64) {
        for (q, c) in self.coeffs.iter_mut().enumerate() {
            *c *= symbol(self.grid.frequency(q));
        }
    }

    /// `P Σ_k w(k) |f^(k)|²`.
    pub fn weighted_energy(&self, weight: impl Fn(i64) -> f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(q, c)| weight(self.grid.frequency(q)) * c.norm_sqr())
            .sum();
        self.grid.period() * sum
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Cached forward/inverse FFT plans for one transform length.
#[derive(Clone)]
pub struct Fourier {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("n", &self.n).finish()
    }
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    /// Unnormalized DFT of real samples in storage order.
    pub fn forward_raw(&self, values: &[f64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        for (o, v) in out.iter_mut().zip(values) {
            *o = Complex64::new(*v, 0.0);
        }
        self.fwd.process_with_scratch(out, scratch);
    }

    /// Unnormalized inverse DFT in place.
    pub fn inverse_raw(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, scratch);
    }

    /// Applies the real Fourier multiplier `symbol` (FFT order) to `values`
    /// in place.
    pub fn apply_symbol(&self, values: &mut [f64], symbol: &[f64], buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward_raw(values, buf, scratch);
        for (c, m) in buf.iter_mut().zip(symbol) {
            *c *= *m;
        }
        self.inverse_raw(buf, scratch);
        let inv_n = 1.0 / self.n as f64;
        for (v, c) in values.iter_mut().zip(buf.iter()) {
            *v = c.re * inv_n;
        }
    }
}

#[inline]
fn nyquist_sign(k: i64) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Periodic Fourier coefficients of `f`.
pub fn periodic_fourier(f: &GridFunction) -> Spectrum {
    let grid = *f.grid();
    let n = grid.len();
    let fourier = Fourier::new(n);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = fourier.scratch();
    fourier.forward_raw(f.values(), &mut coeffs, &mut scratch);
    let inv_n = 1.0 / n as f64;
    for (q, c) in coeffs.iter_mut().enumerate() {
        // slot i holds index i - n/2, which shifts the phase by (-1)^k
        *c *= nyquist_sign(grid.frequency(q)) * inv_n;
    }
    Spectrum { grid, coeffs }
}

/// Tolerance on the imaginary residue accepted by [`inverse_periodic_fourier`].
pub const REALNESS_TOLERANCE: f64 = 1e-10;

/// Synthesizes grid values from periodic Fourier coefficients.
///
/// Fails when the coefficients are not conjugate symmetric, i.e. when the
/// synthesized samples carry an imaginary part above
/// [`REALNESS_TOLERANCE`] relative to their magnitude.
pub fn inverse_periodic_fourier(s: &Spectrum) -> Result<GridFunction> {
    let grid = *s.grid();
    let n = grid.len();
    let fourier = Fourier::new(n);
    let mut buf: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(q, c)| c * nyquist_sign(grid.frequency(q)))
        .collect();
    let mut scratch = fourier.scratch();
    fourier.inverse_raw(&mut buf, &mut scratch);
    let scale = buf.iter().fold(1.0_f64, |m, c| m.max(c.re.abs()));
    let residue = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    if residue > REALNESS_TOLERANCE * scale {
        return Err(Error::NonRealSpectrum { residue });
    }
    GridFunction::new(grid, buf.into_iter().map(|c| c.re).collect())
}

/// `‖f‖_{H^t} = P^{1/2} (Σ_k (1 + k²)^t |f^(k)|²)^{1/2}`.
pub fn sobolev_norm(f: &GridFunction, t: SobolevIndex) -> f64 {
    let t = t.value();
    periodic_fourier(f)
        .weighted_energy(|k| sobolev_weight(k, t))
        .sqrt()
}

/// Norm of `f` in `H^{-t}`, the dual of `H^t` under the `L²` pairing.
pub fn dual_sobolev_norm(f: &GridFunction, t: SobolevIndex) -> f64 {
    let t = t.value();
    periodic_fourier(f)
        .weighted_energy(|k| 1.0 / sobolev_weight(k, t))
        .sqrt()
}

/// `H^t` inner product `P Σ_k (1 + k²)^t Re(f^(k) conj(g^(k)))`.
pub fn sobolev_inner(f: &GridFunction, g: &GridFunction, t: SobolevIndex) -> Result<f64> {
    f.same_grid(g)?;
    let t = t.value();
    let (fs, gs) = (periodic_fourier(f), periodic_fourier(g));
    let sum: f64 = fs
        .coeffs
        .iter()
        .zip(&gs.coeffs)
        .enumerate()
        .map(|(q, (a, b))| sobolev_weight(f.grid().frequency(q), t) * (a * b.conj()).re)
        .sum();
    Ok(f.grid().period() * sum)
}

/// Riesz map `H^{-t} → H^t`, the multiplier `(1 + k²)^{-t}`.
///
/// For every `e`, `⟨y, e⟩_{L²} = ⟨riesz_map(y), e⟩_{H^t}`.
pub fn riesz_map(y: &GridFunction, t: SobolevIndex) -> GridFunction {
    if t.value() == 0.0 {
        return y.clone();
    }
    let grid = *y.grid();
    let symbol: Vec<f64> = t.weights(&grid).into_iter().map(|w| 1.0 / w).collect();
    apply_symbol(y, &symbol)
}

/// Applies a real, even Fourier multiplier given in FFT order.
pub fn apply_symbol(f: &GridFunction, symbol: &[f64]) -> GridFunction {
    let grid = *f.grid();
    let fourier = Fourier::new(grid.len());
    let mut values = f.values().to_vec();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut scratch = fourier.scratch();
    fourier.apply_symbol(&mut values, symbol, &mut buf, &mut scratch);
    GridFunction::from_vec(grid, values)
}
