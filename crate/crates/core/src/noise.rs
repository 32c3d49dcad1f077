//! Reproducible Gaussian white noise on the grid.
//!
//! Each grid sample is an independent `N(0, n/P)` variable, so the
//! quadrature pairing `⟨Z, g⟩ = (P/n) Σ z_j g_j` has variance `‖g‖²_{L²}`.
//! Draws are addressed by a `(seed, stream)` pair; distinct streams of the
//! same seed are independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::operator::{Convolution, KernelSpec};
use crate::spectral::{GridFunction, PeriodicGrid};

/// One white-noise realization together with its RNG coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub z: GridFunction,
    pub seed: u64,
    pub stream: u64,
}

/// RNG positioned at the start of `stream` for `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws white noise for `(seed, stream)`.
pub fn sample_white_noise(grid: PeriodicGrid, seed: u64, stream: u64) -> NoiseDraw {
    let mut rng = stream_rng(seed, stream);
    let sd = (grid.len() as f64 / grid.period()).sqrt();
    let values = (0..grid.len())
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            sd * x
        })
        .collect();
    NoiseDraw {
        z: GridFunction::from_vec(grid, values),
        seed,
        stream,
    }
}

/// `T u + σ z` for a given noise realization.
pub fn data_from_noise(tu: &GridFunction, sigma: f64, z: &GridFunction) -> Result<GridFunction> {
    check_sigma(sigma)?;
    tu.add_scaled(sigma, z)
}

/// Data `Y = T u + σ Z` with `Z` drawn from `(seed, stream)`.
pub fn generate_data(u: &GridFunction, ks: &KernelSpec, sigma: f64, seed: u64, stream: u64) -> Result<GridFunction> {
    check_sigma(sigma)?;
    let tu = Convolution::new(*u.grid(), *ks).apply(u)?;
    if sigma == 0.0 {
        return Ok(tu);
    }
    let draw = sample_white_noise(*u.grid(), seed, stream);
    data_from_noise(&tu, sigma, &draw.z)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(invalid("sigma", format!("noise level must be finite and nonnegative, got {sigma}")))
    }
}
