use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use super::PatternImage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    None,
    Gaussian,
    Poisson,
}

/// Camera noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Gaussian standard deviation as a fraction of the peak pixel.
    pub sigma: f64,
    /// Mean photon count at the peak pixel.
    pub peak_counts: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            sigma: 0.0,
            peak_counts: 1000.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            sigma,
            seed,
            ..Self::default()
        }
    }

    pub fn poisson(peak_counts: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Poisson,
            peak_counts,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.peak_counts > 0.0 && self.peak_counts.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "peak_counts must be > 0, got {}",
                self.peak_counts
            )));
        }
        Ok(())
    }
}

/// Each pixel draws from its own ChaCha stream keyed by `(seed, index)`,
/// so the result does not depend on evaluation order.
fn pixel_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Apply camera noise. Gaussian noise is clamped at zero.
pub fn add_noise(image: &PatternImage, spec: &NoiseSpec) -> Result<PatternImage> {
    spec.validate()?;
    let peak = image.max_pixel();
    let mut out = image.clone();
    match spec.kind {
        NoiseKind::None => {}
        NoiseKind::Gaussian => {
            let sd = spec.sigma * peak;
            if sd > 0.0 {
                let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                out.pixels.par_iter_mut().enumerate().for_each(|(i, v)| {
                    let n: f64 = normal.sample(&mut pixel_rng(spec.seed, i));
                    *v = (*v + n).max(0.0);
                });
            }
        }
        NoiseKind::Poisson => {
            if peak > 0.0 {
                let scale = spec.peak_counts / peak;
                out.pixels.par_iter_mut().enumerate().for_each(|(i, v)| {
                    let mean = *v * scale;
                    *v = match Poisson::new(mean) {
                        Ok(p) => p.sample(&mut pixel_rng(spec.seed, i)),
                        Err(_) => 0.0,
                    };
                });
            }
        }
    }
    Ok(out)
}
