//! Pixel images of the fan pattern.
//!
//! Pixel `(i, j)` is column `i`, row `j`, row 0 at the top. Its center maps
//! to `x = i - center_x`, `y = center_y - j`, so the azimuth `alpha` grows
//! counter-clockwise on screen, consistent with [`crate::oam_state`].

mod noise;
mod pgm;

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oam_state::{intensity_at, ScalarPattern};

pub use noise::{add_noise, NoiseKind, NoiseSpec};
pub use pgm::{decode_pgm, encode_pgm, read_image, read_image_expecting, write_image, PgmData};

/// Sample depth used when an image is serialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn maxval(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            _ => Err(Error::InvalidParameter(format!(
                "bit depth must be 8 or 16, got {bits}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGeometry {
    pub width: usize,
    pub height: usize,
    /// Optic axis, pixel coordinates (fractional allowed).
    pub center_x: f64,
    pub center_y: f64,
    pub pixels_per_waist: f64,
}

impl Default for ImageGeometry {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            center_x: 255.5,
            center_y: 255.5,
            pixels_per_waist: 64.0,
        }
    }
}

impl ImageGeometry {
    pub const MIN_SIDE: usize = 16;
    pub const DEFAULT_PIXELS_PER_WAIST: f64 = 64.0;

    pub fn new(width: usize, height: usize, center_x: f64, center_y: f64, pixels_per_waist: f64) -> Result<Self> {
        let g = Self {
            width,
            height,
            center_x,
            center_y,
            pixels_per_waist,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square image with the optic axis at the geometric center.
    pub fn centered(side: usize, pixels_per_waist: f64) -> Result<Self> {
        let c = (side as f64 - 1.0) / 2.0;
        Self::new(side, side, c, c, pixels_per_waist)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < Self::MIN_SIDE || self.height < Self::MIN_SIDE {
            return Err(Error::InvalidParameter(format!(
                "image must be at least {0}x{0}, got {1}x{2}",
                Self::MIN_SIDE,
                self.width,
                self.height
            )));
        }
        if !(self.pixels_per_waist > 0.0 && self.pixels_per_waist.is_finite()) {
            return Err(Error::InvalidParameter("pixels_per_waist must be positive".into()));
        }
        let inside = |c: f64, n: usize| c >= 0.0 && c <= (n - 1) as f64;
        if !inside(self.center_x, self.width) || !inside(self.center_y, self.height) {
            return Err(Error::InvalidParameter(format!(
                "center ({}, {}) outside the image",
                self.center_x, self.center_y
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian offset of a pixel-space point from the axis, in pixels, y up.
    #[inline]
    pub fn offset(&self, px: f64, py: f64) -> (f64, f64) {
        (px - self.center_x, self.center_y - py)
    }

    /// `(r, alpha)` of pixel-space point `(px, py)`: r in waists, alpha in `[0, 2 pi)`.
    #[inline]
    pub fn polar(&self, px: f64, py: f64) -> (f64, f64) {
        let (x, y) = self.offset(px, py);
        let r = x.hypot(y) / self.pixels_per_waist;
        (r, y.atan2(x).rem_euclid(2.0 * PI))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternImage {
    pub geometry: ImageGeometry,
    /// Row-major intensities, non-negative and finite.
    pub pixels: Vec<f64>,
    pub bit_depth: BitDepth,
    /// Per-pixel validity; `None` means every pixel is valid.
    pub valid: Option<Vec<bool>>,
}

impl PatternImage {
    pub fn new(geometry: ImageGeometry, pixels: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if pixels.len() != geometry.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} pixels, got {}",
                geometry.len(),
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "pixel value {v} is negative or non-finite"
            )));
        }
        Ok(Self {
            geometry,
            pixels,
            bit_depth: BitDepth::default(),
            valid: None,
        })
    }

    pub fn with_bit_depth(mut self, depth: BitDepth) -> Self {
        self.bit_depth = depth;
        self
    }

    /// Replace center and scale, keeping the pixel grid.
    pub fn with_optics(mut self, center_x: f64, center_y: f64, pixels_per_waist: f64) -> Result<Self> {
        let g = ImageGeometry::new(
            self.geometry.width,
            self.geometry.height,
            center_x,
            center_y,
            pixels_per_waist,
        )?;
        self.geometry = g;
        Ok(self)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[j * self.geometry.width + i]
    }

    #[inline]
    pub fn is_valid(&self, index: usize) -> bool {
        self.valid.as_ref().is_none_or(|v| v[index])
    }

    pub fn max_pixel(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.pixels.iter().sum()
    }
}

/// Pixel sampling rule used by [`render_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    PixelCenter,
    /// Mean of a 2x2 grid at offsets of +-1/4 pixel.
    Supersample2x2,
}

/// Rasterize `cos^2(l(theta + alpha)) E(r)^2` at pixel centers.
pub fn render(pattern: &ScalarPattern, geometry: &ImageGeometry) -> Result<PatternImage> {
    render_with(pattern, geometry, Sampling::PixelCenter)
}

pub fn render_with(pattern: &ScalarPattern, geometry: &ImageGeometry, sampling: Sampling) -> Result<PatternImage> {
    geometry.validate()?;
    let g = *geometry;
    let mut pixels = vec![0.0; g.len()];
    pixels.par_chunks_mut(g.width).enumerate().for_each(|(j, row)| {
        for (i, px) in row.iter_mut().enumerate() {
            let (x, y) = (i as f64, j as f64);
            *px = match sampling {
                Sampling::PixelCenter => sample(pattern, &g, x, y),
                Sampling::Supersample2x2 => {
                    let mut acc = 0.0;
                    for dy in [-0.25, 0.25] {
                        for dx in [-0.25, 0.25] {
                            acc += sample(pattern, &g, x + dx, y + dy);
                        }
                    }
                    0.25 * acc
                }
            };
        }
    });
    PatternImage::new(g, pixels)
}

#[inline]
fn sample(pattern: &ScalarPattern, g: &ImageGeometry, px: f64, py: f64) -> f64 {
    let (r, alpha) = g.polar(px, py);
    intensity_at(pattern, r, alpha)
}

/// Mean intensity per azimuth bin over the annulus `r_min <= r < r_max` (waists).
///
/// Returns `(bin_center_alpha, mean)` pairs in bin order starting at
/// `alpha = 0`. Invalid pixels are skipped.
pub fn azimuthal_profile(image: &PatternImage, r_min: f64, r_max: f64, n_bins: usize) -> Result<Vec<(f64, f64)>> {
    if !(r_min >= 0.0 && r_max > r_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= r_min < r_max, got [{r_min}, {r_max})"
        )));
    }
    if n_bins < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 bins, got {n_bins}")));
    }
    let g = &image.geometry;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for j in 0..g.height {
        for i in 0..g.width {
            let idx = j * g.width + i;
            if !image.is_valid(idx) {
                continue;
            }
            let (r, alpha) = g.polar(i as f64, j as f64);
            if r < r_min || r >= r_max {
                continue;
            }
            let bin = ((alpha / (2.0 * PI) * n_bins as f64) as usize).min(n_bins - 1);
            sums[bin] += image.pixels[idx];
            counts[bin] += 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyAnnulus(format!(
            "no pixels with {r_min} <= r < {r_max} waists"
        )));
    }
    if let Some(b) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyAnnulus(format!(
            "azimuth bin {b} of {n_bins} has no pixels"
        )));
    }
    let width = 2.0 * PI / n_bins as f64;
    Ok(sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(b, (s, &c))| ((b as f64 + 0.5) * width, s / c as f64))
        .collect())
}

/// Indices of strict local minima of a circular sequence.
///
/// A run of equal values counts once, at its first index, when both
/// neighbours of the run are larger.
pub fn circular_local_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let prev = values[(i + n - 1) % n];
        if prev == values[i] {
            continue;
        }
        let mut k = 1;
        while k < n && values[(i + k) % n] == values[i] {
            k += 1;
        }
        let next = values[(i + k) % n];
        if prev > values[i] && next > values[i] {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(l: i32, theta: f64) -> ScalarPattern {
        ScalarPattern::new(l, theta).unwrap()
    }

    #[test]
    fn geometry_validation() {
        assert!(ImageGeometry::new(15, 32, 7.0, 7.0, 4.0).is_err());
        assert!(ImageGeometry::new(32, 32, 40.0, 7.0, 4.0).is_err());
        assert!(ImageGeometry::new(32, 32, 7.0, 7.0, 0.0).is_err());
        let g = ImageGeometry::centered(512, 64.0).unwrap();
        assert_eq!(g, ImageGeometry::default());
    }

    #[test]
    fn polar_convention() {
        let g = ImageGeometry::new(32, 32, 10.0, 10.0, 2.0).unwrap();
        let (r, a) = g.polar(12.0, 10.0);
        assert!((r - 1.0).abs() < 1e-15 && a.abs() < 1e-15);
        // one row up is +y
        let (_, a) = g.polar(10.0, 9.0);
        assert!((a - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn render_matches_intensity_law() {
        let g = ImageGeometry::centered(64, 10.0).unwrap();
        let p = pattern(2, 0.3);
        let img = render(&p, &g).unwrap();
        for (i, j) in [(3, 5), (40, 12), (63, 63), (31, 33)] {
            let (r, a) = g.polar(i as f64, j as f64);
            assert_eq!(img.get(i, j), intensity_at(&p, r, a));
        }
    }

    #[test]
    fn vortex_core_dark() {
        let g = ImageGeometry::new(33, 33, 16.0, 16.0, 8.0).unwrap();
        let img = render(&pattern(1, 0.0), &g).unwrap();
        assert_eq!(img.get(16, 16), 0.0);
    }

    #[test]
    fn supersampling_is_close_to_center_sampling() {
        let g = ImageGeometry::default();
        let a = render(&pattern(2, 0.1), &g).unwrap();
        let b = render_with(&pattern(2, 0.1), &g, Sampling::Supersample2x2).unwrap();
        let peak = a.max_pixel();
        let worst = a
            .pixels
            .iter()
            .zip(&b.pixels)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01 * peak && worst > 0.0);
    }

    #[test]
    fn four_dark_lines_for_l2() {
        let img = render(&pattern(2, 0.0), &ImageGeometry::default()).unwrap();
        let prof = azimuthal_profile(&img, 0.5, 2.0, 72).unwrap();
        let vals: Vec<f64> = prof.iter().map(|p| p.1).collect();
        let minima = circular_local_minima(&vals);
        assert_eq!(minima.len(), 4);
        let peak = vals.iter().copied().fold(0.0, f64::max);
        for m in minima {
            assert!(vals[m] < 0.01 * peak);
            let deg = prof[m].0.to_degrees();
            let nearest = (deg / 90.0).round() * 90.0;
            assert!(((deg - nearest).abs() - 45.0).abs() <= 2.5, "minimum at {deg}");
        }
    }

    #[test]
    fn constant_image_profile_is_flat() {
        let g = ImageGeometry::default();
        let img = PatternImage::new(g, vec![0.25; g.len()]).unwrap();
        let prof = azimuthal_profile(&img, 0.5, 3.0, 64).unwrap();
        assert!(prof.iter().all(|p| p.1 == 0.25));
    }

    #[test]
    fn profile_shifts_with_theta() {
        let g = ImageGeometry::default();
        // 5 deg bins; much finer bins resolve the pixel lattice as spurious minima.
        let n = 72;
        let dark = |theta_deg: f64| {
            let img = render(&pattern(2, theta_deg.to_radians()), &g).unwrap();
            let v: Vec<f64> = azimuthal_profile(&img, 0.5, 2.5, n)
                .unwrap()
                .iter()
                .map(|p| p.1)
                .collect();
            circular_local_minima(&v)
        };
        let a = dark(0.0);
        let b = dark(10.0);
        assert_eq!(a.len(), b.len());
        // theta -> theta + 10 deg moves the fan by -10 deg in alpha: 2 bins.
        for (x, y) in a.iter().zip(&b) {
            let shift = (*x as i64 - *y as i64).rem_euclid(n as i64);
            assert!((shift - 2).abs() <= 1, "shift {shift}");
        }
    }

    #[test]
    fn profile_errors() {
        let img = render(&pattern(2, 0.0), &ImageGeometry::default()).unwrap();
        assert!(azimuthal_profile(&img, 1.0, 0.5, 16).is_err());
        assert!(azimuthal_profile(&img, 0.5, 1.0, 4).is_err());
        assert!(matches!(
            azimuthal_profile(&img, 10.0, 11.0, 16),
            Err(Error::EmptyAnnulus(_))
        ));
    }

    #[test]
    fn energy_inside_three_waists() {
        let g = ImageGeometry::default();
        for l in [1, 2, 3] {
            let img = render(&pattern(l, 0.2), &g).unwrap();
            let mut inside = 0.0;
            for j in 0..g.height {
                for i in 0..g.width {
                    if g.polar(i as f64, j as f64).0 < 3.0 {
                        inside += img.get(i, j);
                    }
                }
            }
            assert!(inside >= 0.99 * img.total());
        }
    }

    #[test]
    fn render_is_deterministic() {
        let g = ImageGeometry::default();
        let a = render(&pattern(3, 0.7), &g).unwrap();
        let b = render(&pattern(3, 0.7), &g).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn minima_plateau_and_wraparound() {
        assert_eq!(circular_local_minima(&[0.0, 1.0, 2.0, 1.0]), vec![0]);
        assert_eq!(circular_local_minima(&[3.0, 1.0, 1.0, 3.0, 0.5, 2.0]), vec![1, 4]);
        assert!(circular_local_minima(&[1.0; 5]).is_empty());
    }
}
