//! Rotation angle between two fan patterns by correlation scanning.
//!
//! The reference image is rotated through a grid of candidate angles and
//! compared with the target by Pearson correlation over an annulus. The
//! scan runs coarse-to-fine: one full symmetry period `180/|l|` degrees at
//! the first ladder step, then successively finer grids around the running
//! best.
//!
//! Rotation angles are in degrees and use the same sense as the pattern
//! angle `theta`: rotating `render(theta)` by `delta` gives
//! `render(theta + delta)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pattern_image::{ImageGeometry, PatternImage};

/// Annular mask in beam-waist units, `r_min <= r < r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for Annulus {
    fn default() -> Self {
        Self {
            r_min: 0.25,
            r_max: 2.5,
        }
    }
}

impl Annulus {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min >= 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mask needs 0 <= r_min < r_max, got [{r_min}, {r_max})"
            )));
        }
        Ok(Self { r_min, r_max })
    }

    #[inline]
    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_min && r < self.r_max
    }
}

/// Correlation score versus candidate rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    /// Degrees, uniformly spaced by `step`.
    pub angles: Vec<f64>,
    pub scores: Vec<f64>,
    pub step: f64,
}

impl CorrelationCurve {
    /// Index of the highest score; the lowest angle wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = i;
            }
        }
        best
    }

    /// CSV with header `angle_deg,score`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,score\n");
        for (a, s) in self.angles.iter().zip(&self.scores) {
            out.push_str(&format!("{a},{s}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Scan steps in degrees, strictly decreasing.
    pub ladder: Vec<f64>,
    /// Half-width of each refinement window, in units of the previous step.
    pub window_halfwidth: f64,
    pub mask: Annulus,
    /// Fit a parabola through the three finest samples around the peak.
    pub refine: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            ladder: vec![4.5, 0.45, 0.045, 0.0045],
            window_halfwidth: 2.0,
            mask: Annulus::default(),
            refine: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::InvalidParameter("ladder is empty".into()));
        }
        if self.ladder.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("ladder steps must be positive".into()));
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("ladder must be strictly decreasing".into()));
        }
        if !(self.window_halfwidth > 0.0 && self.window_halfwidth.is_finite()) {
            return Err(Error::InvalidParameter("window_halfwidth must be positive".into()));
        }
        Annulus::new(self.mask.r_min, self.mask.r_max).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationEstimate {
    /// Degrees, principal value in `(-90/|l|, 90/|l|]`.
    pub angle: f64,
    pub peak_score: f64,
    pub curve_finest: CorrelationCurve,
}

/// Symmetry period of an `l` fan, in degrees.
pub fn symmetry_period(l: i32) -> f64 {
    180.0 / f64::from(l.unsigned_abs())
}

/// Reduce `angle` (degrees) into `(-period/2, period/2]`.
pub fn principal_value(angle: f64, l: i32) -> f64 {
    let p = symmetry_period(l);
    let v = angle.rem_euclid(p);
    if v > 0.5 * p {
        v - p
    } else {
        v
    }
}

/// Bilinear sample at pixel-space `(px, py)`; `None` outside the grid or
/// when a contributing pixel is invalid.
#[inline]
fn bilinear(image: &PatternImage, px: f64, py: f64) -> Option<f64> {
    let g = &image.geometry;
    let (w, h) = (g.width, g.height);
    if !(px >= 0.0 && py >= 0.0 && px <= (w - 1) as f64 && py <= (h - 1) as f64) {
        return None;
    }
    let x0 = (px.floor() as usize).min(w - 2);
    let y0 = (py.floor() as usize).min(h - 2);
    let fx = px - x0 as f64;
    let fy = py - y0 as f64;
    let i00 = y0 * w + x0;
    let idx = [i00, i00 + 1, i00 + w, i00 + w + 1];
    let wts = [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy];
    let mut acc = 0.0;
    for (i, wt) in idx.into_iter().zip(wts) {
        if wt != 0.0 {
            if !image.is_valid(i) {
                return None;
            }
            acc += wt * image.pixels[i];
        }
    }
    Some(acc)
}

/// Source location of output pixel offset `(x, y)` for a rotation by `(cos, sin)`.
#[inline]
fn source_point(g: &ImageGeometry, x: f64, y: f64, cos: f64, sin: f64) -> (f64, f64) {
    let xs = x * cos - y * sin;
    let ys = x * sin + y * cos;
    (g.center_x + xs, g.center_y - ys)
}

/// Rotate about the optic axis by bilinear interpolation.
///
/// Output pixels whose source falls outside the input are marked invalid
/// and set to zero.
pub fn rotate_image(image: &PatternImage, angle_deg: f64) -> PatternImage {
    let g = image.geometry;
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let mut pixels = vec![0.0; g.len()];
    let mut valid = vec![true; g.len()];
    pixels
        .par_chunks_mut(g.width)
        .zip(valid.par_chunks_mut(g.width))
        .enumerate()
        .for_each(|(j, (row, vrow))| {
            for i in 0..g.width {
                let (x, y) = g.offset(i as f64, j as f64);
                let (px, py) = source_point(&g, x, y, cos, sin);
                match bilinear(image, px, py) {
                    Some(v) => row[i] = v,
                    None => vrow[i] = false,
                }
            }
        });
    let all_valid = valid.iter().all(|v| *v);
    PatternImage {
        geometry: g,
        pixels,
        bit_depth: image.bit_depth,
        valid: if all_valid { None } else { Some(valid) },
    }
}

/// Pearson correlation accumulated in two passes.
fn pearson(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyAnnulus("no valid pixels in the correlation mask".into()));
    }
    let n = pairs.len() as f64;
    let (sa, sb) = pairs.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
    let (ma, mb) = (sa / n, sb / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::DegenerateMask);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of `a` and `b` over the valid pixels of `mask`.
pub fn correlation(a: &PatternImage, b: &PatternImage, mask: &Annulus) -> Result<f64> {
    if a.geometry != b.geometry {
        return Err(Error::GeometryMismatch);
    }
    let g = &a.geometry;
    let mut pairs = Vec::new();
    for j in 0..g.height {
        for i in 0..g.width {
            let idx = j * g.width + i;
            if a.is_valid(idx) && b.is_valid(idx) && mask.contains(g.polar(i as f64, j as f64).0) {
                pairs.push((a.pixels[idx], b.pixels[idx]));
            }
        }
    }
    pearson(&pairs)
}

/// Target samples inside the mask, with their offsets from the axis.
struct MaskedTarget {
    points: Vec<(f64, f64, f64)>,
}

impl MaskedTarget {
    fn new(target: &PatternImage, mask: &Annulus) -> Self {
        let g = &target.geometry;
        let mut points = Vec::new();
        for j in 0..g.height {
            for i in 0..g.width {
                let idx = j * g.width + i;
                if !target.is_valid(idx) {
                    continue;
                }
                let (x, y) = g.offset(i as f64, j as f64);
                if mask.contains(x.hypot(y) / g.pixels_per_waist) {
                    points.push((x, y, target.pixels[idx]));
                }
            }
        }
        Self { points }
    }

    /// Same value as `correlation(rotate_image(reference, angle), target, mask)`
    /// without materializing the rotated image.
    fn score(&self, reference: &PatternImage, angle_deg: f64) -> Result<f64> {
        let g = &reference.geometry;
        let (sin, cos) = angle_deg.to_radians().sin_cos();
        let pairs: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|&(x, y, t)| {
                let (px, py) = source_point(g, x, y, cos, sin);
                bilinear(reference, px, py).map(|r| (r, t))
            })
            .collect();
        pearson(&pairs)
    }
}

/// Scores for rotating `reference` by each angle (degrees) against `target`.
pub fn correlation_curve(
    reference: &PatternImage,
    target: &PatternImage,
    angles: &[f64],
    mask: &Annulus,
) -> Result<CorrelationCurve> {
    if reference.geometry != target.geometry {
        return Err(Error::GeometryMismatch);
    }
    let step = uniform_step(angles)?;
    let masked = MaskedTarget::new(target, mask);
    let scores = angles
        .par_iter()
        .map(|&a| masked.score(reference, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve {
        angles: angles.to_vec(),
        scores,
        step,
    })
}

fn uniform_step(angles: &[f64]) -> Result<f64> {
    match angles {
        [] => Err(Error::InvalidParameter("no candidate angles".into())),
        [_] => Ok(0.0),
        [a, b, ..] => {
            let step = b - a;
            let tol = 1e-9 * step.abs().max(angles.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            let uniform = step > 0.0 && angles.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= tol);
            if uniform {
                Ok(step)
            } else {
                Err(Error::InvalidParameter("angles must be uniformly increasing".into()))
            }
        }
    }
}

fn grid_around(center: f64, step: f64, half_count: i64) -> Vec<f64> {
    (-half_count..=half_count).map(|k| center + k as f64 * step).collect()
}

/// Coarse-to-fine estimate of the rotation taking `reference` to `target`.
pub fn estimate_rotation(
    reference: &PatternImage,
    target: &PatternImage,
    config: &EstimatorConfig,
    l: i32,
) -> Result<RotationEstimate> {
    if l == 0 {
        return Err(Error::ZeroOam);
    }
    config.validate()?;
    if reference.geometry != target.geometry {
        return Err(Error::GeometryMismatch);
    }
    let period = symmetry_period(l);
    let masked = MaskedTarget::new(target, &config.mask);
    let scan = |angles: Vec<f64>, step: f64| -> Result<CorrelationCurve> {
        let scores = angles
            .par_iter()
            .map(|&a| masked.score(reference, a))
            .collect::<Result<Vec<_>>>()?;
        Ok(CorrelationCurve { angles, scores, step })
    };

    let coarse = config.ladder[0];
    let n = ((period / coarse).round() as i64).max(1);
    let first: Vec<f64> = (1..=n).map(|k| -0.5 * period + k as f64 * coarse).collect();
    let mut curve = scan(first, coarse)?;
    check_ambiguity(&curve)?;
    let mut best = curve.angles[curve.argmax()];

    for w in config.ladder.windows(2) {
        let (prev, step) = (w[0], w[1]);
        let half = ((config.window_halfwidth * prev / step).round() as i64).max(1);
        curve = scan(grid_around(best, step, half), step)?;
        best = curve.angles[curve.argmax()];
    }

    let k = curve.argmax();
    let mut angle = curve.angles[k];
    let mut peak_score = curve.scores[k];
    if config.refine && k > 0 && k + 1 < curve.scores.len() {
        let (sm, s0, sp) = (curve.scores[k - 1], curve.scores[k], curve.scores[k + 1]);
        let denom = sm - 2.0 * s0 + sp;
        if denom < 0.0 {
            let offset = (0.5 * (sm - sp) / denom).clamp(-0.5, 0.5);
            angle += offset * curve.step;
            peak_score = (s0 - 0.25 * (sm - sp) * offset).max(s0);
        }
    }
    Ok(RotationEstimate {
        angle: principal_value(angle, l),
        peak_score,
        curve_finest: curve,
    })
}

/// Reject a first-stage curve whose two best local maxima tie.
fn check_ambiguity(curve: &CorrelationCurve) -> Result<()> {
    let s = &curve.scores;
    let n = s.len();
    if n < 3 {
        return Ok(());
    }
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| s[i] > s[(i + n - 1) % n] && s[i] >= s[(i + 1) % n])
        .collect();
    peaks.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if let [a, b, ..] = peaks[..] {
        let gap = s[a] - s[b];
        if gap < 1e-6 {
            return Err(Error::AmbiguousPeak {
                first_deg: curve.angles[a],
                second_deg: curve.angles[b],
                gap,
            });
        }
    }
    Ok(())
}

/// Add multiples of the symmetry period so consecutive angles differ by
/// less than half a period. Only correct if the true rotation changes by
/// less than that between samples.
pub fn unwrap_sequence(angles: &[f64], l: i32) -> Vec<f64> {
    let p = symmetry_period(l);
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for &a in angles {
        let next = match out.last() {
            None => a,
            Some(&prev) => a - p * ((a - prev) / p).round(),
        };
        out.push(next);
    }
    out
}
