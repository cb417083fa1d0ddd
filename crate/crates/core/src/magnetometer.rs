//! From pattern rotation to magnetic field.
//!
//! Inversion is restricted to the weak-field branch between the two
//! innermost extrema of the rotation curve, where `theta(B)` is strictly
//! monotone. Uncertainties are first-order propagation of a fixed angular
//! accuracy through the local slope.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nmor_model::{monotone_branch_edge, rotation_angle, weak_field_slope, MediumParams};
use crate::numeric::{brent_root, golden_section_min};

/// Reliable angular accuracy of the correlation scan, degrees.
pub const DEFAULT_ANGLE_ACCURACY_DEG: f64 = 0.045;

const INVERT_TOL_GAUSS: f64 = 1e-9;
const DIFF_STEP_GAUSS: f64 = 1e-4;
const MIN_SLOPE_DEG_PER_GAUSS: f64 = 1e-12;
const MIN_FIT_POINTS: usize = 5;

/// Field at which `rotation_angle` equals `theta` (radians), on the
/// monotone weak-field branch.
pub fn invert_theta(theta: f64, params: &MediumParams) -> Result<f64> {
    params.validate()?;
    let edge = monotone_branch_edge(params)?;
    let limit = edge.theta.abs();
    if theta.is_nan() || theta.abs() >= limit {
        return Err(Error::OutsideMonotoneBranch {
            theta_deg: theta.to_degrees(),
            limit_deg: limit.to_degrees(),
        });
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let b = edge.b_gauss;
    brent_root(|x| rotation_angle(x, params) - theta, -b, b, INVERT_TOL_GAUSS).ok_or(Error::OutsideMonotoneBranch {
        theta_deg: theta.to_degrees(),
        limit_deg: limit.to_degrees(),
    })
}

/// Central-difference `d theta / dB` in degrees per gauss.
pub fn local_slope(params: &MediumParams, at_b: f64) -> f64 {
    let h = DIFF_STEP_GAUSS;
    ((rotation_angle(at_b + h, params) - rotation_angle(at_b - h, params)) / (2.0 * h)).to_degrees()
}

/// Field resolution for a given angular accuracy (degrees) at field `at_b`.
///
/// Operating points on or beyond the edge of the monotone branch are
/// rejected as insensitive.
pub fn precision(angle_accuracy_deg: f64, params: &MediumParams, at_b: f64) -> Result<f64> {
    let slope = local_slope(params, at_b);
    if at_b.abs() >= monotone_branch_edge(params)?.b_gauss {
        return Err(Error::InsensitiveOperatingPoint {
            slope_deg_per_gauss: slope,
        });
    }
    precision_from_slope(angle_accuracy_deg, slope)
}

/// `angle_accuracy / |slope|` for an externally supplied slope (deg/G).
pub fn precision_from_slope(angle_accuracy_deg: f64, slope_deg_per_gauss: f64) -> Result<f64> {
    if !(angle_accuracy_deg >= 0.0 && angle_accuracy_deg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "angle accuracy must be non-negative, got {angle_accuracy_deg}"
        )));
    }
    if slope_deg_per_gauss.is_nan() || slope_deg_per_gauss.abs() < MIN_SLOPE_DEG_PER_GAUSS {
        return Err(Error::InsensitiveOperatingPoint { slope_deg_per_gauss });
    }
    Ok(angle_accuracy_deg / slope_deg_per_gauss.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMethod {
    OffsetSlope,
    FullInversion,
    SymmetryFit,
}

impl CalibrationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CalibrationMethod::OffsetSlope => "offset_slope",
            CalibrationMethod::FullInversion => "full_inversion",
            CalibrationMethod::SymmetryFit => "symmetry_fit",
        }
    }
}

impl std::str::FromStr for CalibrationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offset_slope" => Ok(CalibrationMethod::OffsetSlope),
            "full_inversion" => Ok(CalibrationMethod::FullInversion),
            "symmetry_fit" => Ok(CalibrationMethod::SymmetryFit),
            _ => Err(Error::InvalidParameter(format!("unknown calibration method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub b_background: f64,
    pub uncertainty: f64,
    pub method: CalibrationMethod,
    /// RMS fit residual in degrees; symmetry fits only.
    pub residual: Option<f64>,
}

/// Flat `key = value` report.
impl fmt::Display for CalibrationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method = {}", self.method.as_str())?;
        writeln!(f, "b_background_gauss = {}", self.b_background)?;
        writeln!(f, "uncertainty_gauss = {}", self.uncertainty)?;
        if let Some(r) = self.residual {
            writeln!(f, "residual_deg = {r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub angle_accuracy_deg: f64,
    /// Use this slope (deg/G) instead of the model's weak-field slope.
    pub slope_override: Option<f64>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            angle_accuracy_deg: DEFAULT_ANGLE_ACCURACY_DEG,
            slope_override: None,
        }
    }
}

/// Background field from the pattern angle measured at zero coil current.
///
/// The angle is read with the sense in which the weak-field slope is
/// positive, so a positive offset yields a positive field under either
/// method regardless of the sign of the model slope.
pub fn calibrate_offset(
    theta_at_zero_current_deg: f64,
    params: &MediumParams,
    method: CalibrationMethod,
    options: &CalibrationOptions,
) -> Result<CalibrationResult> {
    if !theta_at_zero_current_deg.is_finite() {
        return Err(Error::InvalidParameter("offset angle must be finite".into()));
    }
    params.validate()?;
    match method {
        CalibrationMethod::OffsetSlope => {
            let slope = options.slope_override.unwrap_or_else(|| weak_field_slope(params));
            let uncertainty = precision_from_slope(options.angle_accuracy_deg, slope)?;
            Ok(CalibrationResult {
                b_background: theta_at_zero_current_deg / slope.abs(),
                uncertainty,
                method,
                residual: None,
            })
        }
        CalibrationMethod::FullInversion => {
            let orientation = weak_field_slope(params).signum();
            let b = invert_theta((orientation * theta_at_zero_current_deg).to_radians(), params)?;
            Ok(CalibrationResult {
                b_background: b,
                uncertainty: precision(options.angle_accuracy_deg, params, b)?,
                method,
                residual: None,
            })
        }
        CalibrationMethod::SymmetryFit => Err(Error::InvalidParameter(
            "symmetry_fit needs sweep data; use fit_symmetry_center".into(),
        )),
    }
}

/// Measured pattern angle versus coil field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldSweepRecord {
    /// `(coil_gauss, theta_deg)` pairs.
    pub points: Vec<(f64, f64)>,
}

impl FieldSweepRecord {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    /// CSV with header `coil_gauss,theta_deg`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coil_gauss,theta_deg\n");
        for (b, t) in &self.points {
            out.push_str(&format!("{b},{t}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "coil_gauss,theta_deg" => {}
            Some((i, _)) => {
                return Err(Error::Csv {
                    line: i + 1,
                    reason: "expected header coil_gauss,theta_deg".into(),
                })
            }
            None => {
                return Err(Error::Csv {
                    line: 1,
                    reason: "empty file".into(),
                })
            }
        }
        let mut points = Vec::new();
        for (i, line) in lines {
            let bad = |reason: &str| Error::Csv {
                line: i + 1,
                reason: reason.into(),
            };
            let mut cols = line.split(',');
            let (Some(b), Some(t), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected two columns"));
            };
            let b: f64 = b.trim().parse().map_err(|_| bad("coil_gauss is not a number"))?;
            let t: f64 = t.trim().parse().map_err(|_| bad("theta_deg is not a number"))?;
            if !(b.is_finite() && t.is_finite()) {
                return Err(bad("non-finite value"));
            }
            points.push((b, t));
        }
        Ok(Self { points })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Least-squares fit of the shifted, scaled model to a field sweep.
///
/// Minimizes `sum_i (theta_i - s * theta_model(coil_i - b0))^2` over `b0`
/// and a free scale `s`, which absorbs sign and gain conventions. For a
/// fixed `b0` the optimal `s` is closed-form, so the search is
/// one-dimensional: a grid over the coil range followed by golden-section
/// refinement.
pub fn fit_symmetry_center(data: &FieldSweepRecord, params: &MediumParams) -> Result<CalibrationResult> {
    params.validate()?;
    let pts = &data.points;
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateData(format!(
            "need at least {MIN_FIT_POINTS} points, got {}",
            pts.len()
        )));
    }
    let first = pts[0].1;
    if pts.iter().all(|p| p.1 == first) {
        return Err(Error::DegenerateData("all measured angles are equal".into()));
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if hi <= lo {
        return Err(Error::DegenerateData("all coil settings are equal".into()));
    }

    let loss = |b0: f64| fit_at(pts, params, b0).0;
    let n_grid = 2001;
    let dx = (hi - lo) / (n_grid - 1) as f64;
    let (k, _) = (0..n_grid)
        .map(|k| (k, loss(lo + k as f64 * dx)))
        .fold(
            (0, f64::INFINITY),
            |best, (k, v)| if v < best.1 { (k, v) } else { best },
        );
    let center = lo + k as f64 * dx;
    let b0 = golden_section_min(loss, center - dx, center + dx, 1e-9 * (hi - lo).max(1.0));
    let (sse, scale) = fit_at(pts, params, b0);
    if scale == 0.0 {
        return Err(Error::DegenerateData("model is flat over the sweep".into()));
    }

    // Gauss-Newton variance of b0 from the curvature of the loss.
    let h = 1e-4 * (hi - lo);
    let curvature = (loss(b0 + h) - 2.0 * sse + loss(b0 - h)) / (h * h);
    let dof = (pts.len() - 2) as f64;
    let sigma2 = sse / dof;
    let uncertainty = if curvature > 0.0 {
        (2.0 * sigma2 / curvature).sqrt()
    } else {
        0.0
    };
    Ok(CalibrationResult {
        b_background: b0,
        uncertainty,
        method: CalibrationMethod::SymmetryFit,
        residual: Some((sse / pts.len() as f64).sqrt()),
    })
}

/// `(sum of squared residuals, optimal scale)` at offset `b0`.
fn fit_at(pts: &[(f64, f64)], params: &MediumParams, b0: f64) -> (f64, f64) {
    let model: Vec<f64> = pts
        .iter()
        .map(|p| rotation_angle(p.0 - b0, params).to_degrees())
        .collect();
    let fy: f64 = model.iter().zip(pts).map(|(f, p)| f * p.1).sum();
    let ff: f64 = model.iter().map(|f| f * f).sum();
    let scale = if ff > 0.0 { fy / ff } else { 0.0 };
    let sse = model.iter().zip(pts).map(|(f, p)| (p.1 - scale * f).powi(2)).sum();
    (sse, scale)
}
