//! Nonlinear magneto-optical rotation of the interference pattern.
//!
//! The pattern angle as a function of the longitudinal field is
//!
//! ```text
//! theta = 6 Gamma W d / (l D d0) * { 8 W^2 [8 W^2 + Gamma^2 (k + 2) - 8 Delta^2]
//!                                  + gamma [4 gamma (Gamma^2 - 4 Delta^2) - Gamma^3 k (k + 2)] }
//!
//! D = 8 W^2 [32 Gamma^2 (k + 3)(W^2 + Delta^2) + 192 (Delta^2 - W^2)^2 + Gamma^4 (k + 2)(k + 6)]
//!   + 2 gamma^2 [Gamma^2 (k + 2)^2 + 16 Delta^2] [Gamma^2 (k + 3) + 12 Delta^2]
//! ```
//!
//! with `W` the Larmor frequency, `k` the optical-pumping saturation
//! parameter, `Gamma` the absorption linewidth, `gamma` the transit
//! relaxation rate and `Delta` the detuning. All rates are in MHz, lengths in
//! cm. The expression is evaluated with every rate divided by `Gamma`, which
//! keeps the sixth-power terms of `D` near unity.
//!
//! The formula is evaluated literally: with the default parameters the
//! weak-field slope is negative.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{brent_root, geomspace, golden_section_min};

/// Upper end of the field range searched for zero crossings and extrema.
pub const DEFAULT_B_MAX_GAUSS: f64 = 1000.0;

const EXTREMUM_TOL_GAUSS: f64 = 1e-6;
const ROOT_TOL_GAUSS: f64 = 1e-9;
const SCAN_POINTS: usize = 4000;

/// Parameters of the rotation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Spectral width of the absorption line `Gamma`, MHz.
    pub linewidth: f64,
    /// Transit relaxation rate `gamma`, MHz (absolute, not a ratio).
    pub transit_rate: f64,
    /// Optical-pumping saturation parameter `Omega_R^2 / (Gamma gamma)`.
    pub kappa2: f64,
    /// Laser detuning from resonance, MHz.
    pub detuning: f64,
    /// Vapor-cell length, cm.
    pub cell_length: f64,
    /// Unsaturated absorption length on resonance, cm.
    pub absorption_length: f64,
    /// OAM number of the beam.
    pub l: i32,
    /// Larmor frequency per unit field, MHz/G.
    pub larmor_coeff: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self::rb87_d1(2)
    }
}

impl MediumParams {
    pub const DEFAULT_LINEWIDTH: f64 = 266.0;
    pub const DEFAULT_TRANSIT_RATIO: f64 = 0.004;
    pub const DEFAULT_KAPPA2: f64 = 3.3;
    pub const DEFAULT_CELL_LENGTH: f64 = 5.0;
    pub const DEFAULT_ABSORPTION_LENGTH: f64 = 0.5;
    pub const DEFAULT_LARMOR_COEFF: f64 = 0.7;

    /// Warm Rb-87 vapor on the D1 line, on resonance, with the given OAM.
    pub fn rb87_d1(l: i32) -> Self {
        Self {
            linewidth: Self::DEFAULT_LINEWIDTH,
            transit_rate: Self::DEFAULT_TRANSIT_RATIO * Self::DEFAULT_LINEWIDTH,
            kappa2: Self::DEFAULT_KAPPA2,
            detuning: 0.0,
            cell_length: Self::DEFAULT_CELL_LENGTH,
            absorption_length: Self::DEFAULT_ABSORPTION_LENGTH,
            l,
            larmor_coeff: Self::DEFAULT_LARMOR_COEFF,
        }
    }

    pub fn with_l(mut self, l: i32) -> Self {
        self.l = l;
        self
    }

    /// Set `gamma` as a fraction of the current linewidth.
    pub fn with_transit_ratio(mut self, ratio: f64) -> Self {
        self.transit_rate = ratio * self.linewidth;
        self
    }

    pub fn transit_ratio(&self) -> f64 {
        self.transit_rate / self.linewidth
    }

    /// Optical Rabi frequency `sqrt(k Gamma gamma)`, MHz.
    pub fn rabi_frequency(&self) -> f64 {
        (self.kappa2 * self.linewidth * self.transit_rate).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("linewidth", self.linewidth),
            ("transit_rate", self.transit_rate),
            ("cell_length", self.cell_length),
            ("absorption_length", self.absorption_length),
            ("larmor_coeff", self.larmor_coeff),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.kappa2 >= 0.0 && self.kappa2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa2 must be non-negative, got {}",
                self.kappa2
            )));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        if self.l == 0 {
            return Err(Error::ZeroOam);
        }
        Ok(())
    }
}

/// One point of a rotation-vs-field curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub b_gauss: f64,
    pub theta: f64,
    pub theta_deg: f64,
}

impl DispersionSample {
    fn new(b_gauss: f64, theta: f64) -> Self {
        Self {
            b_gauss,
            theta,
            theta_deg: theta.to_degrees(),
        }
    }
}

/// Signed Larmor frequency in MHz.
pub fn larmor_frequency(b_gauss: f64, params: &MediumParams) -> f64 {
    params.larmor_coeff * b_gauss
}

/// Pattern rotation angle in radians at field `b_gauss`.
///
/// Returns NaN only if the denominator vanishes, which cannot happen for
/// parameters that pass [`MediumParams::validate`].
pub fn rotation_angle(b_gauss: f64, params: &MediumParams) -> f64 {
    let g = params.linewidth;
    let w = larmor_frequency(b_gauss, params) / g;
    let r = params.transit_rate / g;
    let dl = params.detuning / g;
    let k = params.kappa2;

    let w2 = w * w;
    let dl2 = dl * dl;
    let numerator = 8.0 * w2 * (8.0 * w2 + (k + 2.0) - 8.0 * dl2) + r * (4.0 * r * (1.0 - 4.0 * dl2) - k * (k + 2.0));
    let diff = dl2 - w2;
    let denominator = 8.0 * w2 * (32.0 * (k + 3.0) * (w2 + dl2) + 192.0 * diff * diff + (k + 2.0) * (k + 6.0))
        + 2.0 * r * r * ((k + 2.0) * (k + 2.0) + 16.0 * dl2) * ((k + 3.0) + 12.0 * dl2);

    6.0 * w * params.cell_length / (f64::from(params.l) * params.absorption_length) * numerator / denominator
}

/// [`rotation_angle`] with a finiteness check.
pub fn checked_rotation_angle(b_gauss: f64, params: &MediumParams) -> Result<f64> {
    let theta = rotation_angle(b_gauss, params);
    if theta.is_finite() {
        Ok(theta)
    } else {
        Err(Error::NonFinite { b_gauss })
    }
}

/// `d theta / dB` at zero field, in degrees per gauss (signed).
///
/// Closed form of the `B -> 0` limit:
/// `6 d / (l d0) * c * (4 gamma - Gamma k (k + 2)) / (2 gamma Gamma (k + 2)^2 (k + 3))`,
/// valid at zero detuning.  At nonzero detuning the same limit is taken
/// from the full expression with `W -> 0`.
pub fn weak_field_slope(params: &MediumParams) -> f64 {
    let g = params.linewidth;
    let r = params.transit_rate / g;
    let dl = params.detuning / g;
    let k = params.kappa2;
    let dl2 = dl * dl;
    let n0 = r * (4.0 * r * (1.0 - 4.0 * dl2) - k * (k + 2.0));
    let d0 = 2.0 * r * r * ((k + 2.0) * (k + 2.0) + 16.0 * dl2) * ((k + 3.0) + 12.0 * dl2);
    let per_gauss = params.larmor_coeff / g;
    let rad = 6.0 * params.cell_length / (f64::from(params.l) * params.absorption_length) * per_gauss * n0 / d0;
    rad.to_degrees()
}

/// Smallest positive field at which the rotation changes sign.
pub fn find_zero_crossing(params: &MediumParams) -> Result<f64> {
    find_zero_crossing_within(params, DEFAULT_B_MAX_GAUSS)
}

pub fn find_zero_crossing_within(params: &MediumParams, b_max: f64) -> Result<f64> {
    params.validate()?;
    if params.detuning == 0.0 {
        return zero_crossing_closed_form(params)
            .filter(|&b| b <= b_max)
            .ok_or(Error::NoCrossing { b_max });
    }
    let grid = field_grid(params, b_max);
    let theta: Vec<f64> = grid.iter().map(|&b| rotation_angle(b, params)).collect();
    for i in 1..grid.len() {
        if theta[i] == 0.0 {
            return Ok(grid[i]);
        }
        if theta[i - 1].signum() != theta[i].signum() {
            return brent_root(|b| rotation_angle(b, params), grid[i - 1], grid[i], ROOT_TOL_GAUSS)
                .ok_or(Error::NoCrossing { b_max });
        }
    }
    Err(Error::NoCrossing { b_max })
}

/// On resonance the numerator is a quadratic in `x = W^2 / Gamma^2`:
/// `64 x^2 + 8 (k + 2) x - (r k (k + 2) - 4 r^2) = 0`.
fn zero_crossing_closed_form(params: &MediumParams) -> Option<f64> {
    let r = params.transit_rate / params.linewidth;
    let k = params.kappa2;
    let b = 8.0 * (k + 2.0);
    let q = r * k * (k + 2.0) - 4.0 * r * r;
    if q <= 0.0 {
        return None;
    }
    // Positive root written without cancellation.
    let x = 2.0 * q / (b + (b * b + 256.0 * q).sqrt());
    Some(x.sqrt() * params.linewidth / params.larmor_coeff)
}

/// Stationary points of `theta` on `(0, B_max]`, ascending in field.
pub fn find_extrema(params: &MediumParams) -> Result<Vec<DispersionSample>> {
    find_extrema_within(params, DEFAULT_B_MAX_GAUSS)
}

pub fn find_extrema_within(params: &MediumParams, b_max: f64) -> Result<Vec<DispersionSample>> {
    params.validate()?;
    let grid = field_grid(params, b_max);
    let theta: Vec<f64> = grid.iter().map(|&b| rotation_angle(b, params)).collect();
    let mut out = Vec::new();
    for i in 1..grid.len() - 1 {
        let left = theta[i] - theta[i - 1];
        let right = theta[i + 1] - theta[i];
        if left.signum() == right.signum() || left == 0.0 {
            continue;
        }
        let sense = if left > 0.0 { -1.0 } else { 1.0 };
        let b = golden_section_min(
            |b| sense * rotation_angle(b, params),
            grid[i - 1],
            grid[i + 1],
            EXTREMUM_TOL_GAUSS,
        );
        out.push(DispersionSample::new(b, rotation_angle(b, params)));
    }
    Ok(out)
}

/// First positive extremum: the edge of the invertible weak-field branch.
pub fn monotone_branch_edge(params: &MediumParams) -> Result<DispersionSample> {
    find_extrema(params)?.into_iter().next().ok_or(Error::NoExtremum {
        b_max: DEFAULT_B_MAX_GAUSS,
    })
}

/// Evaluate the curve at each field; output order follows input order.
pub fn sweep(params: &MediumParams, b_values: &[f64]) -> Vec<DispersionSample> {
    b_values
        .par_iter()
        .map(|&b| DispersionSample::new(b, rotation_angle(b, params)))
        .collect()
}

/// Geometric grid reaching well below the field at which `W ~ gamma`.
fn field_grid(params: &MediumParams, b_max: f64) -> Vec<f64> {
    let knee = params.transit_rate / params.larmor_coeff;
    let lo = 1e-4 * knee.min(b_max);
    geomspace(lo, b_max, SCAN_POINTS)
}
