//! Light state through the optical pipeline.
//!
//! A vector beam enters the vapor as the balanced hybrid superposition
//! `(|L>|l> + |R>|-l>)/sqrt(2)`. Circular birefringence adds `+dphi/2` to the
//! `|L>` branch and `-dphi/2` to the `|R>` branch. Projecting both branches
//! onto horizontal polarization leaves the scalar field
//! `cos(l(theta + alpha)) E(r)` with `theta = dphi / (2l)`, i.e. a fan of
//! `2|l|` dark lines whose orientation tracks the birefringent phase.
//!
//! Angles follow one convention throughout the crate: `alpha` is the
//! azimuth measured counter-clockwise from +x with y pointing up. Phases are
//! kept unwrapped so `theta` is single-valued.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Fraction of the input power that survives the horizontal projection.
///
/// The projected state carries a 1/2 prefactor on each branch; only the
/// normalized shape is tracked elsewhere in this module.
pub const POST_SELECTION_EFFICIENCY: f64 = 0.5;

/// Two-branch superposition of spin and orbital angular momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    /// OAM carried by the `|L>` branch; the `|R>` branch carries `-l`.
    pub l: i32,
    /// Phase of the `|L> (x) |l>` coefficient, radians.
    pub phase_l: f64,
    /// Phase of the `|R> (x) |-l>` coefficient, radians.
    pub phase_r: f64,
    pub amplitude_l: f64,
    pub amplitude_r: f64,
}

impl HybridState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitude_l * self.amplitude_l + self.amplitude_r * self.amplitude_r
    }
}

/// Balanced superposition with zero phases.
pub fn initial_state(l: i32) -> Result<HybridState> {
    if l == 0 {
        return Err(Error::ZeroOam);
    }
    Ok(HybridState {
        l,
        phase_l: 0.0,
        phase_r: 0.0,
        amplitude_l: FRAC_1_SQRT_2,
        amplitude_r: FRAC_1_SQRT_2,
    })
}

/// Refractive indices and path length of a circularly birefringent medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirefringenceSetting {
    pub n_left: f64,
    pub n_right: f64,
    /// Propagation length in cm.
    pub length_cm: f64,
    /// Vacuum wavelength in nm.
    pub wavelength_nm: f64,
}

impl BirefringenceSetting {
    pub const DEFAULT_WAVELENGTH_NM: f64 = 795.0;

    pub fn new(n_left: f64, n_right: f64, length_cm: f64, wavelength_nm: f64) -> Result<Self> {
        if !(length_cm > 0.0 && length_cm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "propagation length must be positive, got {length_cm} cm"
            )));
        }
        if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength_nm} nm"
            )));
        }
        Ok(Self {
            n_left,
            n_right,
            length_cm,
            wavelength_nm,
        })
    }

    /// Setting at the default 795 nm wavelength.
    pub fn at_795nm(n_left: f64, n_right: f64, length_cm: f64) -> Result<Self> {
        Self::new(n_left, n_right, length_cm, Self::DEFAULT_WAVELENGTH_NM)
    }
}

/// Relative phase `2 pi (n_L - n_R) d / lambda` in radians.
pub fn phase_shift(setting: &BirefringenceSetting) -> f64 {
    let length_m = setting.length_cm * 1e-2;
    let wavelength_m = setting.wavelength_nm * 1e-9;
    2.0 * PI * (setting.n_left - setting.n_right) * length_m / wavelength_m
}

/// Advance the `|L>` branch by `delta_phi/2` and retard `|R>` by the same.
pub fn apply_birefringence(state: &HybridState, delta_phi: f64) -> HybridState {
    HybridState {
        phase_l: state.phase_l + 0.5 * delta_phi,
        phase_r: state.phase_r - 0.5 * delta_phi,
        ..*state
    }
}

/// Radial amplitude `E(r)`, with `r` in beam-waist units.
#[derive(Clone)]
pub enum RadialProfile {
    /// `(r/w)^|l| exp(-r^2/w^2)`, the lowest-radial-order ring.
    Annular {
        waist: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl RadialProfile {
    pub fn amplitude(&self, l: i32, r: f64) -> f64 {
        match self {
            RadialProfile::Annular { waist } => {
                let s = r / waist;
                s.powi(l.abs()) * (-s * s).exp()
            }
            RadialProfile::Custom(f) => f(r),
        }
    }
}

impl Default for RadialProfile {
    fn default() -> Self {
        RadialProfile::Annular { waist: 1.0 }
    }
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Annular { waist } => f.debug_struct("Annular").field("waist", waist).finish(),
            RadialProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Horizontal-polarization field after the analyzer.
#[derive(Debug, Clone)]
pub struct ScalarPattern {
    pub l: i32,
    /// Pattern rotation angle, radians.
    pub theta: f64,
    pub profile: RadialProfile,
}

impl ScalarPattern {
    pub fn new(l: i32, theta: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::ZeroOam);
        }
        Ok(Self {
            l,
            theta,
            profile: RadialProfile::default(),
        })
    }

    pub fn with_profile(mut self, profile: RadialProfile) -> Self {
        self.profile = profile;
        self
    }

    /// Azimuthal factor `cos^2(l (theta + alpha))`.
    #[inline]
    pub fn azimuthal_factor(&self, alpha: f64) -> f64 {
        let c = (f64::from(self.l) * (self.theta + alpha)).cos();
        c * c
    }

    /// Azimuths of the `2|l|` dark lines in `[0, 2 pi)`, ascending.
    pub fn dark_lines(&self) -> Vec<f64> {
        let l = f64::from(self.l.abs());
        // cos(l(theta+alpha)) = 0  <=>  alpha = -theta + (k + 1/2) pi / |l|
        let mut out: Vec<f64> = (0..2 * self.l.unsigned_abs())
            .map(|k| (-self.theta + (f64::from(k) + 0.5) * PI / l).rem_euclid(2.0 * PI))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Project onto horizontal polarization: `theta = (phase_L - phase_R) / 2l`.
///
/// Assumes balanced amplitudes, as produced by [`initial_state`]; unequal
/// amplitudes would only lower fringe visibility and are not modelled.
pub fn project_horizontal(state: &HybridState) -> ScalarPattern {
    ScalarPattern {
        l: state.l,
        theta: (state.phase_l - state.phase_r) / (2.0 * f64::from(state.l)),
        profile: RadialProfile::default(),
    }
}

/// `cos^2(l(theta + alpha)) E(r)^2`.
pub fn intensity_at(pattern: &ScalarPattern, r: f64, alpha: f64) -> f64 {
    let e = pattern.profile.amplitude(pattern.l, r);
    pattern.azimuthal_factor(alpha) * e * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn initial_state_is_balanced() {
        for l in [2, 1, -3] {
            let s = initial_state(l).unwrap();
            assert_eq!(s.l, l);
            assert_eq!((s.phase_l, s.phase_r), (0.0, 0.0));
            assert!((s.amplitude_l - 0.5f64.sqrt()).abs() < 1e-15);
            assert!((s.amplitude_r - 0.5f64.sqrt()).abs() < 1e-15);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        }
        assert!(matches!(initial_state(0), Err(Error::ZeroOam)));
    }

    #[test]
    fn phase_shift_values() {
        let s = BirefringenceSetting::at_795nm(1.000_1, 1.000_1, 5.0).unwrap();
        assert_eq!(phase_shift(&s), 0.0);

        // 2 pi * 1e-8 * 0.05 m / 795e-9 m, worked by hand: 3.9518e-3 rad
        let s = BirefringenceSetting::at_795nm(1.0 + 1e-8, 1.0, 5.0).unwrap();
        let hand = 2.0 * std::f64::consts::PI * 5e-10 / 7.95e-7;
        assert!((phase_shift(&s) - hand).abs() < 1e-6);
        assert!((phase_shift(&s) - 3.952e-3).abs() < 1e-6);

        let s2 = BirefringenceSetting::at_795nm(1.0 + 1e-8, 1.0, 10.0).unwrap();
        assert!((phase_shift(&s2) - 2.0 * phase_shift(&s)).abs() < 1e-12);
    }

    #[test]
    fn setting_rejects_bad_lengths() {
        assert!(BirefringenceSetting::new(1.0, 1.0, 0.0, 795.0).is_err());
        assert!(BirefringenceSetting::new(1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn birefringence_phases() {
        let s = initial_state(2).unwrap();
        assert_eq!(apply_birefringence(&s, 0.0), s);
        let t = apply_birefringence(&s, PI);
        assert_eq!((t.phase_l, t.phase_r), (PI / 2.0, -PI / 2.0));
        assert_eq!((t.amplitude_l, t.amplitude_r), (s.amplitude_l, s.amplitude_r));
    }

    #[test]
    fn projection_theta() {
        let s = initial_state(2).unwrap();
        assert_eq!(project_horizontal(&s).theta, 0.0);
        let p2 = project_horizontal(&apply_birefringence(&s, 0.4));
        assert!((p2.theta - 0.1).abs() < 1e-15);
        let p1 = project_horizontal(&apply_birefringence(&initial_state(1).unwrap(), 0.4));
        assert!((p1.theta - 0.2).abs() < 1e-15);
        assert!((p1.theta - 2.0 * p2.theta).abs() < 1e-15);
    }

    #[test]
    fn zero_phase_maxima_and_zeros() {
        let p = ScalarPattern::new(2, 0.0).unwrap();
        for k in 0..4 {
            let a = f64::from(k) * PI / 2.0;
            assert!((p.azimuthal_factor(a) - 1.0).abs() < 1e-12);
        }
        let zeros = p.dark_lines();
        let expected = [PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0];
        assert_eq!(zeros.len(), 4);
        for (z, e) in zeros.iter().zip(expected) {
            assert!((z - e).abs() < 1e-12);
            assert!(intensity_at(&p, 1.0, *z) < 1e-30);
        }
    }

    #[test]
    fn bright_and_dark_relative_to_theta() {
        let p = ScalarPattern::new(3, 0.37).unwrap();
        let e = p.profile.amplitude(3, 1.2);
        assert!((intensity_at(&p, 1.2, -0.37) - e * e).abs() < 1e-15);
        assert!(intensity_at(&p, 1.2, -0.37 + PI / 6.0) < 1e-30);
    }

    #[test]
    fn vortex_core_is_dark() {
        let p = ScalarPattern::new(1, 0.0).unwrap();
        assert_eq!(intensity_at(&p, 0.0, 0.0), 0.0);
    }

    fn sign_changes(l: i32, theta: f64) -> usize {
        let n = 20_000;
        let v: Vec<f64> = (0..n)
            .map(|i| (f64::from(l) * (theta + 2.0 * PI * i as f64 / n as f64)).cos())
            .collect();
        (0..n).filter(|&i| v[i].signum() != v[(i + 1) % n].signum()).count()
    }

    proptest! {
        #[test]
        fn normalization_preserved(l in prop::sample::select(vec![-3, -2, -1, 1, 2, 3]),
                                   dphi in -10.0f64..10.0) {
            let s = apply_birefringence(&initial_state(l).unwrap(), dphi);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn theta_is_linear_in_phase(l in prop::sample::select(vec![-3, -2, -1, 1, 2, 3]),
                                    dphi in -10.0f64..10.0) {
            let p = project_horizontal(&apply_birefringence(&initial_state(l).unwrap(), dphi));
            let expected = dphi / (2.0 * f64::from(l));
            prop_assert!((p.theta - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
        }

        #[test]
        fn phase_additivity(d1 in -5.0f64..5.0, d2 in -5.0f64..5.0) {
            let s = initial_state(2).unwrap();
            let a = apply_birefringence(&apply_birefringence(&s, d1), d2);
            let b = apply_birefringence(&s, d1 + d2);
            prop_assert!((a.phase_l - b.phase_l).abs() < 1e-12);
            prop_assert!((a.phase_r - b.phase_r).abs() < 1e-12);
        }

        #[test]
        fn dark_line_count(l in prop::sample::select(vec![-3, -2, -1, 1, 2, 3]),
                           theta in -3.0f64..3.0) {
            // Offset avoids a grid point landing exactly on a zero.
            prop_assert_eq!(sign_changes(l, theta + 1.234e-7), 2 * l.unsigned_abs() as usize);
        }

        #[test]
        fn rotation_is_azimuthal_shift(l in 1i32..4, theta in -3.0f64..3.0,
                                       delta in -3.0f64..3.0, r in 0.0f64..3.0,
                                       alpha in 0.0f64..6.3) {
            let a = ScalarPattern::new(l, theta + delta).unwrap();
            let b = ScalarPattern::new(l, theta).unwrap();
            prop_assert!((intensity_at(&a, r, alpha) - intensity_at(&b, r, alpha + delta)).abs() < 1e-12);
        }
    }
}
