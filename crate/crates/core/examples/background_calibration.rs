//! Background field from the pattern angle measured with the coil off.

use oam_magnetometry::magnetometer::{calibrate_offset, CalibrationMethod, CalibrationOptions};
use oam_magnetometry::nmor_model::MediumParams;

fn main() -> oam_magnetometry::Result<()> {
    let p = MediumParams::default();
    let offset_deg = 12.7204;

    let measured_slope = CalibrationOptions {
        slope_override: Some(59.0),
        ..CalibrationOptions::default()
    };
    let cases = [
        (CalibrationMethod::OffsetSlope, measured_slope, "slope 59 deg/G"),
        (
            CalibrationMethod::OffsetSlope,
            CalibrationOptions::default(),
            "model slope",
        ),
        (
            CalibrationMethod::FullInversion,
            CalibrationOptions::default(),
            "model curve",
        ),
    ];
    for (method, options, label) in cases {
        let r = calibrate_offset(offset_deg, &p, method, &options)?;
        println!(
            "{:<15} {label:<15} B = {:.4} +- {:.4} G",
            method.as_str(),
            r.b_background,
            r.uncertainty
        );
    }
    Ok(())
}
