//! Read a field off a measured rotation, and the resolution at that point.

use oam_magnetometry::magnetometer::{invert_theta, precision, DEFAULT_ANGLE_ACCURACY_DEG};
use oam_magnetometry::nmor_model::{monotone_branch_edge, MediumParams};

fn main() -> oam_magnetometry::Result<()> {
    let p = MediumParams::default();
    let edge = monotone_branch_edge(&p)?;
    println!("invertible for |theta| < {:.3} deg", edge.theta_deg.abs());

    for theta_deg in [-0.5, -5.0, -15.0, -30.0, -39.0, 10.0] {
        let b = invert_theta(f64::to_radians(theta_deg), &p)?;
        let db = precision(DEFAULT_ANGLE_ACCURACY_DEG, &p, b)?;
        println!("theta {theta_deg:7.2} deg -> B = {b:+.6} G +- {:.3} mG", 1e3 * db);
    }

    match invert_theta(f64::to_radians(45.0), &p) {
        Ok(b) => println!("unexpected: {b}"),
        Err(e) => println!("45 deg: {e}"),
    }
    Ok(())
}
