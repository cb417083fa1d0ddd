//! The dispersion-like rotation curve and its landmarks.
//!
//! `cargo run --example rotation_curve -- 3` uses l = 3.

use oam_magnetometry::nmor_model::{
    find_extrema, find_zero_crossing, monotone_branch_edge, rotation_angle, weak_field_slope, MediumParams,
};

fn main() -> oam_magnetometry::Result<()> {
    let l = std::env::args().nth(1).map_or(Ok(2), |s| s.parse()).unwrap_or(2);
    let p = MediumParams::rb87_d1(l);
    p.validate()?;

    println!("l = {l}");
    println!("weak-field slope   {:10.4} deg/G", weak_field_slope(&p));
    let edge = monotone_branch_edge(&p)?;
    println!(
        "monotone branch    |B| < {:.5} G (theta {:.3} deg)",
        edge.b_gauss, edge.theta_deg
    );
    println!("zero crossing      {:10.4} G", find_zero_crossing(&p)?);
    for e in find_extrema(&p)? {
        println!("extremum           {:10.4} G at {:8.3} deg", e.b_gauss, e.theta_deg);
    }

    println!("\n{:>10} {:>12}", "B (G)", "theta (deg)");
    for b in [0.01, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0, 15.0, 50.0, 138.0, 500.0] {
        println!("{b:>10} {:>12.5}", rotation_angle(b, &p).to_degrees());
    }
    Ok(())
}
