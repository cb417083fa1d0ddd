//! Coarse-to-fine correlation scan on a noisy rotated pattern.

use oam_magnetometry::oam_state::ScalarPattern;
use oam_magnetometry::pattern_image::{add_noise, render, ImageGeometry, NoiseSpec};
use oam_magnetometry::rotation_estimator::{estimate_rotation, EstimatorConfig};

fn main() -> oam_magnetometry::Result<()> {
    let l = 2;
    let g = ImageGeometry::default();
    let injected = 12.7204_f64;
    let reference = render(&ScalarPattern::new(l, 0.0)?, &g)?;
    let target = add_noise(
        &render(&ScalarPattern::new(l, injected.to_radians())?, &g)?,
        &NoiseSpec::gaussian(0.02, 1),
    )?;

    for ladder in [
        vec![4.5],
        vec![4.5, 0.45],
        vec![4.5, 0.45, 0.045],
        vec![4.5, 0.45, 0.045, 0.0045],
    ] {
        for refine in [false, true] {
            let config = EstimatorConfig {
                ladder: ladder.clone(),
                refine,
                ..EstimatorConfig::default()
            };
            let est = estimate_rotation(&reference, &target, &config, l)?;
            println!(
                "ladder {:<24} refine {:<5} -> {:9.5} deg (error {:+.5}, peak {:.6})",
                format!("{ladder:?}"),
                refine,
                est.angle,
                est.angle - injected,
                est.peak_score
            );
        }
    }
    Ok(())
}
