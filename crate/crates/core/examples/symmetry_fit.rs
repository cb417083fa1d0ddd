//! Locate the true zero field from a coil sweep with a hidden offset.

use oam_magnetometry::magnetometer::{fit_symmetry_center, FieldSweepRecord};
use oam_magnetometry::nmor_model::{rotation_angle, MediumParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> oam_magnetometry::Result<()> {
    let p = MediumParams::default();
    let hidden = 0.2156;
    let noise = Normal::new(0.0, 0.045).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let points = (0..41)
        .map(|i| {
            let coil = -0.8 + 0.05 * i as f64;
            // Measured angles are reported with a positive slope.
            let theta = -rotation_angle(coil + hidden, &p).to_degrees() + noise.sample(&mut rng);
            (coil, theta)
        })
        .collect();
    let data = FieldSweepRecord::new(points);
    print!("{}", data.to_csv().lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("\n... {} points\n", data.points.len());

    let fit = fit_symmetry_center(&data, &p)?;
    // The curve is odd about coil = -hidden.
    print!("{fit}");
    println!("background field = {:.5} G (injected {hidden})", -fit.b_background);
    Ok(())
}
